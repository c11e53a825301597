#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "lineamorph/pipeline.hpp"
#include "report_detail.hpp"

namespace lineamorph {

using nlohmann::json;

namespace detail {

json landmark_widths_json(const LandmarkWidths& lw) {
    auto one = [](const LandmarkWidth& w) {
        return json{{"width_mm", w.width_mm}, {"z_mm", w.z_mm}, {"t", w.t}, {"status", to_string(w.status)}};
    };
    return json{{"halfway_xiph_umb", one(lw.halfway_xiph_umb)},
                {"above3cm", one(lw.above3cm)},
                {"at_umbilicus", one(lw.at_umbilicus)},
                {"below2cm", one(lw.below2cm)},
                {"halfway_umb_pubis", one(lw.halfway_umb_pubis)},
                {"umbilicus_t", lw.umbilicus_t}};
}

json metrics_record_json(const MetricsRecord& m) {
    return json{{"length_mm", m.length_mm},
                {"sagitta_mm", m.sagitta_mm},
                {"max_width_mm", m.max_width_mm},
                {"max_width_t", m.max_width_t},
                {"max_width_interpolated", m.max_width_interpolated},
                {"max_ird_mm", m.max_ird_mm},
                {"missing_fraction", m.missing_fraction},
                {"landmark_widths", landmark_widths_json(m.landmarks)}};
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

std::string metrics_json(const SubjectMeasurement& m, OffsetMode mode) {
    json samples = json::array();
    for (const auto& s : m.profile.samples) {
        samples.push_back(json{{"slice", s.slice},
                               {"z_mm", s.z_mm},
                               {"t", s.t},
                               {"width_mm", s.width_mm},
                               {"ird_mm", s.ird_mm},
                               {"status", to_string(s.status)}});
    }
    json normalized = json::object();
    if (m.profile.normalized) {
        normalized = json{{"t", m.profile.normalized->t},
                          {"width_mm", m.profile.normalized->width_mm},
                          {"ird_mm", m.profile.normalized->ird_mm}};
    }
    json curve = json::array();
    for (std::size_t i = 0; i < m.curve.points.size(); ++i) {
        const Vec2 p = m.curve.absolute(i);
        curve.push_back({p.x, p.y});
    }
    json j{{"offset_mode", mode == OffsetMode::Arc ? "arc" : "axial"},
           {"metrics", detail::metrics_record_json(m.metrics)},
           {"profile", {{"samples", samples}, {"normalized", normalized}}},
           {"midline_yz_mm", curve}};
    return j.dump(2) + "\n";
}

std::string profile_csv(const WidthProfile& profile) {
    std::ostringstream out;
    out << "z_mm,t,width_mm,ird_mm,status\n";
    char buf[128];
    for (const auto& s : profile.samples) {
        // Millimetre rounding happens here and nowhere else.
        std::snprintf(buf, sizeof buf, "%ld,%.4f,%ld,%ld,", std::lround(s.z_mm), s.t, std::lround(s.width_mm),
                      std::lround(s.ird_mm));
        out << buf << to_string(s.status) << '\n';
    }
    return out.str();
}

namespace {

const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string group_curve_svg(const std::string& title, const std::vector<GroupCurve>& curves,
                            const std::vector<LandmarkTick>& ticks) {
    const double W = 820, H = 520, left = 70, right = 170, top = 50, bottom = 70;
    const double pw = W - left - right, ph = H - top - bottom;
    double ymax = 1.0;
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.mean.size(); ++i)
            ymax = std::max(ymax, c.mean[i] + (i < c.sd.size() ? c.sd[i] : 0.0));
    ymax = std::ceil(ymax / 10.0) * 10.0;
    auto X = [&](double t) { return left + t * pw; };
    auto Y = [&](double w) { return top + ph - std::max(0.0, w) / ymax * ph; };

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << detail::xml_escape(title) << "</text>\n";
    // Axes.
    s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 10; ++i) {
        const double t = i / 10.0;
        s << "<line x1=\"" << fmt(X(t)) << "\" y1=\"" << top + ph << "\" x2=\"" << fmt(X(t)) << "\" y2=\""
          << top + ph + 5 << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << fmt(X(t)) << "\" y=\"" << top + ph + 20
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t).substr(0, 3)
          << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double w = ymax * i / 5.0;
        s << "<text x=\"" << left - 8 << "\" y=\"" << fmt(Y(w) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(w) << "</text>\n";
    }
    s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 20
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">normalized height t "
         "(xiphoid 0, pubis 1)</text>\n"
      << "<text x=\"18\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 18 " << top + ph / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">width (mm)</text>\n";
    for (const auto& tk : ticks) {
        s << "<line x1=\"" << fmt(X(tk.t)) << "\" y1=\"" << top << "\" x2=\"" << fmt(X(tk.t)) << "\" y2=\""
          << top + ph << "\" stroke=\"#999999\" stroke-dasharray=\"3,3\"/>\n"
          << "<text x=\"" << fmt(X(tk.t)) << "\" y=\"" << top - 6 << "\" transform=\"rotate(-30 " << fmt(X(tk.t))
          << ' ' << top - 6 << ")\" font-family=\"sans-serif\" font-size=\"9\">" << detail::xml_escape(tk.label)
          << "</text>\n";
    }
    for (std::size_t g = 0; g < curves.size(); ++g) {
        const auto& c = curves[g];
        const char* col = kPalette[g % 6];
        const std::size_t n = c.mean.size();
        if (n == 0) continue;
        auto t_of = [&](std::size_t i) { return n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0; };
        s << "<polygon fill=\"" << col << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < n; i += 5) s << fmt(X(t_of(i))) << ',' << fmt(Y(c.mean[i] + c.sd[i])) << ' ';
        for (std::size_t i = n; i-- > 0;) {
            if (i % 5 != 0) continue;
            s << fmt(X(t_of(i))) << ',' << fmt(Y(c.mean[i] - c.sd[i])) << ' ';
        }
        s << "\"/>\n<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < n; i += 5) s << fmt(X(t_of(i))) << ',' << fmt(Y(c.mean[i])) << ' ';
        s << "\"/>\n";
        const double ly = top + 20 + 22.0 * static_cast<double>(g);
        s << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
          << "\" stroke=\"" << col << "\" stroke-width=\"3\"/>\n"
          << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
          << detail::xml_escape(c.name) << " (n=" << c.n << ")</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

namespace {

// Diverging palette: white at 0, blue at +1, red at -1.
std::string corr_color(double r) {
    const double a = std::clamp(std::abs(r), 0.0, 1.0);
    const int end[2][3] = {{33, 102, 172}, {178, 24, 43}};
    const int* e = r >= 0.0 ? end[0] : end[1];
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(255 + a * (e[0] - 255))),
                  static_cast<int>(std::lround(255 + a * (e[1] - 255))),
                  static_cast<int>(std::lround(255 + a * (e[2] - 255))));
    return buf;
}

}  // namespace

std::string correlation_svg(const CorrelationMatrix& m) {
    const std::size_t k = m.names.size();
    const double cell = 36, label = 200;
    const double size = label + cell * static_cast<double>(k) + 20;
    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << ' ' << size << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < k; ++i) {
        const double y = label + cell * static_cast<double>(i);
        const double x = label + cell * static_cast<double>(i);
        s << "<text x=\"" << label - 6 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(m.names[i])
          << "</text>\n"
          << "<text x=\"" << x + cell / 2 << "\" y=\"" << label - 6 << "\" transform=\"rotate(-60 " << x + cell / 2
          << ' ' << label - 6 << ")\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(m.names[i])
          << "</text>\n";
    }
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double x = label + cell * static_cast<double>(j);
            const double y = label + cell * static_cast<double>(i);
            const bool def = m.defined[i][j];
            s << "<rect class=\"cell\" data-row=\"" << i << "\" data-col=\"" << j << "\" x=\"" << x << "\" y=\"" << y
              << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
              << (def ? corr_color(m.r[i][j]) : std::string("#bdbdbd")) << "\" stroke=\"white\"/>\n";
            s << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
              << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">"
              << (def ? fmt(m.r[i][j]) : std::string("n/a")) << "</text>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace lineamorph
