#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "container.hpp"
#include "lineamorph/phantom.hpp"

namespace lineamorph {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kMarginXY = 6;
constexpr int kMarginZ = 4;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::SpecInvalid, msg, "generate_phantom"); }

double knot_width(const std::vector<WidthKnot>& k, double t) {
    if (t <= k.front().t) return k.front().width_mm;
    if (t >= k.back().t) return k.back().width_mm;
    for (std::size_t i = 1; i < k.size(); ++i) {
        if (t > k[i].t) continue;
        const double dt = k[i].t - k[i - 1].t;
        const double a = dt > 0.0 ? (t - k[i - 1].t) / dt : 1.0;
        return k[i - 1].width_mm + a * (k[i].width_mm - k[i - 1].width_mm);
    }
    return k.back().width_mm;
}

double apex_t(const std::vector<WidthKnot>& k) {
    double wmax = 0.0;
    for (const auto& q : k) wmax = std::max(wmax, q.width_mm);
    double lo = 2.0, hi = -1.0;
    for (const auto& q : k) {
        if (q.width_mm != wmax) continue;
        lo = std::min(lo, q.t);
        hi = std::max(hi, q.t);
    }
    const double lo_c = std::clamp(lo, 0.0, 1.0);
    const double hi_c = std::clamp(hi, 0.0, 1.0);
    // A plateau or apex touching an insertion has no interior maximum.
    if (lo_c <= 0.0 || hi_c >= 1.0) return 0.5;
    return 0.5 * (lo_c + hi_c);
}

// Sagittal arc of chord c and sagitta s in the (y, z) plane, ends at y = y0.
struct Arc {
    double c = 0.0, s = 0.0, R = 0.0, phi0 = 0.0;
    double y0 = 0.0, zp = 0.0, zx = 0.0;

    bool straight() const { return s == 0.0; }
    double zm() const { return 0.5 * (zp + zx); }
    double length() const { return straight() ? c : 2.0 * R * phi0; }
    double sign() const { return s < 0.0 ? -1.0 : 1.0; }

    double phi_at_z(double z) const { return std::asin(std::clamp((z - zm()) / R, -1.0, 1.0)); }
    double t_at_z(double z) const {
        if (straight()) return (zx - z) / c;
        return (phi0 - phi_at_z(z)) / (2.0 * phi0);
    }
    double z_at_t(double t) const {
        if (straight()) return zx - t * c;
        return zm() + R * std::sin(phi0 - 2.0 * phi0 * t);
    }
    double y_at_z(double z) const {
        if (straight()) return y0;
        return y0 + sign() * (R * std::cos(phi_at_z(z)) - (R - std::abs(s)));
    }
    double slope_at_z(double z) const {
        if (straight()) return 0.0;
        return -sign() * std::tan(phi_at_z(z));
    }
};

Arc make_arc(double c, double s) {
    Arc a;
    a.c = c;
    a.s = s;
    if (s != 0.0) {
        a.R = (c * c / 4.0 + s * s) / (2.0 * std::abs(s));
        a.phi0 = std::asin(std::min(1.0, c / (2.0 * a.R)));
    }
    return a;
}

GroundTruth truth_of(const PhantomSpec& spec, const Arc& arc) {
    GroundTruth g;
    g.chord_mm = spec.length_mm;
    g.length_mm = arc.length();
    g.sagitta_mm = spec.sagitta_mm;
    g.radius_mm = arc.straight() ? std::numeric_limits<double>::infinity() : arc.R;
    g.wrap_radius_mm = spec.wrap_radius_mm;
    g.width_fn = spec.width_fn;
    g.notch = spec.notch;
    g.umbilicus_t = spec.umbilicus_t.value_or(apex_t(spec.width_fn));
    g.z_xiphoid = arc.zx;
    g.z_pubis = arc.zp;
    return g;
}

}  // namespace

std::vector<WidthKnot> PhantomSpec::constant(double w) { return {{0.0, w}, {1.0, w}}; }
std::vector<WidthKnot> PhantomSpec::taper(double w0, double w1) { return {{0.0, w0}, {1.0, w1}}; }
std::vector<WidthKnot> PhantomSpec::rhombus(double peak, double t_peak, double end) {
    return {{0.0, end}, {t_peak, peak}, {1.0, end}};
}

double GroundTruth::width(double t) const {
    if (notch && t >= notch->t0 && t <= notch->t1) return 0.0;
    return knot_width(width_fn, t);
}

double GroundTruth::ird(double t) const {
    const double w = width(t);
    if (std::isinf(wrap_radius_mm)) return w;
    return 2.0 * wrap_radius_mm * std::sin(w / (2.0 * wrap_radius_mm));
}

double GroundTruth::t_at_z(double z_mm) const {
    Arc a = make_arc(chord_mm, sagitta_mm);
    a.zp = z_pubis;
    a.zx = z_xiphoid;
    return a.t_at_z(z_mm);
}

double GroundTruth::z_at_t(double t) const {
    Arc a = make_arc(chord_mm, sagitta_mm);
    a.zp = z_pubis;
    a.zx = z_xiphoid;
    return a.z_at_t(t);
}

double GroundTruth::max_width_mm() const {
    double m = 0.0;
    for (const auto& k : width_fn) m = std::max(m, width(std::clamp(k.t, 0.0, 1.0)));
    for (int i = 0; i <= 10000; ++i) m = std::max(m, width(i / 10000.0));
    return m;
}

double GroundTruth::max_ird_mm() const {
    double m = 0.0;
    for (const auto& k : width_fn) m = std::max(m, ird(std::clamp(k.t, 0.0, 1.0)));
    for (int i = 0; i <= 10000; ++i) m = std::max(m, ird(i / 10000.0));
    return m;
}

LandmarkWidths GroundTruth::landmark_widths() const {
    const double u = umbilicus_t;
    auto at = [&](double t) {
        LandmarkWidth w;
        w.t = t;
        w.width_mm = width(t);
        w.z_mm = z_at_t(t);
        w.status = SampleStatus::Measured;
        return w;
    };
    LandmarkWidths out;
    out.halfway_xiph_umb = at(0.5 * u);
    out.above3cm = at(u - 30.0 / length_mm);
    out.at_umbilicus = at(u);
    out.below2cm = at(u + 20.0 / length_mm);
    out.halfway_umb_pubis = at(0.5 * (u + 1.0));
    out.umbilicus_t = u;
    return out;
}

void validate_spec(const PhantomSpec& spec) {
    if (!(spec.length_mm > 0.0) || !std::isfinite(spec.length_mm)) invalid("length_mm must be positive");
    if (!std::isfinite(spec.sagitta_mm) || !(std::abs(spec.sagitta_mm) < spec.length_mm / 2.0)) {
        invalid("|sagitta_mm| must be below half the chord");
    }
    if (spec.width_fn.empty()) invalid("width_fn needs at least one knot");
    for (std::size_t i = 0; i < spec.width_fn.size(); ++i) {
        const auto& k = spec.width_fn[i];
        if (!(k.width_mm >= 0.0) || !std::isfinite(k.width_mm)) invalid("width_fn values must be >= 0");
        if (!std::isfinite(k.t)) invalid("width_fn t must be finite");
        if (i > 0 && !(k.t >= spec.width_fn[i - 1].t)) invalid("width_fn knots must be sorted by t");
    }
    const auto& s = spec.spacing_mm;
    if (!(s.x > 0.0 && s.y > 0.0 && s.z > 0.0)) invalid("spacing_mm must be positive");
    if (!(spec.thickness_vox > 0.0)) invalid("thickness_vox must be positive");
    if (!(spec.noise_vox >= 0.0)) invalid("noise_vox must be >= 0");
    if (!(spec.wrap_radius_mm > 0.0)) invalid("wrap_radius_mm must be positive");
    double wmax = 0.0;
    for (const auto& k : spec.width_fn) wmax = std::max(wmax, k.width_mm);
    if (std::isfinite(spec.wrap_radius_mm) && wmax / (2.0 * spec.wrap_radius_mm) >= std::numbers::pi / 2.0) {
        invalid("width exceeds half the wrap cylinder circumference");
    }
    if (spec.notch && !(spec.notch->t0 <= spec.notch->t1)) invalid("notch needs t0 <= t1");
    if (spec.subres) {
        const auto& d = *spec.subres;
        if (!(d.fraction >= 0.0 && d.fraction < 1.0)) invalid("subres fraction must lie in [0, 1)");
        if (d.max_run < 1) invalid("subres max_run must be >= 1");
    }
    if (spec.umbilicus_t && !(*spec.umbilicus_t > 0.0 && *spec.umbilicus_t < 1.0)) {
        invalid("umbilicus_t must lie strictly inside (0, 1)");
    }
}

Phantom generate_phantom(const PhantomSpec& spec) {
    validate_spec(spec);
    const Vec3 sp = spec.spacing_mm;
    const double h = spec.thickness_vox * std::min(sp.x, sp.y) / 2.0;
    const double jit = spec.noise_vox * std::min(sp.x, sp.y);
    const bool flat = std::isinf(spec.wrap_radius_mm);
    const double rw = spec.wrap_radius_mm;

    double wmax = 0.0;
    for (const auto& k : spec.width_fn) wmax = std::max(wmax, k.width_mm);
    const double half_x = flat ? wmax / 2.0 : rw * std::sin(wmax / (2.0 * rw));
    const double depth = flat ? 0.0 : rw * (1.0 - std::cos(wmax / (2.0 * rw)));

    Arc arc = make_arc(spec.length_mm, spec.sagitta_mm);
    const double end_slope = arc.straight() ? 0.0 : std::tan(arc.phi0);
    const double h_max = h * std::sqrt(1.0 + end_slope * end_slope);

    const int ic = kMarginXY + static_cast<int>(std::ceil((half_x + h_max + jit) / sp.x));
    const double xc = (ic + 0.5) * sp.x;
    const int nx = 2 * ic + 2;

    const double ylo = std::min(0.0, spec.sagitta_mm) - depth - h_max - jit;
    const double yhi = std::max(0.0, spec.sagitta_mm) + h_max + jit;
    arc.y0 = (std::ceil(kMarginXY - ylo / sp.y) + 0.5) * sp.y;
    const int ny = static_cast<int>(std::ceil((arc.y0 + yhi) / sp.y)) + kMarginXY + 1;

    arc.zp = kMarginZ * sp.z;
    arc.zx = arc.zp + spec.length_mm;
    const int nz = static_cast<int>(std::floor(arc.zx / sp.z)) + kMarginZ + 1;

    Phantom out;
    out.truth = truth_of(spec, arc);
    GroundTruth& gt = out.truth;
    out.mask = VoxelMask({nx, ny, nz}, sp, {0.0, 0.0, 0.0});
    VoxelMask& m = out.mask;

    std::vector<int> in_range;
    for (int k = 0; k < nz; ++k) {
        const double z = k * sp.z;
        if (z >= arc.zp && z <= arc.zx) in_range.push_back(k);
    }

    auto rasterize = [&](int k) {
        const double z = k * sp.z;
        const double t = arc.t_at_z(z);
        const double w = gt.width(t);
        if (!(w > 0.0)) return;
        const double yk = arc.y_at_z(z);
        const double sl = arc.slope_at_z(z);
        const double hk = h * std::sqrt(1.0 + sl * sl);
        std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(k));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double hx = flat ? w / 2.0 : rw * std::sin(std::min(w / (2.0 * rw), std::numbers::pi / 2.0));
        const double dy = flat ? 0.0 : rw * (1.0 - std::cos(w / (2.0 * rw)));
        const int i0 = std::max(0, static_cast<int>(std::floor((xc - hx - hk - jit) / sp.x)));
        const int i1 = std::min(nx - 1, static_cast<int>(std::ceil((xc + hx + hk + jit) / sp.x)));
        const int j0 = std::max(0, static_cast<int>(std::floor((yk - dy - hk - jit) / sp.y)));
        const int j1 = std::min(ny - 1, static_cast<int>(std::ceil((yk + hk + jit) / sp.y)));
        for (int j = j0; j <= j1; ++j) {
            for (int i = i0; i <= i1; ++i) {
                const double x = i * sp.x - xc;
                const double y = j * sp.y;
                const double e1 = jit > 0.0 ? jit * u(rng) : 0.0;
                const double e2 = jit > 0.0 ? jit * u(rng) : 0.0;
                bool on;
                if (flat) {
                    on = std::abs(y - yk) <= hk + e1 && std::abs(x) <= w / 2.0 + e2;
                } else {
                    const double cy = yk - rw;
                    const double r = std::hypot(x, y - cy);
                    const double alpha = std::atan2(x, y - cy);
                    on = std::abs(r - rw) <= hk + e1 && std::abs(alpha) * rw <= w / 2.0 + e2;
                }
                if (on) m.set(i, j, k, true);
            }
        }
    };
    for (int k : in_range) rasterize(k);

    if (spec.subres && spec.subres->fraction > 0.0) {
        const auto& d = *spec.subres;
        const double t_begin = d.t_begin < 0.0 ? gt.umbilicus_t : d.t_begin;
        std::set<int> empty;
        for (int k : in_range)
            if (m.slice_empty(k)) empty.insert(k);
        const long target = std::lround(d.fraction * static_cast<double>(in_range.size()));
        long remaining = target - static_cast<long>(empty.size());
        std::vector<int> cand;
        for (int k : in_range) {
            const double t = arc.t_at_z(k * sp.z);
            if (t >= t_begin && t <= d.t_end && !empty.count(k)) cand.push_back(k);
        }
        std::set<int> candset(cand.begin(), cand.end());
        std::mt19937_64 rng(spec.seed ^ 0xD1B54A32D192ED03ULL);
        auto blocked = [&](int k) { return !candset.count(k) || empty.count(k); };
        for (int attempt = 0; remaining > 0 && attempt < 200000 && !cand.empty(); ++attempt) {
            const int start = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
            const int run = std::min<long>(remaining, std::uniform_int_distribution<int>(1, d.max_run)(rng));
            bool ok = !empty.count(start - 1) && !empty.count(start + run);
            for (int q = start; ok && q < start + run; ++q) ok = !blocked(q);
            if (!ok) continue;
            for (int q = start; q < start + run; ++q) {
                for (int j = 0; j < ny; ++j)
                    for (int i = 0; i < nx; ++i) m.set(i, j, q, false);
                empty.insert(q);
                gt.dropped_slices.push_back(q);
            }
            remaining -= run;
        }
        std::sort(gt.dropped_slices.begin(), gt.dropped_slices.end());
    }

    const double zu = arc.z_at_t(gt.umbilicus_t);
    out.landmarks.xiphoid = {xc, arc.y0, arc.zx};
    out.landmarks.pubis = {xc, arc.y0, arc.zp};
    out.landmarks.umbilicus = {xc, arc.y_at_z(zu), zu};
    gt.landmarks = out.landmarks;
    return out;
}

double chord_for_arc_length(double arc_length_mm, double sagitta_mm) {
    const double s = std::abs(sagitta_mm);
    if (s == 0.0) return arc_length_mm;
    if (!(arc_length_mm > std::numbers::pi * s)) {
        throw Error(ErrorCode::SpecInvalid, "arc too short for the requested sagitta", "chord_for_arc_length");
    }
    double lo = 2.0 * s, hi = arc_length_mm;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (make_arc(mid, s).length() < arc_length_mm) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

double num(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) invalid(std::string("'") + key + "' must be a number");
    return it->get<double>();
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
            invalid("unknown key '" + it.key() + "' in " + where);
        }
    }
}

std::vector<WidthKnot> parse_width(const json& w) {
    if (w.is_number()) return PhantomSpec::constant(w.get<double>());
    if (!w.is_object() || !w.contains("kind") || !w["kind"].is_string()) {
        invalid("width_fn must be a number or an object with a 'kind'");
    }
    const std::string kind = w["kind"];
    if (kind == "constant") {
        only_keys(w, {"kind", "width_mm"}, "width_fn");
        return PhantomSpec::constant(num(w, "width_mm"));
    }
    if (kind == "taper") {
        only_keys(w, {"kind", "start_mm", "end_mm"}, "width_fn");
        return PhantomSpec::taper(num(w, "start_mm"), num(w, "end_mm"));
    }
    if (kind == "rhombus") {
        only_keys(w, {"kind", "peak_mm", "peak_t", "end_mm"}, "width_fn");
        return PhantomSpec::rhombus(num(w, "peak_mm"), num(w, "peak_t"), w.contains("end_mm") ? num(w, "end_mm") : 0.0);
    }
    if (kind == "knots") {
        only_keys(w, {"kind", "knots"}, "width_fn");
        std::vector<WidthKnot> out;
        if (!w.contains("knots") || !w["knots"].is_array()) invalid("knots must be an array");
        for (const auto& k : w["knots"]) {
            if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
                invalid("each knot must be [t, width_mm]");
            }
            out.push_back({k[0].get<double>(), k[1].get<double>()});
        }
        return out;
    }
    invalid("unknown width_fn kind '" + kind + "'");
}

}  // namespace

PhantomSpec parse_phantom_spec(const std::string& text) {
    json j;
    try {
        j = detail::parse_strict_json(text, "phantom spec");
    } catch (const Error& e) {
        throw Error(ErrorCode::SpecInvalid, e.what(), "parse_phantom_spec");
    }
    if (!j.is_object()) invalid("phantom spec must be a JSON object");
    only_keys(j,
              {"length_mm", "sagitta_mm", "width_fn", "wrap_radius_mm", "spacing_mm", "thickness_vox", "noise_vox",
               "seed", "notch", "subres", "umbilicus_t"},
              "phantom spec");
    PhantomSpec s;
    if (j.contains("length_mm")) s.length_mm = num(j, "length_mm");
    if (j.contains("sagitta_mm")) s.sagitta_mm = num(j, "sagitta_mm");
    if (j.contains("width_fn")) s.width_fn = parse_width(j["width_fn"]);
    if (j.contains("wrap_radius_mm") && !j["wrap_radius_mm"].is_null()) s.wrap_radius_mm = num(j, "wrap_radius_mm");
    if (j.contains("spacing_mm")) {
        const auto& a = j["spacing_mm"];
        if (!a.is_array() || a.size() != 3 || !a[0].is_number() || !a[1].is_number() || !a[2].is_number()) {
            invalid("spacing_mm must be three numbers");
        }
        s.spacing_mm = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
    }
    if (j.contains("thickness_vox")) s.thickness_vox = num(j, "thickness_vox");
    if (j.contains("noise_vox")) s.noise_vox = num(j, "noise_vox");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) invalid("seed must be a non-negative integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("notch")) {
        only_keys(j["notch"], {"t0", "t1"}, "notch");
        s.notch = Notch{num(j["notch"], "t0"), num(j["notch"], "t1")};
    }
    if (j.contains("subres")) {
        const auto& d = j["subres"];
        only_keys(d, {"fraction", "max_run", "t_begin", "t_end"}, "subres");
        SubresDropout r;
        r.fraction = num(d, "fraction");
        if (d.contains("max_run")) r.max_run = static_cast<int>(num(d, "max_run"));
        if (d.contains("t_begin")) r.t_begin = num(d, "t_begin");
        if (d.contains("t_end")) r.t_end = num(d, "t_end");
        s.subres = r;
    }
    if (j.contains("umbilicus_t")) s.umbilicus_t = num(j, "umbilicus_t");
    validate_spec(s);
    return s;
}

PhantomSpec load_phantom_spec(const fs::path& path) {
    std::string text;
    try {
        text = detail::read_text_file(path);
    } catch (const Error& e) {
        throw Error(ErrorCode::IoFailure, e.what(), "load_phantom_spec");
    }
    return parse_phantom_spec(text);
}

std::string phantom_spec_json(const PhantomSpec& s) {
    json j;
    j["length_mm"] = s.length_mm;
    j["sagitta_mm"] = s.sagitta_mm;
    json knots = json::array();
    for (const auto& k : s.width_fn) knots.push_back({k.t, k.width_mm});
    j["width_fn"] = {{"kind", "knots"}, {"knots", knots}};
    j["wrap_radius_mm"] = std::isinf(s.wrap_radius_mm) ? json(nullptr) : json(s.wrap_radius_mm);
    j["spacing_mm"] = {s.spacing_mm.x, s.spacing_mm.y, s.spacing_mm.z};
    j["thickness_vox"] = s.thickness_vox;
    j["noise_vox"] = s.noise_vox;
    j["seed"] = s.seed;
    if (s.notch) j["notch"] = {{"t0", s.notch->t0}, {"t1", s.notch->t1}};
    if (s.subres) {
        j["subres"] = {{"fraction", s.subres->fraction},
                       {"max_run", s.subres->max_run},
                       {"t_begin", s.subres->t_begin},
                       {"t_end", s.subres->t_end}};
    }
    if (s.umbilicus_t) j["umbilicus_t"] = *s.umbilicus_t;
    return j.dump(2) + "\n";
}

std::string ground_truth_json(const GroundTruth& g) {
    auto inf_null = [](double v) { return std::isinf(v) ? json(nullptr) : json(v); };
    auto pt = [](const Vec3& p) { return json::array({p.x, p.y, p.z}); };
    json j;
    j["chord_mm"] = g.chord_mm;
    j["length_mm"] = g.length_mm;
    j["sagitta_mm"] = g.sagitta_mm;
    j["radius_mm"] = inf_null(g.radius_mm);
    j["wrap_radius_mm"] = inf_null(g.wrap_radius_mm);
    j["umbilicus_t"] = g.umbilicus_t;
    j["max_width_mm"] = g.max_width_mm();
    j["max_ird_mm"] = g.max_ird_mm();
    const LandmarkWidths lw = g.landmark_widths();
    auto lwj = [](const LandmarkWidth& w) { return json{{"t", w.t}, {"width_mm", w.width_mm}, {"z_mm", w.z_mm}}; };
    j["landmark_widths"] = {{"halfway_xiph_umb", lwj(lw.halfway_xiph_umb)},
                            {"above3cm", lwj(lw.above3cm)},
                            {"at_umbilicus", lwj(lw.at_umbilicus)},
                            {"below2cm", lwj(lw.below2cm)},
                            {"halfway_umb_pubis", lwj(lw.halfway_umb_pubis)}};
    j["landmarks"] = {{"xiphoid_mm", pt(g.landmarks.xiphoid)},
                      {"umbilicus_mm", pt(g.landmarks.umbilicus)},
                      {"pubis_mm", pt(g.landmarks.pubis)}};
    j["dropped_slices"] = g.dropped_slices;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Cohorts

MetricsRecord truth_metrics(const PhantomSpec& spec) {
    validate_spec(spec);
    Arc arc = make_arc(spec.length_mm, spec.sagitta_mm);
    arc.zp = 0.0;
    arc.zx = spec.length_mm;
    const GroundTruth g = truth_of(spec, arc);
    MetricsRecord m;
    m.length_mm = g.length_mm;
    m.sagitta_mm = g.sagitta_mm;
    m.max_width_mm = g.max_width_mm();
    m.max_ird_mm = g.max_ird_mm();
    m.landmarks = g.landmark_widths();
    double best = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = i / 1000.0;
        if (g.width(t) > best) {
            best = g.width(t);
            m.max_width_t = t;
        }
    }
    return m;
}

std::vector<CohortMember> phantom_cohort(int n, const CohortEffects& fx, std::uint64_t seed) {
    if (n < 4) throw Error(ErrorCode::SpecInvalid, "cohort needs at least 4 subjects", "phantom_cohort");
    std::mt19937_64 rng(seed);
    auto normal = [&](double mu, double sd) { return std::normal_distribution<double>(mu, sd)(rng); };
    auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };

    // 24 demographic cells, visited in a freshly shuffled order per block.
    std::vector<int> cells(24);
    std::vector<CohortMember> out;
    for (int i = 0; i < n; ++i) {
        if (i % 24 == 0) {
            std::iota(cells.begin(), cells.end(), 0);
            std::shuffle(cells.begin(), cells.end(), rng);
        }
        const int cell = cells[static_cast<std::size_t>(i % 24)];
        const int age_group = cell % 4;
        const Sex sex = (cell / 4) % 2 == 0 ? Sex::M : Sex::F;
        const int bmi_group = cell / 8;

        static constexpr int age_lo[4] = {18, 31, 46, 61};
        static constexpr int age_hi[4] = {30, 45, 60, 85};
        static constexpr double bmi_lo[3] = {19.0, 25.0, 30.0};
        static constexpr double bmi_hi[3] = {24.9, 29.9, 40.0};

        CohortMember c;
        SubjectRecord& r = c.record;
        char id[16];
        std::snprintf(id, sizeof id, "P%03d", i + 1);
        r.id = id;
        r.age_years = std::uniform_int_distribution<int>(age_lo[age_group], age_hi[age_group])(rng);
        r.sex = sex;
        r.bmi_kg_m2 = std::round(uniform(bmi_lo[bmi_group], bmi_hi[bmi_group]) * 10.0) / 10.0;
        r.covariates["waist_circumference_cm"] = 2.4 * r.bmi_kg_m2 + 25.0 + normal(0.0, 5.0);
        r.covariates["visceral_fat_area_cm2"] = std::max(5.0, 6.0 * r.bmi_kg_m2 - 60.0 + normal(0.0, 20.0));

        const bool obese = bmi_group == 2;
        const double length = std::clamp(normal(fx.length_mean, fx.length_sd), 305.0, 477.0);
        const double sag_mean = fx.sagitta_mean * (obese ? fx.obese_sagitta_factor : 1.0);
        const double sag_sd = obese && fx.obese_sagitta_sd ? *fx.obese_sagitta_sd : fx.sagitta_sd;
        double sagitta = normal(sag_mean, sag_sd);
        sagitta = std::clamp(sagitta, -0.25 * length, 0.25 * length);
        const double wmax = std::clamp(normal(fx.max_width_mean, fx.max_width_sd), fx.max_width_lo, fx.max_width_hi);
        const double t_peak = uniform(0.45, 0.6);

        PhantomSpec& s = c.spec;
        s.length_mm = chord_for_arc_length(length, sagitta);
        s.sagitta_mm = sagitta;
        s.width_fn = {{0.0, 0.25 * wmax}, {t_peak, wmax}, {1.0, 0.1 * wmax}};
        s.seed = seed * 1000003ULL + static_cast<std::uint64_t>(i);
        r.metrics = truth_metrics(s);
        out.push_back(std::move(c));
    }
    return out;
}

fs::path write_phantom_cohort(const std::vector<CohortMember>& cohort, const fs::path& dir) {
    fs::create_directories(dir / "masks");
    fs::create_directories(dir / "landmarks");
    fs::create_directories(dir / "truth");
    std::set<std::string> cov_names;
    for (const auto& c : cohort)
        for (const auto& [k, v] : c.record.covariates) cov_names.insert(k);

    std::ostringstream csv;
    csv.precision(17);
    csv << "id,age,sex,bmi,mask_path,landmarks_path";
    for (const auto& k : cov_names) csv << ',' << k;
    csv << '\n';
    for (const auto& c : cohort) {
        const Phantom p = generate_phantom(c.spec);
        const std::string mask_rel = "masks/" + c.record.id + ".lmh";
        const std::string lm_rel = "landmarks/" + c.record.id + ".json";
        save_mask(p.mask, dir / mask_rel);
        save_landmarks(p.landmarks, dir / lm_rel);
        detail::write_text_file(dir / "truth" / (c.record.id + ".json"), ground_truth_json(p.truth));
        csv << c.record.id << ',' << c.record.age_years << ',' << to_string(c.record.sex) << ','
            << c.record.bmi_kg_m2 << ',' << mask_rel << ',' << lm_rel;
        for (const auto& k : cov_names) {
            csv << ',';
            const auto it = c.record.covariates.find(k);
            if (it != c.record.covariates.end()) csv << it->second;
        }
        csv << '\n';
    }
    const fs::path manifest = dir / "manifest.csv";
    detail::write_text_file(manifest, csv.str());
    return manifest;
}

}  // namespace lineamorph
