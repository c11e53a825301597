#include <algorithm>
#include <cmath>
#include <limits>

#include "lineamorph/morphometry.hpp"
#include "morphometry_detail.hpp"

namespace lineamorph {

std::string_view to_string(SampleStatus s) {
    switch (s) {
        case SampleStatus::Measured: return "measured";
        case SampleStatus::Interpolated: return "interpolated";
        case SampleStatus::Missing: return "missing";
    }
    return "missing";
}

namespace {

// Arc length at height z along a curve whose points descend in z.
double arc_at_z(const MidlineCurve& curve, double z) {
    const auto& p = curve.points;
    if (z >= p.front().y) return 0.0;
    if (z <= p.back().y) return curve.total_length();
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (z < p[i].y) continue;
        const double dz = p[i - 1].y - p[i].y;
        const double a = dz > 0.0 ? (p[i - 1].y - z) / dz : 0.0;
        return curve.cum_len[i - 1] + a * (curve.cum_len[i] - curve.cum_len[i - 1]);
    }
    return curve.total_length();
}

double z_at_arc(const MidlineCurve& curve, double s) {
    const auto& p = curve.points;
    const auto& c = curve.cum_len;
    if (s <= 0.0) return p.front().y;
    if (s >= c.back()) return p.back().y;
    const auto it = std::upper_bound(c.begin(), c.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - c.begin());
    const double seg = c[i] - c[i - 1];
    const double a = seg > 0.0 ? (s - c[i - 1]) / seg : 0.0;
    return p[i - 1].y + a * (p[i].y - p[i - 1].y);
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double dx = xs[i] - xs[i - 1];
    const double a = dx > 0.0 ? (x - xs[i - 1]) / dx : 0.0;
    return ys[i - 1] + a * (ys[i] - ys[i - 1]);
}

}  // namespace

WidthProfile width_profile(const VoxelMask& mask, const LandmarkSet& landmarks) {
    const LocalFrame frame = LocalFrame::of(mask);
    const double zx = frame.to_local(landmarks.xiphoid).z;
    const double zp = frame.to_local(landmarks.pubis).z;
    WidthProfile out{frame, {}, std::nullopt};
    for (int k = mask.dims().nz - 1; k >= 0; --k) {
        const double z = frame.z(k);
        if (z > zx || z < zp) continue;
        ProfileSample s;
        s.slice = k;
        s.z_local = z;
        s.z_mm = mask.slice_z(k);
        try {
            const SliceMeasurement m = detail::measure_slice(mask, frame, k);
            s.width_mm = m.width_mm;
            s.ird_mm = m.ird_mm;
            s.status = SampleStatus::Measured;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyCrossSection) throw;
            s.status = SampleStatus::Missing;
        }
        out.samples.push_back(s);
    }
    const bool any = std::any_of(out.samples.begin(), out.samples.end(),
                                 [](const ProfileSample& s) { return s.status == SampleStatus::Measured; });
    if (!any) {
        throw Error(ErrorCode::NoMeasurableSlices, "no axial slice between the insertions could be measured",
                    "width_profile");
    }
    return out;
}

WidthProfile fill_profile_gaps(const WidthProfile& profile) {
    std::vector<std::size_t> anchors;
    for (std::size_t i = 0; i < profile.samples.size(); ++i) {
        if (profile.samples[i].status == SampleStatus::Measured) anchors.push_back(i);
    }
    if (anchors.size() < 2) {
        throw Error(ErrorCode::TooFewMeasured,
                    "need two measured slices, have " + std::to_string(anchors.size()), "fill_profile_gaps");
    }
    WidthProfile out = profile;
    auto& s = out.samples;
    std::size_t next = 0;  // index into anchors of the first anchor at or after i
    for (std::size_t i = 0; i < s.size(); ++i) {
        while (next < anchors.size() && anchors[next] < i) ++next;
        if (s[i].status != SampleStatus::Missing) continue;
        const ProfileSample* lo = next > 0 ? &profile.samples[anchors[next - 1]] : nullptr;
        const ProfileSample* hi = next < anchors.size() ? &profile.samples[anchors[next]] : nullptr;
        if (lo && hi) {
            const double a = (s[i].z_local - lo->z_local) / (hi->z_local - lo->z_local);
            s[i].width_mm = lo->width_mm + a * (hi->width_mm - lo->width_mm);
            s[i].ird_mm = lo->ird_mm + a * (hi->ird_mm - lo->ird_mm);
        } else {
            const ProfileSample* src = lo ? lo : hi;
            s[i].width_mm = src->width_mm;
            s[i].ird_mm = src->ird_mm;
        }
        s[i].status = SampleStatus::Interpolated;
    }
    return out;
}

WidthProfile normalize_profile(const WidthProfile& profile, const MidlineCurve& curve) {
    if (curve.points.size() < 2) {
        throw Error(ErrorCode::DegenerateCurve, "curve needs at least two points", "normalize_profile");
    }
    if (profile.samples.empty()) {
        throw Error(ErrorCode::CurveProfileMismatch, "profile has no samples", "normalize_profile");
    }
    WidthProfile out = profile;
    auto curve_z = [&](const ProfileSample& s) {
        if (profile.frame.anchor == curve.frame.anchor && profile.frame.origin == curve.frame.origin) {
            return s.z_local;
        }
        return curve.frame.to_local(profile.frame.to_absolute({0.0, 0.0, s.z_local})).z;
    };
    const double ztop = curve.points.front().y;
    const double zbot = curve.points.back().y;
    double pmin = std::numeric_limits<double>::infinity();
    double pmax = -pmin;
    for (const auto& s : profile.samples) {
        pmin = std::min(pmin, curve_z(s));
        pmax = std::max(pmax, curve_z(s));
    }
    if (pmax < zbot || pmin > ztop) {
        throw Error(ErrorCode::CurveProfileMismatch, "profile and curve cover disjoint heights",
                    "normalize_profile");
    }
    const double len = curve.total_length();
    if (!(len > 0.0)) throw Error(ErrorCode::DegenerateCurve, "curve has zero length", "normalize_profile");

    std::vector<double> ts, ws, is;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        auto& s = out.samples[i];
        s.t = std::clamp(arc_at_z(curve, curve_z(profile.samples[i])) / len, 0.0, 1.0);
        if (s.status == SampleStatus::Missing) continue;
        ts.push_back(s.t);
        ws.push_back(s.width_mm);
        is.push_back(s.ird_mm);
    }
    if (ts.empty()) {
        throw Error(ErrorCode::NoMeasurableSlices, "profile has no usable samples", "normalize_profile");
    }
    NormalizedProfile np;
    np.t.resize(kNormalizedSamples);
    np.width_mm.resize(kNormalizedSamples);
    np.ird_mm.resize(kNormalizedSamples);
    for (int g = 0; g < kNormalizedSamples; ++g) {
        const double t = static_cast<double>(g) / (kNormalizedSamples - 1);
        np.t[static_cast<std::size_t>(g)] = t;
        np.width_mm[static_cast<std::size_t>(g)] = interp(ts, ws, t);
        np.ird_mm[static_cast<std::size_t>(g)] = interp(ts, is, t);
    }
    out.normalized = std::move(np);
    return out;
}

LandmarkWidths landmark_widths(const WidthProfile& profile, const MidlineCurve& curve,
                               const LandmarkSet& landmarks, OffsetMode mode) {
    constexpr const char* op = "landmark_widths";
    if (curve.points.size() < 2 || !(curve.total_length() > 0.0)) {
        throw Error(ErrorCode::DegenerateCurve, "curve needs positive length", op);
    }
    if (!profile.normalized) throw Error(ErrorCode::CurveProfileMismatch, "profile is not normalized", op);
    const Vec3 u3 = curve.frame.to_local(landmarks.umbilicus);
    const Vec2 u{u3.y, u3.z};
    const double ztop = curve.points.front().y;
    const double zbot = curve.points.back().y;
    if (!(u.y < ztop && u.y > zbot)) {
        throw Error(ErrorCode::LandmarkOutOfRange, "umbilicus lies outside the curve's height range", op);
    }
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        if (distance(curve.points[i], u) < distance(curve.points[anchor], u)) anchor = i;
    }
    const double len = curve.total_length();
    const double su = curve.cum_len[anchor];
    const double zu = curve.points[anchor].y;

    struct Level {
        const char* name;
        double z;
        double t;
    };
    std::vector<Level> levels;
    if (mode == OffsetMode::Arc) {
        const double arcs[5] = {0.5 * su, su - 30.0, su, su + 20.0, 0.5 * (su + len)};
        const char* names[5] = {"halfway_xiph_umb", "above3cm", "at_umbilicus", "below2cm", "halfway_umb_pubis"};
        for (int i = 0; i < 5; ++i) {
            if (arcs[i] < 0.0 || arcs[i] > len) {
                throw Error(ErrorCode::LandmarkOutOfRange, std::string(names[i]) + " level falls off the curve", op);
            }
            levels.push_back({names[i], z_at_arc(curve, arcs[i]), arcs[i] / len});
        }
    } else {
        const double zs[5] = {0.5 * (ztop + zu), zu + 30.0, zu, zu - 20.0, 0.5 * (zu + zbot)};
        const char* names[5] = {"halfway_xiph_umb", "above3cm", "at_umbilicus", "below2cm", "halfway_umb_pubis"};
        for (int i = 0; i < 5; ++i) {
            if (zs[i] > ztop || zs[i] < zbot) {
                throw Error(ErrorCode::LandmarkOutOfRange, std::string(names[i]) + " level falls off the curve", op);
            }
            levels.push_back({names[i], zs[i], arc_at_z(curve, zs[i]) / len});
        }
    }

    auto sample_z = [&](const ProfileSample& s) {
        return curve.frame.to_local(profile.frame.to_absolute({0.0, 0.0, s.z_local})).z;
    };
    auto read = [&](const Level& lv) {
        const ProfileSample* best = nullptr;
        double bd = std::numeric_limits<double>::infinity();
        for (const auto& s : profile.samples) {
            const double dz = std::abs(sample_z(s) - lv.z);
            if (dz < bd) {
                bd = dz;
                best = &s;
            }
        }
        LandmarkWidth w;
        w.width_mm = best->width_mm;
        w.status = best->status;
        w.z_mm = curve.frame.to_absolute({0.0, 0.0, lv.z}).z;
        w.t = lv.t;
        return w;
    };
    LandmarkWidths out;
    out.halfway_xiph_umb = read(levels[0]);
    out.above3cm = read(levels[1]);
    out.at_umbilicus = read(levels[2]);
    out.below2cm = read(levels[3]);
    out.halfway_umb_pubis = read(levels[4]);
    out.umbilicus_t = su / len;
    return out;
}

double missing_fraction(const WidthProfile& profile) {
    if (profile.samples.empty()) return 0.0;
    const auto n = std::count_if(profile.samples.begin(), profile.samples.end(),
                                 [](const ProfileSample& s) { return s.status != SampleStatus::Measured; });
    return static_cast<double>(n) / static_cast<double>(profile.samples.size());
}

SubjectMeasurement measure_subject(const VoxelMask& mask, const LandmarkSet& landmarks,
                                   const MeasureOptions& options) {
    auto step = [](const char* op, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw e.with_op(op);
        }
    };
    step("check_landmarks", [&] {
        check_landmarks(mask, landmarks);
        return 0;
    });
    SubjectMeasurement out;
    out.curve = step("extract_midline", [&] { return extract_midline(mask, landmarks); });
    auto& m = out.metrics;
    m.length_mm = step("curve_length", [&] { return curve_length(out.curve); });
    m.sagitta_mm = step("compute_sagitta", [&] { return compute_sagitta(out.curve, landmarks); });
    out.raw_profile = step("width_profile", [&] { return width_profile(mask, landmarks); });
    m.missing_fraction = missing_fraction(out.raw_profile);
    const WidthProfile filled = step("fill_profile_gaps", [&] { return fill_profile_gaps(out.raw_profile); });
    out.profile = step("normalize_profile", [&] { return normalize_profile(filled, out.curve); });
    m.landmarks = step("landmark_widths",
                       [&] { return landmark_widths(out.profile, out.curve, landmarks, options.offset_mode); });

    const ProfileSample* wmax = nullptr;
    for (const auto& s : out.profile.samples) {
        if (s.status == SampleStatus::Missing) continue;
        if (!wmax || s.width_mm > wmax->width_mm) wmax = &s;
        m.max_ird_mm = std::max(m.max_ird_mm, s.ird_mm);
    }
    m.max_width_mm = wmax->width_mm;
    m.max_width_t = wmax->t;
    m.max_width_interpolated = wmax->status != SampleStatus::Measured;
    return out;
}

MetricsRecord subject_metrics(const VoxelMask& mask, const LandmarkSet& landmarks, const MeasureOptions& options) {
    return measure_subject(mask, landmarks, options).metrics;
}

}  // namespace lineamorph
