#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "lineamorph/morphometry.hpp"
#include "lineamorph/phantom.hpp"
#include "support.hpp"

using namespace lineamorph;

namespace {

MidlineCurve curve_of(std::vector<Vec2> pts) {
    MidlineCurve c;
    c.points = std::move(pts);
    c.cum_len.push_back(0.0);
    for (std::size_t i = 1; i < c.points.size(); ++i)
        c.cum_len.push_back(c.cum_len.back() + distance(c.points[i - 1], c.points[i]));
    return c;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidConfig;
}

ProfileSample sample(double z, double w, SampleStatus st) {
    ProfileSample s;
    s.z_local = z;
    s.z_mm = z;
    s.width_mm = w;
    s.ird_mm = w;
    s.status = st;
    return s;
}

Phantom phantom(double chord, double sagitta, std::vector<WidthKnot> w, double wrap = INFINITY) {
    PhantomSpec s;
    s.length_mm = chord;
    s.sagitta_mm = sagitta;
    s.width_fn = std::move(w);
    s.wrap_radius_mm = wrap;
    return generate_phantom(s);
}

}  // namespace

// --- midline ---------------------------------------------------------------

TEST(Midline, StraightRibbonIsVerticalAtCentre) {
    const VoxelMask m = lmtest::box({30, 14, 80}, lmtest::kSpacing, 5, 24, 4, 7, 3, 76);
    const LandmarkSet l = lmtest::box_landmarks(m, 5, 24, 4, 7, 3, 76, 40);
    const MidlineCurve c = extract_midline(m, l);
    ASSERT_GE(c.points.size(), 2u);
    for (std::size_t i = 0; i < c.points.size(); ++i) EXPECT_NEAR(c.absolute(i).x, 5.5 * 0.75, 1e-9);
    EXPECT_NEAR(c.absolute(0).y, 76 * 1.25, 1e-9);
    EXPECT_NEAR(c.absolute(c.points.size() - 1).y, 3 * 1.25, 1e-9);
    for (std::size_t i = 1; i < c.points.size(); ++i) EXPECT_LT(c.points[i].y, c.points[i - 1].y);
}

TEST(Midline, ArcPhantomWithinOneVoxel) {
    const Phantom p = phantom(300, 50, PhantomSpec::constant(20));
    ASSERT_NEAR(p.truth.radius_mm, 250.0, 1e-9);
    const MidlineCurve c = extract_midline(p.mask, p.landmarks);
    const double yc = p.landmarks.xiphoid.y + 50.0 - 250.0;
    const double zc = 0.5 * (p.landmarks.xiphoid.z + p.landmarks.pubis.z);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const Vec2 q = c.absolute(i);
        EXPECT_LE(std::abs(std::hypot(q.x - yc, q.y - zc) - 250.0), 0.75) << i;
    }
    const double tol = 2 * 1.25;
    EXPECT_LE(distance(c.absolute(0), {p.landmarks.xiphoid.y, p.landmarks.xiphoid.z}), tol);
    EXPECT_LE(distance(c.absolute(c.points.size() - 1), {p.landmarks.pubis.y, p.landmarks.pubis.z}), tol);
}

TEST(Midline, TenEmptyRowsFragment) {
    Phantom p = phantom(120, 10, PhantomSpec::constant(20));
    const Vec3 s = p.mask.spacing();
    const int ku = static_cast<int>(std::lround(p.landmarks.umbilicus.z / s.z));
    const int kp = static_cast<int>(std::lround(p.landmarks.pubis.z / s.z));
    const int k0 = (ku + kp) / 2 - 5;
    for (int k = k0; k < k0 + 10; ++k)
        for (int j = 0; j < p.mask.dims().ny; ++j)
            for (int i = 0; i < p.mask.dims().nx; ++i) p.mask.set(i, j, k, false);
    EXPECT_EQ(code_of([&] { extract_midline(p.mask, p.landmarks); }), ErrorCode::FragmentedMidline);
    try {
        measure_subject(p.mask, p.landmarks);
    } catch (const Error& e) {
        EXPECT_EQ(e.op(), "extract_midline");
    }
}

TEST(Midline, ThreeEmptyRowsBridged) {
    Phantom p = phantom(120, 10, PhantomSpec::constant(20));
    const int k0 = p.mask.dims().nz / 2;
    for (int k = k0; k < k0 + 3; ++k)
        for (int j = 0; j < p.mask.dims().ny; ++j)
            for (int i = 0; i < p.mask.dims().nx; ++i) p.mask.set(i, j, k, false);
    const MidlineCurve c = extract_midline(p.mask, p.landmarks);
    EXPECT_NEAR(curve_length(c), p.truth.length_mm, 0.02 * p.truth.length_mm);
}

// --- length and sagitta ------------------------------------------------------

TEST(CurveLength, Polylines) {
    EXPECT_DOUBLE_EQ(curve_length(curve_of({{0, 0}, {0, 300}})), 300.0);
    EXPECT_DOUBLE_EQ(curve_length(curve_of({{0, 0}, {30, 40}, {60, 80}})), 100.0);
    EXPECT_EQ(code_of([] { curve_length(curve_of({{0, 0}})); }), ErrorCode::DegenerateCurve);
}

TEST(CurveLength, SemicircleWithinOnePercent) {
    std::vector<Vec2> pts;
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const double a = std::numbers::pi * i / n;
        pts.push_back({100 * std::sin(a), 100 * std::cos(a)});
    }
    EXPECT_NEAR(curve_length(curve_of(pts)), 100 * std::numbers::pi, 0.01 * 100 * std::numbers::pi);
}

TEST(Sagitta, ClosedForms) {
    LocalFrame f{};
    f.spacing = {1, 1, 1};
    const LandmarkSet l{{0, 0, 150}, {0, 0, 0}, {0, 0, -150}};
    std::vector<Vec2> on_chord, arc, mirrored;
    for (int i = 0; i <= 300; ++i) on_chord.push_back({0.0, 150.0 - i});
    // chord 300, R 250: apex 50 mm anterior
    const double phi0 = std::asin(150.0 / 250.0);
    for (int i = 0; i <= 600; ++i) {
        const double phi = phi0 - 2 * phi0 * i / 600.0;
        const Vec2 p{250 * std::cos(phi) - 200, 250 * std::sin(phi)};
        arc.push_back(p);
        mirrored.push_back({-p.x, p.y});
    }
    EXPECT_DOUBLE_EQ(compute_sagitta(curve_of(on_chord), l), 0.0);
    EXPECT_NEAR(compute_sagitta(curve_of(arc), l), 50.0, 1e-9);
    EXPECT_NEAR(compute_sagitta(curve_of(mirrored), l), -50.0, 1e-9);
    const LandmarkSet same{{0, 0, 1}, {0, 0, 1}, {0, 0, 1}};
    EXPECT_EQ(code_of([&] { compute_sagitta(curve_of(arc), same); }), ErrorCode::DegenerateChord);
}

TEST(Sagitta, ArcPhantomsBothSigns) {
    for (double s : {50.0, -50.0}) {
        const Phantom p = phantom(300, s, PhantomSpec::constant(20));
        const MidlineCurve c = extract_midline(p.mask, p.landmarks);
        EXPECT_NEAR(compute_sagitta(c, p.landmarks), s, 2 * 1.25);
    }
}

// --- axial cross-section ----------------------------------------------------

TEST(CrossSection, StraightRow) {
    VoxelMask m({24, 5, 3}, {1, 1, 1}, {0, 0, 0});
    for (int i = 2; i < 22; ++i) m.set(i, 2, 1, true);
    const auto path = axial_cross_section(m, 1);
    ASSERT_EQ(path.size(), 20u);
    EXPECT_DOUBLE_EQ(distance(path.front(), path.back()), 19.0);
    EXPECT_DOUBLE_EQ(path.front().x, 2.0);
    for (std::size_t i = 1; i < path.size(); ++i) EXPECT_GT(path[i].x, path[i - 1].x);
}

TEST(CrossSection, EmptySlice) {
    const VoxelMask m({4, 4, 2}, {1, 1, 1}, {0, 0, 0});
    EXPECT_EQ(code_of([&] { axial_cross_section(m, 0); }), ErrorCode::EmptyCrossSection);
    EXPECT_EQ(code_of([&] { measure_slice(m, 1); }), ErrorCode::EmptyCrossSection);
}

TEST(CrossSection, ThinArcEndsAtRasterExtremes) {
    VoxelMask m({50, 30, 1}, {1, 1, 1}, {0, 0, 0});
    const double r = 20.0;
    for (int n = 0; n <= 2000; ++n) {
        const double a = std::numbers::pi * (0.2 + 0.6 * n / 2000.0);
        const int i = static_cast<int>(std::lround(25 + r * std::cos(a)));
        const int j = static_cast<int>(std::lround(2 + r * std::sin(a)));
        if (m.contains(i, j, 0)) m.set(i, j, 0, true);
    }
    const auto path = axial_cross_section(m, 0);
    int imin = 99, imax = -1;
    for (int j = 0; j < 30; ++j)
        for (int i = 0; i < 50; ++i)
            if (m.at(i, j, 0)) {
                imin = std::min(imin, i);
                imax = std::max(imax, i);
            }
    EXPECT_DOUBLE_EQ(path.front().x, imin);
    EXPECT_DOUBLE_EQ(path.back().x, imax);
}

TEST(CrossSection, BridgesTwoVoxelGapOnly) {
    VoxelMask m({40, 3, 2}, {1, 1, 1}, {0, 0, 0});
    for (int i = 0; i < 10; ++i) m.set(i, 1, 0, true);
    for (int i = 12; i < 20; ++i) m.set(i, 1, 0, true);  // 2 empty voxels between
    auto path = axial_cross_section(m, 0);
    EXPECT_DOUBLE_EQ(path.front().x, 0.0);
    EXPECT_DOUBLE_EQ(path.back().x, 19.0);

    for (int i = 0; i < 10; ++i) m.set(i, 1, 1, true);
    for (int i = 13; i < 25; ++i) m.set(i, 1, 1, true);  // 3 empty voxels: keep the larger piece
    path = axial_cross_section(m, 1);
    EXPECT_DOUBLE_EQ(path.front().x, 13.0);
    EXPECT_DOUBLE_EQ(path.back().x, 24.0);
}

// --- width profile ------------------------------------------------------------

TEST(WidthProfile, FlatConstantRibbon) {
    const Phantom p = phantom(150, 0, PhantomSpec::constant(20));
    const WidthProfile w = width_profile(p.mask, p.landmarks);
    ASSERT_FALSE(w.samples.empty());
    for (const auto& s : w.samples) {
        ASSERT_EQ(s.status, SampleStatus::Measured);
        EXPECT_NEAR(s.width_mm, 20.0, 0.75);
        EXPECT_NEAR(s.ird_mm, 20.0, 0.75);
        EXPECT_GE(s.width_mm, s.ird_mm);
    }
    for (std::size_t i = 1; i < w.samples.size(); ++i) EXPECT_LT(w.samples[i].z_mm, w.samples[i - 1].z_mm);
}

TEST(WidthProfile, CylinderWrapSixtyDegrees) {
    const double R = 50.0, theta = std::numbers::pi / 3.0;
    const Phantom p = phantom(100, 0, PhantomSpec::constant(R * theta), R);
    const WidthProfile w = width_profile(p.mask, p.landmarks);
    for (const auto& s : w.samples) {
        ASSERT_EQ(s.status, SampleStatus::Measured);
        EXPECT_NEAR(s.width_mm, R * theta, 0.02 * R * theta);
        EXPECT_NEAR(s.ird_mm, 2 * R * std::sin(theta / 2), 0.02 * 50.0);
        EXPECT_GE(s.width_mm, s.ird_mm);
    }
}

TEST(WidthProfile, TaperBelowOneVoxelGoesMissing) {
    const Phantom p = phantom(150, 0, PhantomSpec::taper(30, 0));
    const WidthProfile w = width_profile(p.mask, p.landmarks);
    EXPECT_EQ(w.samples.front().status, SampleStatus::Measured);
    EXPECT_EQ(w.samples.back().status, SampleStatus::Missing);
    bool seen_missing = false;
    for (const auto& s : w.samples) {
        if (s.status == SampleStatus::Missing) seen_missing = true;
        else EXPECT_FALSE(seen_missing) << "measured slice below a missing run";
    }
}

TEST(WidthProfile, NothingMeasurable) {
    const VoxelMask m = lmtest::box({30, 14, 80}, lmtest::kSpacing, 5, 24, 4, 7, 3, 20);
    LandmarkSet l = lmtest::box_landmarks(m, 5, 24, 4, 7, 3, 20, 10);
    l.xiphoid.z = 70 * 1.25;
    l.umbilicus.z = 50 * 1.25;
    l.pubis.z = 30 * 1.25;
    EXPECT_EQ(code_of([&] { width_profile(m, l); }), ErrorCode::NoMeasurableSlices);
}

// --- gap filling -------------------------------------------------------------

TEST(FillGaps, InteriorAndEnds) {
    WidthProfile w;
    w.samples = {sample(14, 0, SampleStatus::Missing), sample(13, 0, SampleStatus::Missing),
                 sample(12, 4, SampleStatus::Measured), sample(11, 0, SampleStatus::Missing),
                 sample(10, 2, SampleStatus::Measured), sample(9, 0, SampleStatus::Missing)};
    const WidthProfile f = fill_profile_gaps(w);
    EXPECT_DOUBLE_EQ(f.samples[3].width_mm, 3.0);
    EXPECT_EQ(f.samples[3].status, SampleStatus::Interpolated);
    EXPECT_DOUBLE_EQ(f.samples[0].width_mm, 4.0);
    EXPECT_DOUBLE_EQ(f.samples[1].width_mm, 4.0);
    EXPECT_EQ(f.samples[0].status, SampleStatus::Interpolated);
    EXPECT_DOUBLE_EQ(f.samples[5].width_mm, 2.0);
    EXPECT_EQ(f.samples[2].status, SampleStatus::Measured);
    EXPECT_DOUBLE_EQ(f.samples[2].width_mm, 4.0);
}

TEST(FillGaps, LinearOracleOnRandomProfiles) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        WidthProfile w;
        for (int i = 0; i < 40; ++i)
            w.samples.push_back(sample(100.0 - 1.25 * i, 10 + rng() % 20,
                                       rng() % 3 ? SampleStatus::Measured : SampleStatus::Missing));
        w.samples[5].status = w.samples[30].status = SampleStatus::Measured;
        const WidthProfile f = fill_profile_gaps(w);
        for (std::size_t i = 0; i < w.samples.size(); ++i) {
            if (w.samples[i].status == SampleStatus::Measured) {
                EXPECT_EQ(f.samples[i].width_mm, w.samples[i].width_mm);
                continue;
            }
            std::optional<std::size_t> lo, hi;
            for (std::size_t j = i; j-- > 0;)
                if (w.samples[j].status == SampleStatus::Measured) { lo = j; break; }
            for (std::size_t j = i + 1; j < w.samples.size(); ++j)
                if (w.samples[j].status == SampleStatus::Measured) { hi = j; break; }
            double expect;
            if (lo && hi) {
                const double a = double(i - *lo) / double(*hi - *lo);
                expect = w.samples[*lo].width_mm + a * (w.samples[*hi].width_mm - w.samples[*lo].width_mm);
            } else {
                expect = w.samples[lo ? *lo : *hi].width_mm;
            }
            EXPECT_NEAR(f.samples[i].width_mm, expect, 1e-9);
            EXPECT_EQ(f.samples[i].status, SampleStatus::Interpolated);
        }
    }
}

TEST(FillGaps, TooFewMeasured) {
    WidthProfile w;
    w.samples = {sample(2, 3, SampleStatus::Measured), sample(1, 0, SampleStatus::Missing)};
    EXPECT_EQ(code_of([&] { fill_profile_gaps(w); }), ErrorCode::TooFewMeasured);
}

// --- normalization -------------------------------------------------------------

TEST(Normalize, StraightIsLinear) {
    WidthProfile w;
    for (int i = 0; i <= 100; ++i) w.samples.push_back(sample(100.0 - i, 7.5, SampleStatus::Measured));
    const MidlineCurve c = curve_of({{0, 100}, {0, 0}});
    const WidthProfile n = normalize_profile(w, c);
    for (const auto& s : n.samples) EXPECT_NEAR(s.t, (100.0 - s.z_local) / 100.0, 1e-12);
    EXPECT_NEAR(n.samples[50].t, 0.5, 1e-12);
    ASSERT_TRUE(n.normalized);
    ASSERT_EQ(n.normalized->t.size(), static_cast<std::size_t>(kNormalizedSamples));
    EXPECT_DOUBLE_EQ(n.normalized->t.front(), 0.0);
    EXPECT_DOUBLE_EQ(n.normalized->t.back(), 1.0);
    for (std::size_t i = 0; i < n.normalized->t.size(); ++i) {
        EXPECT_NEAR(n.normalized->t[i], i / 1000.0, 1e-12);
        EXPECT_DOUBLE_EQ(n.normalized->width_mm[i], 7.5);
    }
}

TEST(Normalize, AsymmetricArcShiftsMidHeight) {
    // The cranial half bulges, so it carries more arc length per mm of z.
    std::vector<Vec2> pts;
    for (int i = 0; i <= 1000; ++i) {
        const double z = 100.0 - 0.1 * i;
        const double y = z > 50.0 ? 15.0 * std::sin(std::numbers::pi * (z - 50.0) / 50.0) : 0.0;
        pts.push_back({y, z});
    }
    const MidlineCurve c = curve_of(pts);
    WidthProfile w;
    for (int i = 0; i <= 100; ++i) w.samples.push_back(sample(100.0 - i, 5, SampleStatus::Measured));
    const WidthProfile n = normalize_profile(w, c);
    const double oracle = c.cum_len[500] / c.cum_len.back();
    EXPECT_GT(n.samples[50].t, 0.5);
    EXPECT_NEAR(n.samples[50].t, oracle, 1e-9);
}

TEST(Normalize, DisjointRanges) {
    WidthProfile w;
    w.samples = {sample(500, 5, SampleStatus::Measured), sample(499, 5, SampleStatus::Measured)};
    EXPECT_EQ(code_of([&] { normalize_profile(w, curve_of({{0, 100}, {0, 0}})); }),
              ErrorCode::CurveProfileMismatch);
}

// --- landmark widths ------------------------------------------------------------

TEST(LandmarkWidths, ConstantRibbon) {
    const Phantom p = phantom(200, 15, PhantomSpec::constant(20));
    const SubjectMeasurement m = measure_subject(p.mask, p.landmarks);
    const LandmarkWidths& lw = m.metrics.landmarks;
    for (const LandmarkWidth* x : {&lw.halfway_xiph_umb, &lw.above3cm, &lw.at_umbilicus, &lw.below2cm,
                                   &lw.halfway_umb_pubis}) {
        EXPECT_NEAR(x->width_mm, 20.0, 0.75);
        EXPECT_NE(x->status, SampleStatus::Missing);
    }
}

TEST(LandmarkWidths, RhombusApexAtUmbilicus) {
    const Phantom p = phantom(300, 26, PhantomSpec::rhombus(44, 0.5, 0.0));
    const SubjectMeasurement m = measure_subject(p.mask, p.landmarks);
    const LandmarkWidths& lw = m.metrics.landmarks;
    EXPECT_NEAR(lw.at_umbilicus.width_mm, 44.0, 0.05 * 44.0);
    EXPECT_NEAR(lw.halfway_xiph_umb.width_mm, 22.0, 0.05 * 22.0);
    EXPECT_NEAR(lw.halfway_umb_pubis.width_mm, 22.0, 0.05 * 22.0);
    // argmax of the normalized profile sits at the umbilicus anchor
    const auto& nw = m.profile.normalized->width_mm;
    const auto at = std::max_element(nw.begin(), nw.end()) - nw.begin();
    EXPECT_NEAR(m.profile.normalized->t[static_cast<std::size_t>(at)], lw.umbilicus_t, 0.02);
}

TEST(LandmarkWidths, UmbilicusAboveXiphoid) {
    const Phantom p = phantom(200, 0, PhantomSpec::constant(20));
    const SubjectMeasurement m = measure_subject(p.mask, p.landmarks);
    LandmarkSet bad = p.landmarks;
    bad.umbilicus.z = bad.xiphoid.z + 30.0;
    EXPECT_EQ(code_of([&] { landmark_widths(m.profile, m.curve, bad); }), ErrorCode::LandmarkOutOfRange);
}

TEST(LandmarkWidths, AxialModeUsesZOffsets) {
    const Phantom p = phantom(200, 0, PhantomSpec::taper(40, 10));
    const SubjectMeasurement a = measure_subject(p.mask, p.landmarks, {OffsetMode::Arc});
    const SubjectMeasurement z = measure_subject(p.mask, p.landmarks, {OffsetMode::Axial});
    // straight midline: arc and z offsets coincide
    EXPECT_NEAR(a.metrics.landmarks.above3cm.z_mm, z.metrics.landmarks.above3cm.z_mm, 1e-6);
    EXPECT_NEAR(z.metrics.landmarks.above3cm.z_mm - z.metrics.landmarks.at_umbilicus.z_mm, 30.0, 1e-6);
    EXPECT_NEAR(z.metrics.landmarks.at_umbilicus.z_mm - z.metrics.landmarks.below2cm.z_mm, 20.0, 1e-6);
}

// --- full chain -------------------------------------------------------------------

TEST(SubjectMetrics, TableMeanPhantom) {
    PhantomSpec s;
    s.length_mm = 375;
    s.sagitta_mm = 26;
    s.width_fn = PhantomSpec::rhombus(44, 0.55, 8);
    const Phantom p = generate_phantom(s);
    const MetricsRecord m = subject_metrics(p.mask, p.landmarks);
    const auto tol = [](double truth) { return std::max(0.02 * std::abs(truth), 2 * 1.25); };
    EXPECT_NEAR(m.length_mm, p.truth.length_mm, tol(p.truth.length_mm));
    EXPECT_NEAR(m.sagitta_mm, 26.0, tol(26.0));
    EXPECT_NEAR(m.max_width_mm, 44.0, tol(44.0));
    EXPECT_NEAR(m.max_ird_mm, p.truth.max_ird_mm(), tol(p.truth.max_ird_mm()));
    EXPECT_NEAR(m.max_width_t, 0.55, 0.02);
    EXPECT_GE(m.missing_fraction, 0.0);
    EXPECT_LE(m.missing_fraction, 1.0);
}

TEST(SubjectMetrics, StraightFlatRibbon) {
    const VoxelMask m = lmtest::box({30, 14, 100}, lmtest::kSpacing, 5, 24, 4, 7, 3, 96);
    const LandmarkSet l = lmtest::box_landmarks(m, 5, 24, 4, 7, 3, 96, 50);
    const MetricsRecord r = subject_metrics(m, l);
    EXPECT_NEAR(r.sagitta_mm, 0.0, 1e-9);
    EXPECT_NEAR(r.length_mm, 93 * 1.25, 1e-9);
    EXPECT_NEAR(r.max_width_mm, 20 * 0.75, 0.75);
    EXPECT_DOUBLE_EQ(r.missing_fraction, 0.0);
}

TEST(SubjectMetrics, EmptyMaskPropagatesEmptyIntersection) {
    const VoxelMask m({20, 20, 40}, lmtest::kSpacing, {0, 0, 0});
    const LandmarkSet l{{7, 7, 40}, {7, 7, 25}, {7, 7, 5}};
    try {
        subject_metrics(m, l);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyIntersection);
        EXPECT_FALSE(e.op().empty());
    }
}

TEST(SubjectMetrics, MaxWidthDominatesProfile) {
    const Phantom p = phantom(250, -12, PhantomSpec::rhombus(50, 0.4, 3));
    const SubjectMeasurement m = measure_subject(p.mask, p.landmarks);
    for (const auto& s : m.profile.samples) {
        if (s.status == SampleStatus::Missing) continue;
        EXPECT_GE(m.metrics.max_width_mm, s.width_mm);
        EXPECT_GE(m.metrics.max_ird_mm, s.ird_mm);
    }
    EXPECT_LT(m.metrics.sagitta_mm, m.metrics.length_mm);
    EXPECT_GT(m.metrics.sagitta_mm, -m.metrics.length_mm / 2);
}

// --- properties --------------------------------------------------------------------

TEST(Properties, WidthDominatesIrd) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    for (int n = 0; n < 8; ++n) {
        PhantomSpec s;
        s.length_mm = 120 + 80 * u(rng);
        s.sagitta_mm = -15 + 35 * u(rng);
        s.width_fn = PhantomSpec::rhombus(20 + 40 * u(rng), 0.3 + 0.4 * u(rng), 5);
        if (n % 2) s.wrap_radius_mm = 40 + 40 * u(rng);
        s.noise_vox = n % 3 == 0 ? 0.6 : 0.0;
        s.seed = static_cast<std::uint64_t>(n);
        const Phantom p = generate_phantom(s);
        const WidthProfile w = width_profile(p.mask, p.landmarks);
        for (const auto& x : w.samples)
            if (x.status == SampleStatus::Measured) ASSERT_GE(x.width_mm, x.ird_mm) << n;
    }
}

TEST(Properties, TranslationIsExact) {
    PhantomSpec s;
    s.length_mm = 160;
    s.sagitta_mm = 14;
    s.width_fn = PhantomSpec::rhombus(36, 0.55, 6);
    s.noise_vox = 0.5;
    s.seed = 4;
    const Phantom p = generate_phantom(s);
    const MetricsRecord a = subject_metrics(p.mask, p.landmarks);
    const Vec3 sp = p.mask.spacing();
    const VoxelMask moved = lmtest::shifted(p.mask, 4, 3, 9);
    const MetricsRecord b = subject_metrics(moved, lmtest::shifted(p.landmarks, {4 * sp.x, 3 * sp.y, 9 * sp.z}));
    EXPECT_EQ(a.length_mm, b.length_mm);
    EXPECT_EQ(a.sagitta_mm, b.sagitta_mm);
    EXPECT_EQ(a.max_width_mm, b.max_width_mm);
    EXPECT_EQ(a.max_ird_mm, b.max_ird_mm);
    EXPECT_EQ(a.landmarks.at_umbilicus.width_mm, b.landmarks.at_umbilicus.width_mm);
    EXPECT_EQ(a.landmarks.above3cm.width_mm, b.landmarks.above3cm.width_mm);
    EXPECT_EQ(a.missing_fraction, b.missing_fraction);
}

TEST(Properties, MirrorSymmetry) {
    PhantomSpec s;
    s.length_mm = 160;
    s.sagitta_mm = 18;
    s.width_fn = PhantomSpec::rhombus(40, 0.5, 6);
    const Phantom p = generate_phantom(s);
    const SubjectMeasurement a = measure_subject(p.mask, p.landmarks);

    const LandmarkSet lx{lmtest::reflect_x(p.mask, p.landmarks.xiphoid), lmtest::reflect_x(p.mask, p.landmarks.umbilicus),
                         lmtest::reflect_x(p.mask, p.landmarks.pubis)};
    const SubjectMeasurement bx = measure_subject(lmtest::mirror_x(p.mask), lx);
    ASSERT_EQ(a.raw_profile.samples.size(), bx.raw_profile.samples.size());
    for (std::size_t i = 0; i < a.raw_profile.samples.size(); ++i) {
        EXPECT_NEAR(a.raw_profile.samples[i].width_mm, bx.raw_profile.samples[i].width_mm, 1e-9);
        EXPECT_NEAR(a.raw_profile.samples[i].ird_mm, bx.raw_profile.samples[i].ird_mm, 1e-9);
    }

    const LandmarkSet ly{lmtest::reflect_y(p.mask, p.landmarks.xiphoid), lmtest::reflect_y(p.mask, p.landmarks.umbilicus),
                         lmtest::reflect_y(p.mask, p.landmarks.pubis)};
    const SubjectMeasurement by = measure_subject(lmtest::mirror_y(p.mask), ly);
    EXPECT_NEAR(by.metrics.sagitta_mm, -a.metrics.sagitta_mm, 1e-9);
    EXPECT_NEAR(by.metrics.length_mm, a.metrics.length_mm, 1e-9);
}

TEST(Properties, ScaleEquivariance) {
    PhantomSpec s;
    s.length_mm = 140;
    s.sagitta_mm = 16;
    s.width_fn = PhantomSpec::rhombus(40, 0.5, 6);
    const Phantom p = generate_phantom(s);
    const MetricsRecord a = subject_metrics(p.mask, p.landmarks);
    for (double k : {0.5, 2.0}) {
        const MetricsRecord b = subject_metrics(lmtest::rescaled(p.mask, k), lmtest::rescaled(p.landmarks, k));
        EXPECT_NEAR(b.length_mm, k * a.length_mm, 0.005 * k * a.length_mm);
        EXPECT_NEAR(b.sagitta_mm, k * a.sagitta_mm, 0.005 * k * std::abs(a.sagitta_mm));
        EXPECT_NEAR(b.max_width_mm, k * a.max_width_mm, 0.005 * k * a.max_width_mm);
        EXPECT_NEAR(b.max_ird_mm, k * a.max_ird_mm, 0.005 * k * a.max_ird_mm);
        EXPECT_NEAR(b.landmarks.at_umbilicus.width_mm, k * a.landmarks.at_umbilicus.width_mm,
                    0.005 * k * a.landmarks.at_umbilicus.width_mm);
    }
}
