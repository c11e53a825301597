#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lineamorph/cohortstats.hpp"
#include "lineamorph/morphometry.hpp"
#include "lineamorph/volume.hpp"

namespace lineamorph {

/// Knot of a piecewise-linear width profile over normalized height t.
struct WidthKnot {
    double t = 0.0;
    double width_mm = 0.0;
    friend bool operator==(const WidthKnot&, const WidthKnot&) = default;
};

/// Width drops to zero over [t0, t1] (umbilical defect).
struct Notch {
    double t0 = 0.0;
    double t1 = 0.0;
};

/// Seeded runs of empty slices standing in for a sheet thinner than the
/// scan resolution. `fraction` is the share of slices between the insertions
/// that end up empty, counting slices that are empty anyway.
struct SubresDropout {
    double fraction = 0.16;
    int max_run = 3;
    double t_begin = -1.0;  // < 0: from the umbilicus
    double t_end = 1.0;
};

struct PhantomSpec {
    double length_mm = 375.0;  // chord xiphoid -> pubis
    double sagitta_mm = 0.0;
    std::vector<WidthKnot> width_fn{{0.0, 20.0}, {1.0, 20.0}};
    double wrap_radius_mm = std::numeric_limits<double>::infinity();
    Vec3 spacing_mm{0.75, 0.75, 1.25};
    double thickness_vox = 2.0;
    double noise_vox = 0.0;
    std::uint64_t seed = 0;
    std::optional<Notch> notch;
    std::optional<SubresDropout> subres;
    std::optional<double> umbilicus_t;  // default: width apex

    static std::vector<WidthKnot> constant(double w);
    static std::vector<WidthKnot> taper(double w0, double w1);
    static std::vector<WidthKnot> rhombus(double peak, double t_peak, double end = 0.0);
};

struct GroundTruth {
    double chord_mm = 0.0;
    double length_mm = 0.0;
    double sagitta_mm = 0.0;
    double radius_mm = std::numeric_limits<double>::infinity();  // sagittal arc
    double wrap_radius_mm = std::numeric_limits<double>::infinity();
    std::vector<WidthKnot> width_fn;
    std::optional<Notch> notch;
    double umbilicus_t = 0.5;
    LandmarkSet landmarks;
    std::vector<int> dropped_slices;  // emptied by SubresDropout

    double width(double t) const;
    double ird(double t) const;
    /// Normalized height of an absolute axial level.
    double t_at_z(double z_mm) const;
    double z_at_t(double t) const;
    double max_width_mm() const;
    double max_ird_mm() const;
    /// Landmark widths at the same levels the measurement reads (arc mode).
    LandmarkWidths landmark_widths() const;

    double z_xiphoid = 0.0;
    double z_pubis = 0.0;
};

struct Phantom {
    VoxelMask mask;
    LandmarkSet landmarks;
    GroundTruth truth;
};

/// Throws SpecInvalid.
void validate_spec(const PhantomSpec& spec);
Phantom generate_phantom(const PhantomSpec& spec);

PhantomSpec load_phantom_spec(const std::filesystem::path& path);
PhantomSpec parse_phantom_spec(const std::string& json_text);
std::string phantom_spec_json(const PhantomSpec& spec);
std::string ground_truth_json(const GroundTruth& truth);

/// Chord that gives a circular arc of the requested length and sagitta.
double chord_for_arc_length(double arc_length_mm, double sagitta_mm);

// ---------------------------------------------------------------------------
// Cohorts

struct CohortEffects {
    double length_mean = 375.0, length_sd = 36.0;
    double sagitta_mean = 16.0, sagitta_sd = 17.0;
    double max_width_mean = 44.0, max_width_sd = 19.0;
    double max_width_lo = 14.0, max_width_hi = 114.0;
    double obese_sagitta_factor = 1.0;  // multiplies the obese group's sagitta mean
    std::optional<double> obese_sagitta_sd;
};

struct CohortMember {
    SubjectRecord record;  // metrics from ground truth
    PhantomSpec spec;
};

/// Demographics fill the 4 age x 2 sex x 3 BMI grid as evenly as n allows.
std::vector<CohortMember> phantom_cohort(int n, const CohortEffects& effects, std::uint64_t seed);

/// Ground-truth metrics for a spec without rasterizing it.
MetricsRecord truth_metrics(const PhantomSpec& spec);

/// Writes masks, landmarks and manifest.csv under dir; returns the manifest path.
std::filesystem::path write_phantom_cohort(const std::vector<CohortMember>& cohort,
                                           const std::filesystem::path& dir);

}  // namespace lineamorph
