#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lineamorph/geometry.hpp"
#include "lineamorph/volume.hpp"

namespace lineamorph {

/// Midline of the sheet in the median sagittal plane, ordered from the
/// xiphoid end to the pubic end. Points are (y = anterior, z = cranial) in
/// millimetres relative to `frame` (see LocalFrame).
struct MidlineCurve {
    LocalFrame frame;
    std::vector<Vec2> points;
    std::vector<double> cum_len;

    Vec2 absolute(std::size_t i) const {
        const Vec3 p = frame.to_absolute({0.0, points[i].x, points[i].y});
        return {p.y, p.z};
    }
    double total_length() const { return cum_len.empty() ? 0.0 : cum_len.back(); }
};

enum class SampleStatus { Measured, Interpolated, Missing };
std::string_view to_string(SampleStatus s);

struct ProfileSample {
    int slice = 0;          // axial slice index
    double z_local = 0.0;   // slice height in the mask's local frame (mm)
    double z_mm = 0.0;      // absolute slice height (mm)
    double width_mm = 0.0;  // curve length of the axial cross-section
    double ird_mm = 0.0;    // chord between the lateral edges
    double t = -1.0;        // normalized height, set by normalize_profile
    SampleStatus status = SampleStatus::Missing;
};

inline constexpr int kNormalizedSamples = 1001;

struct NormalizedProfile {
    std::vector<double> t;  // uniform grid on [0, 1]
    std::vector<double> width_mm;
    std::vector<double> ird_mm;
};

/// Samples are ordered from the xiphoid level downwards (decreasing z).
struct WidthProfile {
    LocalFrame frame;
    std::vector<ProfileSample> samples;
    std::optional<NormalizedProfile> normalized;
};

enum class OffsetMode { Arc, Axial };

struct LandmarkWidth {
    double width_mm = 0.0;
    double z_mm = 0.0;
    double t = 0.0;
    SampleStatus status = SampleStatus::Missing;
};

struct LandmarkWidths {
    LandmarkWidth halfway_xiph_umb;
    LandmarkWidth above3cm;
    LandmarkWidth at_umbilicus;
    LandmarkWidth below2cm;
    LandmarkWidth halfway_umb_pubis;
    double umbilicus_t = 0.0;  // normalized height of the umbilicus anchor
};

struct MetricsRecord {
    double length_mm = 0.0;
    double sagitta_mm = 0.0;
    double max_width_mm = 0.0;
    double max_width_t = 0.0;
    bool max_width_interpolated = false;
    double max_ird_mm = 0.0;
    LandmarkWidths landmarks;
    double missing_fraction = 0.0;
};

struct MeasureOptions {
    OffsetMode offset_mode = OffsetMode::Arc;
};

// ---------------------------------------------------------------------------
// Operations

/// Row-wise run centroids of the median sagittal slice, traced from the
/// xiphoid level down to the pubic level. Gaps of up to three empty rows are
/// bridged linearly; the ends are extended to the landmark heights.
MidlineCurve extract_midline(const VoxelMask& mask, const LandmarkSet& landmarks);

/// Throws DegenerateCurve for fewer than two points.
double curve_length(const MidlineCurve& curve);

/// Signed perpendicular distance from the xipho-pubic chord to the farthest
/// curve point; positive anterior. Throws DegenerateChord.
double compute_sagitta(const MidlineCurve& curve, const LandmarkSet& landmarks);

/// One-voxel-wide principal path of the largest component of axial slice k
/// (8-connectivity, gaps up to two voxels bridged), ordered left to right.
/// Points are absolute (x, y) in millimetres. Throws EmptyCrossSection.
std::vector<Vec2> axial_cross_section(const VoxelMask& mask, int k);

/// Width and IRD of one axial slice from its cross-section.
struct SliceMeasurement {
    double width_mm = 0.0;
    double ird_mm = 0.0;
    std::vector<Vec2> curve;  // refined centre curve including extended ends, local mm
};
SliceMeasurement measure_slice(const VoxelMask& mask, int k);

WidthProfile width_profile(const VoxelMask& mask, const LandmarkSet& landmarks);

/// Linear interpolation across interior missing runs, constant extrapolation
/// at the extremities. Throws TooFewMeasured with fewer than two measured samples.
WidthProfile fill_profile_gaps(const WidthProfile& profile);

/// Assigns each sample its arc-length height t and resamples onto the fixed
/// 1001-point grid. Throws CurveProfileMismatch when the z ranges are disjoint.
WidthProfile normalize_profile(const WidthProfile& profile, const MidlineCurve& curve);

LandmarkWidths landmark_widths(const WidthProfile& profile, const MidlineCurve& curve,
                               const LandmarkSet& landmarks, OffsetMode mode = OffsetMode::Arc);

double missing_fraction(const WidthProfile& profile);

struct SubjectMeasurement {
    MetricsRecord metrics;
    MidlineCurve curve;
    WidthProfile raw_profile;
    WidthProfile profile;  // filled and normalized
};

/// Full chain from mask to metrics. Errors carry the failing op in Error::op().
SubjectMeasurement measure_subject(const VoxelMask& mask, const LandmarkSet& landmarks,
                                   const MeasureOptions& options = {});
MetricsRecord subject_metrics(const VoxelMask& mask, const LandmarkSet& landmarks,
                              const MeasureOptions& options = {});

}  // namespace lineamorph
