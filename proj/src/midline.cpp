#include <algorithm>
#include <cmath>
#include <optional>

#include "lineamorph/morphometry.hpp"

namespace lineamorph {

namespace {

constexpr int kMaxBridgedRows = 3;
constexpr double kSmoothingRows = 2.0;

// Rows of the sagittal plane whose height lies within [lo, hi] (local mm).
std::pair<int, int> rows_in_range(const LocalFrame& frame, int nz, double lo, double hi) {
    int first = -1, last = -1;
    for (int k = 0; k < nz; ++k) {
        const double z = frame.z(k);
        if (z < lo || z > hi) continue;
        if (first < 0) first = k;
        last = k;
    }
    return {first, last};
}

double end_slope(const std::vector<Vec2>& pts, bool at_front) {
    const std::size_t n = pts.size();
    if (n < 2) return 0.0;
    const std::size_t m = std::min<std::size_t>(4, n - 1);
    const Vec2 a = at_front ? pts[0] : pts[n - 1];
    const Vec2 b = at_front ? pts[m] : pts[n - 1 - m];
    const double dz = a.y - b.y;
    return dz == 0.0 ? 0.0 : (a.x - b.x) / dz;
}

}  // namespace

MidlineCurve extract_midline(const VoxelMask& mask, const LandmarkSet& landmarks) {
    const PlaneImage plane = median_sagittal_slice(mask, landmarks);
    const int column = median_sagittal_column(mask, landmarks);
    const LocalFrame frame = LocalFrame::of(mask);
    const Vec3 xiph = frame.to_local(landmarks.xiphoid);
    const Vec3 pub = frame.to_local(landmarks.pubis);
    if (!(xiph.z > pub.z)) {
        throw Error(ErrorCode::InvalidLandmarks, "xiphoid must lie cranial to pubis", "extract_midline");
    }

    const auto [k_lo, k_hi] = rows_in_range(frame, mask.dims().nz, pub.z, xiph.z);
    if (k_lo < 0) {
        throw Error(ErrorCode::EmptyIntersection, "no sagittal row between the insertions", "extract_midline");
    }

    // Trace from the xiphoid level downwards, following the run nearest the
    // previous point.
    const int ny = mask.dims().ny;
    const double sy = mask.spacing().y;
    std::vector<std::optional<double>> row_y;
    double prev = xiph.y;
    for (int k = k_hi; k >= k_lo; --k) {
        std::optional<double> best;
        int j = 0;
        while (j < ny) {
            if (!mask.at(column, j, k)) {
                ++j;
                continue;
            }
            const int j0 = j;
            while (j < ny && mask.at(column, j, k)) ++j;
            const int j1 = j - 1;
            const double c = 0.5 * static_cast<double>((j0 - frame.anchor.j) + (j1 - frame.anchor.j)) * sy;
            if (!best || std::abs(c - prev) < std::abs(*best - prev)) best = c;
        }
        if (best) prev = *best;
        row_y.push_back(best);
    }
    (void)plane;

    const std::size_t rows = row_y.size();
    std::size_t first = rows, last = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (!row_y[r]) continue;
        first = std::min(first, r);
        last = r;
    }
    if (first == rows) {
        throw Error(ErrorCode::EmptyIntersection, "median sagittal plane is empty between the insertions",
                    "extract_midline");
    }
    const std::size_t end_limit =
        std::max<std::size_t>(kMaxBridgedRows, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(rows))));
    if (first > end_limit || rows - 1 - last > end_limit) {
        throw Error(ErrorCode::FragmentedMidline,
                    "midline does not reach the insertion landmarks (" + std::to_string(first) + " / " +
                        std::to_string(rows - 1 - last) + " empty end rows)",
                    "extract_midline");
    }

    // Bridge interior gaps.
    for (std::size_t r = first; r <= last; ++r) {
        if (row_y[r]) continue;
        std::size_t e = r;
        while (!row_y[e]) ++e;
        if (e - r > kMaxBridgedRows) {
            const int k = k_hi - static_cast<int>(r);
            throw Error(ErrorCode::FragmentedMidline,
                        std::to_string(e - r) + " consecutive empty sagittal rows below slice " +
                            std::to_string(k + 1),
                        "extract_midline");
        }
        const double y0 = *row_y[r - 1];
        const double y1 = *row_y[e];
        for (std::size_t q = r; q < e; ++q) {
            const double a = static_cast<double>(q - (r - 1)) / static_cast<double>(e - (r - 1));
            row_y[q] = (1.0 - a) * y0 + a * y1;
        }
        r = e;
    }

    std::vector<Vec2> pts;
    for (std::size_t r = first; r <= last; ++r) {
        pts.push_back({*row_y[r], frame.z(k_hi - static_cast<int>(r))});
    }
    // Run centroids are quantized to half a voxel; a light Gaussian pass along
    // the rows removes the resulting staircase without moving the heights.
    auto smooth = smooth_polyline(pts, kSmoothingRows);
    for (std::size_t i = 0; i < pts.size(); ++i) smooth[i].y = pts[i].y;

    // Extend both ends along their tangent to the landmark heights.
    MidlineCurve curve{frame, {}, {}};
    if (xiph.z > smooth.front().y) {
        const double slope = end_slope(smooth, true);
        curve.points.push_back({smooth.front().x + slope * (xiph.z - smooth.front().y), xiph.z});
    }
    curve.points.insert(curve.points.end(), smooth.begin(), smooth.end());
    if (pub.z < smooth.back().y) {
        const double slope = end_slope(smooth, false);
        curve.points.push_back({smooth.back().x + slope * (pub.z - smooth.back().y), pub.z});
    }

    curve.cum_len.resize(curve.points.size());
    curve.cum_len[0] = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        curve.cum_len[i] = curve.cum_len[i - 1] + distance(curve.points[i - 1], curve.points[i]);
    }
    return curve;
}

double curve_length(const MidlineCurve& curve) {
    if (curve.points.size() < 2) {
        throw Error(ErrorCode::DegenerateCurve, "curve needs at least two points", "curve_length");
    }
    return polyline_length(curve.points);
}

double compute_sagitta(const MidlineCurve& curve, const LandmarkSet& landmarks) {
    if (curve.points.empty()) throw Error(ErrorCode::DegenerateCurve, "empty curve", "compute_sagitta");
    const Vec3 x3 = curve.frame.to_local(landmarks.xiphoid);
    const Vec3 p3 = curve.frame.to_local(landmarks.pubis);
    const Vec2 x{x3.y, x3.z};
    const Vec2 d = Vec2{p3.y, p3.z} - x;
    const double len = norm(d);
    if (len < 1e-6) {
        throw Error(ErrorCode::DegenerateChord, "xiphoid and pubis projections coincide", "compute_sagitta");
    }
    // Normal with a positive anterior (y) component for a cranio-caudal chord.
    const Vec2 n{-d.y / len, d.x / len};
    double best = 0.0;
    for (const Vec2& p : curve.points) {
        const double s = dot(p - x, n);
        if (std::abs(s) > std::abs(best)) best = s;
    }
    return best;
}

}  // namespace lineamorph
