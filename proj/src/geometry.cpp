#include "lineamorph/geometry.hpp"

#include <algorithm>

namespace lineamorph {

double polyline_length(std::span<const Vec2> points) {
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
    return total;
}

std::vector<Vec2> smooth_polyline(std::span<const Vec2> points, double sigma_samples) {
    const std::size_t n = points.size();
    std::vector<Vec2> out(points.begin(), points.end());
    if (n < 3 || sigma_samples <= 0.0) return out;
    const auto reach = static_cast<std::size_t>(std::ceil(3.0 * sigma_samples));
    std::vector<double> kernel(reach + 1);
    for (std::size_t d = 0; d <= reach; ++d) {
        kernel[d] = std::exp(-0.5 * static_cast<double>(d * d) / (sigma_samples * sigma_samples));
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const std::size_t half = std::min({reach, i, n - 1 - i});
        Vec2 acc = kernel[0] * points[i];
        double wsum = kernel[0];
        for (std::size_t d = 1; d <= half; ++d) {
            acc = acc + kernel[d] * (points[i - d] + points[i + d]);
            wsum += 2.0 * kernel[d];
        }
        out[i] = (1.0 / wsum) * acc;
    }
    return out;
}

}  // namespace lineamorph
