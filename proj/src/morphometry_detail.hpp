#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lineamorph/morphometry.hpp"

namespace lineamorph::detail {

/// Largest bridged component of one axial slice, cropped to the slice's
/// occupied bounding box, with its principal path.
struct SliceComponent {
    int i0 = 0;
    int j0 = 0;
    int w = 0;
    int h = 0;
    std::vector<std::uint8_t> member;          // crop-sized, v * w + u
    std::vector<std::pair<int, int>> pixels;   // (u, v) crop coordinates
    std::vector<int> path;                     // indices into pixels, left to right

    bool contains(int u, int v) const {
        return u >= 0 && v >= 0 && u < w && v < h && member[static_cast<std::size_t>(v * w + u)] != 0;
    }
};

SliceComponent principal_component(const VoxelMask& mask, int k);
SliceMeasurement measure_slice(const VoxelMask& mask, const LocalFrame& frame, int k);

}  // namespace lineamorph::detail
