#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lineamorph/volume.hpp"

namespace lineamorph {

/// Mask that is authored only on a subset of axial slices.
struct SparseDelineation {
    VoxelMask base;
    std::vector<int> delineated_z;  // sorted, unique slice indices
};

/// Signed Euclidean distance in millimetres, negative inside.
struct DistanceField {
    int nu = 0;
    int nv = 0;
    double su = 1.0;
    double sv = 1.0;
    std::vector<double> values;  // u-fastest

    double at(int u, int v) const {
        return values[static_cast<std::size_t>(v) * static_cast<std::size_t>(nu) +
                      static_cast<std::size_t>(u)];
    }
};

/// Exact squared Euclidean distance transform of a binary image: for each
/// pixel, squared distance (mm^2) to the nearest pixel where `sites` is set.
/// Pixels are infinitely far when no site exists.
std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& sites, int nu, int nv,
                                               double su, double sv);

/// Signed distance field: distance to the nearest occupied pixel minus distance
/// to the nearest empty pixel. Throws EmptySlice for an all-empty image.
DistanceField sdf_of_slice(const PlaneImage& slice);

struct InterpolationOptions {
    bool closing = false;  // 1-voxel-radius ball closing after interpolation
};

struct InterpolationResult {
    VoxelMask mask;
    std::vector<std::string> warnings;  // e.g. disjoint end slices
};

/// Fills every undelineated slice between consecutive delineated slices by
/// linear interpolation of their signed distance fields. Delineated slices are
/// copied verbatim; slices outside the delineated range stay empty.
/// Throws TooFewSlices with fewer than two delineated slices.
InterpolationResult interpolate_stack_logged(const SparseDelineation& sparse,
                                             const InterpolationOptions& options = {});
VoxelMask interpolate_stack(const SparseDelineation& sparse, const InterpolationOptions& options = {});

/// 3D binary closing with the 6-connected unit ball.
VoxelMask morphological_closing(const VoxelMask& mask);

/// 2|a∩b| / (|a|+|b|); 1.0 when both are empty. Throws DimsMismatch.
double dice(const VoxelMask& a, const VoxelMask& b);

/// Keeps the given slices of `dense` and clears all others.
SparseDelineation subsample(const VoxelMask& dense, std::vector<int> delineated_z);

/// Every `step`-th slice from the first to the last occupied slice, always
/// including the last one.
std::vector<int> uniform_slice_selection(const VoxelMask& dense, int step);

SparseDelineation load_sparse(const std::filesystem::path& header_path);
void save_sparse(const SparseDelineation& sparse, const std::filesystem::path& header_path);

}  // namespace lineamorph
