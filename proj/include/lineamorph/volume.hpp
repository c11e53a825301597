#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lineamorph/error.hpp"
#include "lineamorph/geometry.hpp"

namespace lineamorph {

/// Binary occupancy grid with physical geometry.
///
/// Axis convention: x = left to right, y = posterior to anterior,
/// z = caudal to cranial. Voxel (i, j, k) has its center at
/// origin + (i * sx, j * sy, k * sz). Storage is x-fastest, then y, then z.
class VoxelMask {
public:
    VoxelMask() = default;
    /// All-empty mask. Throws InvalidMask on non-positive dims or spacing.
    VoxelMask(Dims dims, Vec3 spacing, Vec3 origin);
    /// Throws DimensionMismatch if data.size() != nx*ny*nz, InvalidMask on
    /// bad geometry or bytes other than 0/1.
    VoxelMask(Dims dims, Vec3 spacing, Vec3 origin, std::vector<std::uint8_t> data);

    const Dims& dims() const { return dims_; }
    const Vec3& spacing() const { return spacing_; }
    const Vec3& origin() const { return origin_; }
    std::span<const std::uint8_t> data() const { return data_; }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_.nx) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(k));
    }
    bool contains(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < dims_.nx && j < dims_.ny && k < dims_.nz;
    }
    bool at(int i, int j, int k) const { return data_[index(i, j, k)] != 0; }
    void set(int i, int j, int k, bool v) { data_[index(i, j, k)] = v ? 1 : 0; }

    Vec3 position(int i, int j, int k) const {
        return {origin_.x + i * spacing_.x, origin_.y + j * spacing_.y,
                origin_.z + k * spacing_.z};
    }
    double slice_z(int k) const { return origin_.z + k * spacing_.z; }

    std::size_t occupied_count() const;
    bool slice_empty(int k) const;

    friend bool operator==(const VoxelMask&, const VoxelMask&) = default;

private:
    Dims dims_{};
    Vec3 spacing_{1.0, 1.0, 1.0};
    Vec3 origin_{};
    std::vector<std::uint8_t> data_;
};

struct LandmarkSet {
    Vec3 xiphoid;
    Vec3 umbilicus;
    Vec3 pubis;

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

struct Index3 {
    int i = 0;
    int j = 0;
    int k = 0;
    friend bool operator==(Index3, Index3) = default;
};

/// Inclusive index bounds of occupied voxels.
struct Bounds3 {
    Index3 lo;
    Index3 hi;
};
std::optional<Bounds3> occupied_bounds(const VoxelMask& mask);

/// Coordinate frame anchored on an integer voxel index. Geometry is computed
/// in local millimetres relative to the anchor so that integer-voxel
/// translations of a scene produce bit-identical intermediate values.
struct LocalFrame {
    Vec3 origin;
    Vec3 spacing;
    Index3 anchor;

    static LocalFrame of(const VoxelMask& mask);

    double x(int i) const { return (i - anchor.i) * spacing.x; }
    double y(int j) const { return (j - anchor.j) * spacing.y; }
    double z(int k) const { return (k - anchor.k) * spacing.z; }
    Vec3 to_local(Vec3 p) const {
        return {(p.x - origin.x) - anchor.i * spacing.x, (p.y - origin.y) - anchor.j * spacing.y,
                (p.z - origin.z) - anchor.k * spacing.z};
    }
    Vec3 to_absolute(Vec3 p) const {
        return {origin.x + anchor.i * spacing.x + p.x, origin.y + anchor.j * spacing.y + p.y,
                origin.z + anchor.k * spacing.z + p.z};
    }
};

/// 2D binary image embedded in the volume.
struct PlaneImage {
    int nu = 0;
    int nv = 0;
    double su = 1.0;
    double sv = 1.0;
    Vec3 frame_origin;  // world position of pixel (0, 0)
    Vec3 axis_u{0.0, 1.0, 0.0};
    Vec3 axis_v{0.0, 0.0, 1.0};
    std::vector<std::uint8_t> data;  // u-fastest

    bool at(int u, int v) const {
        return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(nu) +
                    static_cast<std::size_t>(u)] != 0;
    }
    std::size_t occupied_count() const;
};

/// Axial slice k as a plane image (u = x, v = y).
PlaneImage axial_slice(const VoxelMask& mask, int k);

/// Voxel column index used for the median sagittal plane: the nearest column
/// to the mean x of the three landmarks.
int median_sagittal_column(const VoxelMask& mask, const LandmarkSet& landmarks);

/// Median sagittal reslice (u = y, v = z) by nearest-voxel lookup.
/// Throws EmptyIntersection when the plane misses every occupied voxel.
PlaneImage median_sagittal_slice(const VoxelMask& mask, const LandmarkSet& landmarks);

enum class Severity { Info, Warning, Error };

struct ValidationIssue {
    std::string code;
    std::string message;
    Severity severity = Severity::Error;
    friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

struct ValidationReport {
    bool ok = true;
    std::vector<ValidationIssue> issues;
    std::size_t occupied_voxel_count = 0;
    std::size_t connected_component_count = 0;
    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

/// 26-connected component count of the occupied voxels.
std::size_t count_components(const VoxelMask& mask);

ValidationReport validate_mask(const VoxelMask& mask, const LandmarkSet& landmarks);

/// Landmark invariants only; throws InvalidLandmarks on the first violation.
void check_landmarks(const VoxelMask& mask, const LandmarkSet& landmarks);

// ---------------------------------------------------------------------------
// File I/O. A mask is a JSON header (`.lmh`) next to a raw payload file.

VoxelMask load_mask(const std::filesystem::path& header_path);
/// Writes `<path>` and `<path stem>.raw` in the same directory.
void save_mask(const VoxelMask& mask, const std::filesystem::path& header_path);

LandmarkSet load_landmarks(const std::filesystem::path& path);
void save_landmarks(const LandmarkSet& landmarks, const std::filesystem::path& path);

}  // namespace lineamorph
