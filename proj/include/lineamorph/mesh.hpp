#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "lineamorph/volume.hpp"

namespace lineamorph {

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;  // counter-clockwise seen from outside

    double area() const;
    std::size_t edge_count() const;
    long euler_characteristic() const;
};

/// Isosurface at 0.5 occupancy with vertices welded on lattice edges.
Mesh marching_cubes(const VoxelMask& mask);

/// One umbrella-operator pass: v += lambda * (mean(neighbours) - v).
void laplacian_smooth(Mesh& mesh, double lambda);

/// Marching cubes plus one smoothing pass with factor 0.5. Throws EmptyMask.
Mesh render_mesh(const VoxelMask& mask);

std::string to_obj(const Mesh& mesh);
void write_obj(const Mesh& mesh, const std::filesystem::path& path);

}  // namespace lineamorph
