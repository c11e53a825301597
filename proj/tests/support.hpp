#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "lineamorph/phantom.hpp"
#include "lineamorph/volume.hpp"

namespace lmtest {

using namespace lineamorph;

inline const Vec3 kSpacing{0.75, 0.75, 1.25};

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("lineamorph_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Straight flat box: x in [i0, i1], y in [j0, j1], z in [k0, k1] (inclusive).
inline VoxelMask box(Dims d, Vec3 spacing, int i0, int i1, int j0, int j1, int k0, int k1) {
    VoxelMask m(d, spacing, {0.0, 0.0, 0.0});
    for (int k = k0; k <= k1; ++k)
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) m.set(i, j, k, true);
    return m;
}

/// Landmarks for a box: centred in x and y, xiphoid on the top slice, pubis
/// on the bottom slice, umbilicus at the given slice.
inline LandmarkSet box_landmarks(const VoxelMask& m, int i0, int i1, int j0, int j1, int k0, int k1, int ku) {
    const Vec3 s = m.spacing();
    const double x = 0.5 * (i0 + i1) * s.x;
    const double y = 0.5 * (j0 + j1) * s.y;
    return {{x, y, k1 * s.z}, {x, y, ku * s.z}, {x, y, k0 * s.z}};
}

/// Copy of `m` inside a larger grid, shifted by (di, dj, dk) voxels.
inline VoxelMask shifted(const VoxelMask& m, int di, int dj, int dk) {
    const Dims d = m.dims();
    VoxelMask out({d.nx + di, d.ny + dj, d.nz + dk}, m.spacing(), m.origin());
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i)
                if (m.at(i, j, k)) out.set(i + di, j + dj, k + dk, true);
    return out;
}

inline LandmarkSet shifted(const LandmarkSet& l, Vec3 by) {
    return {l.xiphoid + by, l.umbilicus + by, l.pubis + by};
}

/// Left-right reflection (x -> -x about the grid centre).
inline VoxelMask mirror_x(const VoxelMask& m) {
    const Dims d = m.dims();
    VoxelMask out(d, m.spacing(), m.origin());
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i)
                if (m.at(i, j, k)) out.set(d.nx - 1 - i, j, k, true);
    return out;
}

/// Anterior-posterior reflection (y -> -y about the grid centre).
inline VoxelMask mirror_y(const VoxelMask& m) {
    const Dims d = m.dims();
    VoxelMask out(d, m.spacing(), m.origin());
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i)
                if (m.at(i, j, k)) out.set(i, d.ny - 1 - j, k, true);
    return out;
}

inline Vec3 reflect_x(const VoxelMask& m, Vec3 p) {
    const double span = 2.0 * m.origin().x + (m.dims().nx - 1) * m.spacing().x;
    return {span - p.x, p.y, p.z};
}
inline Vec3 reflect_y(const VoxelMask& m, Vec3 p) {
    const double span = 2.0 * m.origin().y + (m.dims().ny - 1) * m.spacing().y;
    return {p.x, span - p.y, p.z};
}

/// Same voxels with spacing and origin multiplied by k.
inline VoxelMask rescaled(const VoxelMask& m, double k) {
    const auto data = m.data();
    return VoxelMask(m.dims(), k * m.spacing(), k * m.origin(), {data.begin(), data.end()});
}

inline LandmarkSet rescaled(const LandmarkSet& l, double k) {
    return {k * l.xiphoid, k * l.umbilicus, k * l.pubis};
}

/// Path of the CLI binary, passed by ctest.
inline std::string cli_path() {
    const char* p = std::getenv("LINEAMORPH_CLI");
    return p ? p : "lineamorph";
}

inline int run_command(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace lmtest
