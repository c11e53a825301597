#include "lineamorph/interslice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "container.hpp"

namespace lineamorph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas w*(p-q)^2 + f(q) (Felzenszwalb & Huttenlocher).
// Infinite samples contribute no parabola.
void distance_1d(const double* f, int n, double w, double* out, std::vector<int>& v,
                 std::vector<double>& z) {
    v.resize(static_cast<std::size_t>(n));
    z.resize(static_cast<std::size_t>(n) + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s = 0.0;
        while (true) {
            const int r = v[static_cast<std::size_t>(k)];
            s = ((f[q] + w * q * q) - (f[r] + w * r * r)) / (2.0 * w * (q - r));
            if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        if (s <= z[static_cast<std::size_t>(k)]) {
            // k == 0 and the new parabola dominates everywhere
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = kInf;
    }
    if (k < 0) {
        std::fill(out, out + n, kInf);
        return;
    }
    int j = 0;
    for (int p = 0; p < n; ++p) {
        while (z[static_cast<std::size_t>(j) + 1] < p) ++j;
        const int r = v[static_cast<std::size_t>(j)];
        out[p] = w * (p - r) * (p - r) + f[r];
    }
}

}  // namespace

std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& sites, int nu, int nv,
                                               double su, double sv) {
    const std::size_t n = static_cast<std::size_t>(nu) * static_cast<std::size_t>(nv);
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = sites[i] ? 0.0 : kInf;

    std::vector<int> v;
    std::vector<double> z;
    std::vector<double> buf(static_cast<std::size_t>(std::max(nu, nv)));
    std::vector<double> col(static_cast<std::size_t>(nv));

    for (int row = 0; row < nv; ++row) {
        double* line = grid.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(nu);
        distance_1d(line, nu, su * su, buf.data(), v, z);
        std::copy(buf.begin(), buf.begin() + nu, line);
    }
    for (int c = 0; c < nu; ++c) {
        for (int row = 0; row < nv; ++row) {
            col[static_cast<std::size_t>(row)] =
                grid[static_cast<std::size_t>(row) * static_cast<std::size_t>(nu) + static_cast<std::size_t>(c)];
        }
        distance_1d(col.data(), nv, sv * sv, buf.data(), v, z);
        for (int row = 0; row < nv; ++row) {
            grid[static_cast<std::size_t>(row) * static_cast<std::size_t>(nu) + static_cast<std::size_t>(c)] =
                buf[static_cast<std::size_t>(row)];
        }
    }
    return grid;
}

namespace {

std::vector<double> signed_distance(const std::vector<std::uint8_t>& occ, int nu, int nv, double su,
                                    double sv) {
    std::vector<std::uint8_t> empty(occ.size());
    for (std::size_t i = 0; i < occ.size(); ++i) empty[i] = occ[i] ? 0 : 1;
    const auto d_out = squared_distance_transform(occ, nu, nv, su, sv);
    const auto d_in = squared_distance_transform(empty, nu, nv, su, sv);
    // A fully occupied image has no outside; cap at the image diagonal.
    const double cap = std::hypot(nu * su, nv * sv);
    std::vector<double> out(occ.size());
    for (std::size_t i = 0; i < occ.size(); ++i) {
        const double in = d_in[i] == kInf ? cap : std::sqrt(d_in[i]);
        out[i] = std::sqrt(d_out[i]) - in;
    }
    return out;
}

}  // namespace

DistanceField sdf_of_slice(const PlaneImage& slice) {
    if (slice.occupied_count() == 0) {
        throw Error(ErrorCode::EmptySlice, "signed distance of an empty slice is undefined", "sdf_of_slice");
    }
    DistanceField f{slice.nu, slice.nv, slice.su, slice.sv, {}};
    f.values = signed_distance(slice.data, slice.nu, slice.nv, slice.su, slice.sv);
    return f;
}

namespace {

struct Box2 {
    int u0, v0, u1, v1;  // inclusive
};

std::optional<Box2> slice_box(const VoxelMask& m, int k) {
    const Dims d = m.dims();
    Box2 b{d.nx, d.ny, -1, -1};
    for (int j = 0; j < d.ny; ++j) {
        for (int i = 0; i < d.nx; ++i) {
            if (!m.at(i, j, k)) continue;
            b.u0 = std::min(b.u0, i);
            b.v0 = std::min(b.v0, j);
            b.u1 = std::max(b.u1, i);
            b.v1 = std::max(b.v1, j);
        }
    }
    if (b.u1 < 0) return std::nullopt;
    return b;
}

std::vector<std::uint8_t> crop(const VoxelMask& m, int k, const Box2& b) {
    const int w = b.u1 - b.u0 + 1;
    const int h = b.v1 - b.v0 + 1;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            out[static_cast<std::size_t>(j) * static_cast<std::size_t>(w) + static_cast<std::size_t>(i)] =
                m.at(b.u0 + i, b.v0 + j, k) ? 1 : 0;
        }
    }
    return out;
}

void check_sparse(const SparseDelineation& sparse) {
    const auto& z = sparse.delineated_z;
    if (z.size() < 2) {
        throw Error(ErrorCode::TooFewSlices, "interpolation needs at least two delineated slices",
                    "interpolate_stack");
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] < 0 || z[i] >= sparse.base.dims().nz) {
            throw Error(ErrorCode::InvalidMask, "delineated slice index out of range", "interpolate_stack");
        }
        if (i > 0 && z[i] <= z[i - 1]) {
            throw Error(ErrorCode::InvalidMask, "delineated_z must be strictly increasing", "interpolate_stack");
        }
    }
}

}  // namespace

InterpolationResult interpolate_stack_logged(const SparseDelineation& sparse,
                                             const InterpolationOptions& options) {
    check_sparse(sparse);
    const VoxelMask& base = sparse.base;
    const Dims d = base.dims();
    const Vec3 sp = base.spacing();
    InterpolationResult result{base, {}};
    VoxelMask& out = result.mask;

    // Only the authored slices survive; stray voxels elsewhere are dropped.
    std::vector<std::uint8_t> authored(static_cast<std::size_t>(d.nz), 0);
    for (int z : sparse.delineated_z) authored[static_cast<std::size_t>(z)] = 1;
    for (int k = 0; k < d.nz; ++k) {
        if (authored[static_cast<std::size_t>(k)]) continue;
        for (int j = 0; j < d.ny; ++j) {
            for (int i = 0; i < d.nx; ++i) out.set(i, j, k, false);
        }
    }

    constexpr int kMargin = 2;
    for (std::size_t g = 0; g + 1 < sparse.delineated_z.size(); ++g) {
        const int z0 = sparse.delineated_z[g];
        const int z1 = sparse.delineated_z[g + 1];
        if (z1 - z0 < 2) continue;
        const auto b0 = slice_box(base, z0);
        const auto b1 = slice_box(base, z1);
        if (!b0 || !b1) {
            result.warnings.push_back("gap " + std::to_string(z0) + ".." + std::to_string(z1) +
                                      " is bounded by an empty slice; left empty");
            continue;
        }
        const Box2 box{std::max(0, std::min(b0->u0, b1->u0) - kMargin),
                       std::max(0, std::min(b0->v0, b1->v0) - kMargin),
                       std::min(d.nx - 1, std::max(b0->u1, b1->u1) + kMargin),
                       std::min(d.ny - 1, std::max(b0->v1, b1->v1) + kMargin)};
        const int w = box.u1 - box.u0 + 1;
        const int h = box.v1 - box.v0 + 1;
        const auto occ0 = crop(base, z0, box);
        const auto occ1 = crop(base, z1, box);
        bool overlap = false;
        for (std::size_t i = 0; i < occ0.size() && !overlap; ++i) overlap = occ0[i] && occ1[i];
        if (!overlap) {
            result.warnings.push_back("DisjointEndSlices: slices " + std::to_string(z0) + " and " +
                                      std::to_string(z1) + " do not overlap");
        }
        const auto s0 = signed_distance(occ0, w, h, sp.x, sp.y);
        const auto s1 = signed_distance(occ1, w, h, sp.x, sp.y);
        for (int z = z0 + 1; z < z1; ++z) {
            const double a = static_cast<double>(z - z0) / static_cast<double>(z1 - z0);
            for (int j = 0; j < h; ++j) {
                for (int i = 0; i < w; ++i) {
                    const std::size_t idx =
                        static_cast<std::size_t>(j) * static_cast<std::size_t>(w) + static_cast<std::size_t>(i);
                    if ((1.0 - a) * s0[idx] + a * s1[idx] <= 0.0) out.set(box.u0 + i, box.v0 + j, z, true);
                }
            }
        }
    }
    if (options.closing) out = morphological_closing(out);
    return result;
}

VoxelMask interpolate_stack(const SparseDelineation& sparse, const InterpolationOptions& options) {
    return interpolate_stack_logged(sparse, options).mask;
}

VoxelMask morphological_closing(const VoxelMask& mask) {
    const Dims d = mask.dims();
    static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    VoxelMask dilated = mask;
    for (int k = 0; k < d.nz; ++k) {
        for (int j = 0; j < d.ny; ++j) {
            for (int i = 0; i < d.nx; ++i) {
                if (mask.at(i, j, k)) continue;
                for (const auto& o : kOffsets) {
                    const int a = i + o[0], b = j + o[1], c = k + o[2];
                    if (mask.contains(a, b, c) && mask.at(a, b, c)) {
                        dilated.set(i, j, k, true);
                        break;
                    }
                }
            }
        }
    }
    // Out-of-volume neighbours count as occupied so closing never erodes the border.
    VoxelMask closed = dilated;
    for (int k = 0; k < d.nz; ++k) {
        for (int j = 0; j < d.ny; ++j) {
            for (int i = 0; i < d.nx; ++i) {
                if (!dilated.at(i, j, k)) continue;
                for (const auto& o : kOffsets) {
                    const int a = i + o[0], b = j + o[1], c = k + o[2];
                    if (dilated.contains(a, b, c) && !dilated.at(a, b, c)) {
                        closed.set(i, j, k, false);
                        break;
                    }
                }
            }
        }
    }
    return closed;
}

double dice(const VoxelMask& a, const VoxelMask& b) {
    if (a.dims() != b.dims()) throw Error(ErrorCode::DimsMismatch, "dice of masks with different dims", "dice");
    const auto da = a.data();
    const auto db = b.data();
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        na += da[i];
        nb += db[i];
        both += static_cast<std::size_t>(da[i] & db[i]);
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

SparseDelineation subsample(const VoxelMask& dense, std::vector<int> delineated_z) {
    std::sort(delineated_z.begin(), delineated_z.end());
    delineated_z.erase(std::unique(delineated_z.begin(), delineated_z.end()), delineated_z.end());
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(dense.dims().nz), 0);
    for (int z : delineated_z) {
        if (z >= 0 && z < dense.dims().nz) keep[static_cast<std::size_t>(z)] = 1;
    }
    SparseDelineation s{dense, std::move(delineated_z)};
    const Dims d = dense.dims();
    for (int k = 0; k < d.nz; ++k) {
        if (keep[static_cast<std::size_t>(k)]) continue;
        for (int j = 0; j < d.ny; ++j) {
            for (int i = 0; i < d.nx; ++i) s.base.set(i, j, k, false);
        }
    }
    return s;
}

std::vector<int> uniform_slice_selection(const VoxelMask& dense, int step) {
    if (step < 1) throw Error(ErrorCode::InvalidConfig, "subsampling step must be >= 1");
    int first = -1, last = -1;
    for (int k = 0; k < dense.dims().nz; ++k) {
        if (dense.slice_empty(k)) continue;
        if (first < 0) first = k;
        last = k;
    }
    std::vector<int> z;
    if (first < 0) return z;
    for (int k = first; k <= last; k += step) z.push_back(k);
    if (z.back() != last) z.push_back(last);
    return z;
}

SparseDelineation load_sparse(const std::filesystem::path& header_path) {
    auto c = detail::load_container(header_path);
    if (!c.header.contains("delineated_z") || !c.header["delineated_z"].is_array()) {
        throw Error(ErrorCode::MalformedHeader, header_path.string() + ": missing key 'delineated_z'");
    }
    std::vector<int> z;
    for (const auto& v : c.header["delineated_z"]) {
        if (!v.is_number_integer()) {
            throw Error(ErrorCode::MalformedHeader, header_path.string() + ": delineated_z must hold integers");
        }
        z.push_back(v.get<int>());
    }
    std::set<int> dz(z.begin(), z.end());
    if (dz.empty()) throw Error(ErrorCode::MalformedHeader, header_path.string() + ": delineated_z is empty");
    const Dims d = c.mask.dims();
    for (int k = 0; k < d.nz; ++k) {
        if (dz.count(k) == 0 && !c.mask.slice_empty(k)) {
            throw Error(ErrorCode::InvalidMask,
                        header_path.string() + ": slice " + std::to_string(k) +
                            " is occupied but not listed in delineated_z");
        }
    }
    return {std::move(c.mask), std::vector<int>(dz.begin(), dz.end())};
}

void save_sparse(const SparseDelineation& sparse, const std::filesystem::path& header_path) {
    nlohmann::json extra;
    extra["delineated_z"] = sparse.delineated_z;
    detail::save_container(sparse.base, header_path, extra);
}

}  // namespace lineamorph
