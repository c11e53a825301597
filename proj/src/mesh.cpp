#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "container.hpp"
#include "lineamorph/mesh.hpp"

namespace lineamorph {

namespace {

struct Corner {
    int x, y, z;
};
constexpr Corner corner_of(int c) { return {c & 1, (c >> 1) & 1, (c >> 2) & 1}; }

struct CubeEdge {
    int a, b;  // corner indices, a < b, differing in one bit
    int axis;  // 0 x, 1 y, 2 z
};

// Case table built once: for each of the 256 inside patterns, polygons as
// lists of cube-edge indices.
struct CaseTable {
    std::array<CubeEdge, 12> edges{};
    std::array<std::vector<std::vector<int>>, 256> polygons;

    CaseTable() {
        int e = 0;
        for (int a = 0; a < 8; ++a)
            for (int bit = 0; bit < 3; ++bit)
                if (!(a & (1 << bit))) edges[static_cast<std::size_t>(e++)] = {a, a | (1 << bit), bit};
        auto edge_index = [&](int a, int b) {
            for (int i = 0; i < 12; ++i) {
                const auto& q = edges[static_cast<std::size_t>(i)];
                if ((q.a == a && q.b == b) || (q.a == b && q.b == a)) return i;
            }
            return -1;
        };

        // Faces with corners counter-clockwise seen from outside.
        std::vector<std::array<int, 4>> faces;
        for (int axis = 0; axis < 3; ++axis) {
            for (int side = 0; side < 2; ++side) {
                std::vector<int> cs;
                for (int c = 0; c < 8; ++c)
                    if (((c >> axis) & 1) == side) cs.push_back(c);
                const int u = (axis + 1) % 3;
                const int v = (axis + 2) % 3;
                auto coord = [](int c, int ax) { return static_cast<double>((c >> ax) & 1) - 0.5; };
                std::sort(cs.begin(), cs.end(), [&](int p, int q) {
                    return std::atan2(coord(p, v), coord(p, u)) < std::atan2(coord(q, v), coord(q, u));
                });
                // (u, v, axis) is right-handed, so the sort is counter-clockwise
                // about +axis; reverse for the low face.
                if (side == 0) std::reverse(cs.begin(), cs.end());
                faces.push_back({cs[0], cs[1], cs[2], cs[3]});
            }
        }

        for (int cfg = 0; cfg < 256; ++cfg) {
            auto in = [&](int c) { return (cfg >> c) & 1; };
            // next[e]: directed face segment from an entering crossing to the
            // next exiting crossing along the face.
            std::array<int, 12> next;
            next.fill(-1);
            for (const auto& f : faces) {
                std::vector<std::pair<int, bool>> crossings;  // (edge, is_enter)
                for (int i = 0; i < 4; ++i) {
                    const int a = f[static_cast<std::size_t>(i)];
                    const int b = f[static_cast<std::size_t>((i + 1) % 4)];
                    if (in(a) == in(b)) continue;
                    crossings.push_back({edge_index(a, b), !in(a)});
                }
                const std::size_t n = crossings.size();
                for (std::size_t i = 0; i < n; ++i) {
                    if (!crossings[i].second) continue;
                    for (std::size_t d = 1; d < n; ++d) {
                        const auto& c = crossings[(i + d) % n];
                        if (!c.second) {
                            next[static_cast<std::size_t>(crossings[i].first)] = c.first;
                            break;
                        }
                    }
                }
            }
            std::array<bool, 12> used{};
            for (int s = 0; s < 12; ++s) {
                if (next[static_cast<std::size_t>(s)] < 0 || used[static_cast<std::size_t>(s)]) continue;
                std::vector<int> poly;
                int e = s;
                while (!used[static_cast<std::size_t>(e)]) {
                    used[static_cast<std::size_t>(e)] = true;
                    poly.push_back(e);
                    e = next[static_cast<std::size_t>(e)];
                }
                polygons[static_cast<std::size_t>(cfg)].push_back(std::move(poly));
            }
        }

        // Orient so normals point away from inside corners: corner 0 alone
        // inside must give a normal towards (+,+,+).
        const auto& tri = polygons[1].front();
        auto mid = [&](int ei) {
            const auto& q = edges[static_cast<std::size_t>(ei)];
            const Corner a = corner_of(q.a), b = corner_of(q.b);
            return Vec3{0.5 * (a.x + b.x), 0.5 * (a.y + b.y), 0.5 * (a.z + b.z)};
        };
        const Vec3 p0 = mid(tri[0]), p1 = mid(tri[1]), p2 = mid(tri[2]);
        const Vec3 d1 = p1 - p0, d2 = p2 - p0;
        const Vec3 n{d1.y * d2.z - d1.z * d2.y, d1.z * d2.x - d1.x * d2.z, d1.x * d2.y - d1.y * d2.x};
        if (n.x + n.y + n.z < 0.0) {
            for (auto& cfg : polygons)
                for (auto& poly : cfg) std::reverse(poly.begin(), poly.end());
        }
    }
};

const CaseTable& case_table() {
    static const CaseTable table;
    return table;
}

Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }

}  // namespace

double Mesh::area() const {
    double a = 0.0;
    for (const auto& t : triangles) {
        const Vec3 p = vertices[static_cast<std::size_t>(t[0])];
        a += 0.5 * norm(cross(vertices[static_cast<std::size_t>(t[1])] - p, vertices[static_cast<std::size_t>(t[2])] - p));
    }
    return a;
}

std::size_t Mesh::edge_count() const {
    std::set<std::pair<int, int>> e;
    for (const auto& t : triangles)
        for (int i = 0; i < 3; ++i) {
            const int a = t[static_cast<std::size_t>(i)];
            const int b = t[static_cast<std::size_t>((i + 1) % 3)];
            e.insert({std::min(a, b), std::max(a, b)});
        }
    return e.size();
}

long Mesh::euler_characteristic() const {
    return static_cast<long>(vertices.size()) - static_cast<long>(edge_count()) + static_cast<long>(triangles.size());
}

Mesh marching_cubes(const VoxelMask& mask) {
    const CaseTable& table = case_table();
    const Dims d = mask.dims();
    const Vec3 s = mask.spacing();
    auto occ = [&](int i, int j, int k) { return mask.contains(i, j, k) && mask.at(i, j, k); };

    // Lattice points run from -1 to n in each axis (one voxel of padding).
    const long px = d.nx + 2, py = d.ny + 2;
    auto edge_key = [&](int i, int j, int k, int axis) {
        return ((static_cast<long>(k + 1) * py + (j + 1)) * px + (i + 1)) * 3 + axis;
    };

    Mesh mesh;
    std::unordered_map<long, int> vid;
    auto vertex = [&](int i, int j, int k, int axis) {
        const long key = edge_key(i, j, k, axis);
        const auto it = vid.find(key);
        if (it != vid.end()) return it->second;
        Vec3 p = mask.position(i, j, k);
        if (axis == 0) p.x += 0.5 * s.x;
        if (axis == 1) p.y += 0.5 * s.y;
        if (axis == 2) p.z += 0.5 * s.z;
        const int id = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        vid.emplace(key, id);
        return id;
    };

    const auto bounds = occupied_bounds(mask);
    if (!bounds) return mesh;
    for (int k = bounds->lo.k - 1; k <= bounds->hi.k; ++k)
        for (int j = bounds->lo.j - 1; j <= bounds->hi.j; ++j)
            for (int i = bounds->lo.i - 1; i <= bounds->hi.i; ++i) {
                int cfg = 0;
                for (int c = 0; c < 8; ++c) {
                    const Corner o = corner_of(c);
                    if (occ(i + o.x, j + o.y, k + o.z)) cfg |= 1 << c;
                }
                if (cfg == 0 || cfg == 255) continue;
                for (const auto& poly : table.polygons[static_cast<std::size_t>(cfg)]) {
                    std::vector<int> ids;
                    ids.reserve(poly.size());
                    for (int e : poly) {
                        const CubeEdge& ce = table.edges[static_cast<std::size_t>(e)];
                        const Corner a = corner_of(ce.a);
                        ids.push_back(vertex(i + a.x, j + a.y, k + a.z, ce.axis));
                    }
                    for (std::size_t q = 1; q + 1 < ids.size(); ++q) mesh.triangles.push_back({ids[0], ids[q], ids[q + 1]});
                }
            }
    return mesh;
}

void laplacian_smooth(Mesh& mesh, double lambda) {
    std::vector<std::set<int>> nb(mesh.vertices.size());
    for (const auto& t : mesh.triangles)
        for (int i = 0; i < 3; ++i) {
            const int a = t[static_cast<std::size_t>(i)];
            const int b = t[static_cast<std::size_t>((i + 1) % 3)];
            nb[static_cast<std::size_t>(a)].insert(b);
            nb[static_cast<std::size_t>(b)].insert(a);
        }
    std::vector<Vec3> out = mesh.vertices;
    for (std::size_t v = 0; v < out.size(); ++v) {
        if (nb[v].empty()) continue;
        Vec3 m{};
        for (int q : nb[v]) m = m + mesh.vertices[static_cast<std::size_t>(q)];
        m = (1.0 / static_cast<double>(nb[v].size())) * m;
        out[v] = mesh.vertices[v] + lambda * (m - mesh.vertices[v]);
    }
    mesh.vertices = std::move(out);
}

Mesh render_mesh(const VoxelMask& mask) {
    if (mask.occupied_count() == 0) throw Error(ErrorCode::EmptyMask, "mask has no occupied voxels", "render_mesh");
    Mesh m = marching_cubes(mask);
    laplacian_smooth(m, 0.5);
    return m;
}

std::string to_obj(const Mesh& mesh) {
    std::string out;
    out.reserve(mesh.vertices.size() * 40 + mesh.triangles.size() * 24);
    char buf[96];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n", v.x, v.y, v.z);
        out += buf;
    }
    for (const auto& t : mesh.triangles) {
        std::snprintf(buf, sizeof buf, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out += buf;
    }
    return out;
}

void write_obj(const Mesh& mesh, const std::filesystem::path& path) { detail::write_text_file(path, to_obj(mesh)); }

}  // namespace lineamorph
