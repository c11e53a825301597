#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "lineamorph/morphometry.hpp"
#include "morphometry_detail.hpp"

namespace lineamorph {

namespace detail {

namespace {

constexpr int kBridge = 3;  // Chebyshev reach; bridges gaps of up to two voxels

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

struct Edge {
    int to;
    double w;
};

std::vector<double> dijkstra(const std::vector<std::vector<Edge>>& graph, int source, std::vector<int>& pred) {
    const std::size_t n = graph.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    pred.assign(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(source)] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (const Edge& e : graph[static_cast<std::size_t>(u)]) {
            const double nd = d + e.w;
            if (nd < dist[static_cast<std::size_t>(e.to)]) {
                dist[static_cast<std::size_t>(e.to)] = nd;
                pred[static_cast<std::size_t>(e.to)] = u;
                pq.push({nd, e.to});
            }
        }
    }
    return dist;
}

}  // namespace

SliceComponent principal_component(const VoxelMask& mask, int k) {
    const Dims d = mask.dims();
    if (k < 0 || k >= d.nz) {
        throw Error(ErrorCode::EmptyCrossSection, "slice " + std::to_string(k) + " is outside the mask",
                    "axial_cross_section");
    }
    int i0 = d.nx, i1 = -1, j0 = d.ny, j1 = -1;
    for (int j = 0; j < d.ny; ++j) {
        for (int i = 0; i < d.nx; ++i) {
            if (!mask.at(i, j, k)) continue;
            i0 = std::min(i0, i);
            i1 = std::max(i1, i);
            j0 = std::min(j0, j);
            j1 = std::max(j1, j);
        }
    }
    if (i1 < 0) {
        throw Error(ErrorCode::EmptyCrossSection, "slice " + std::to_string(k) + " is empty",
                    "axial_cross_section");
    }

    SliceComponent c;
    c.i0 = i0;
    c.j0 = j0;
    c.w = i1 - i0 + 1;
    c.h = j1 - j0 + 1;
    std::vector<int> id(static_cast<std::size_t>(c.w) * static_cast<std::size_t>(c.h), -1);
    std::vector<std::pair<int, int>> pixels;
    for (int v = 0; v < c.h; ++v) {
        for (int u = 0; u < c.w; ++u) {
            if (!mask.at(i0 + u, j0 + v, k)) continue;
            id[static_cast<std::size_t>(v * c.w + u)] = static_cast<int>(pixels.size());
            pixels.push_back({u, v});
        }
    }
    const int n = static_cast<int>(pixels.size());
    auto id_at = [&](int u, int v) {
        if (u < 0 || v < 0 || u >= c.w || v >= c.h) return -1;
        return id[static_cast<std::size_t>(v * c.w + u)];
    };

    // 8-connected pieces first, then bridge nearby pieces.
    UnionFind pieces(n);
    for (int p = 0; p < n; ++p) {
        const auto [u, v] = pixels[static_cast<std::size_t>(p)];
        for (int dv = -1; dv <= 1; ++dv)
            for (int du = -1; du <= 1; ++du) {
                const int q = id_at(u + du, v + dv);
                if (q >= 0) pieces.unite(p, q);
            }
    }
    std::vector<int> piece(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) piece[static_cast<std::size_t>(p)] = pieces.find(p);

    UnionFind groups(n);
    for (int p = 0; p < n; ++p) groups.unite(p, piece[static_cast<std::size_t>(p)]);
    struct Bridge {
        int a, b;
    };
    std::vector<Bridge> bridges;
    for (int p = 0; p < n; ++p) {
        const auto [u, v] = pixels[static_cast<std::size_t>(p)];
        for (int dv = -kBridge; dv <= kBridge; ++dv)
            for (int du = -kBridge; du <= kBridge; ++du) {
                const int q = id_at(u + du, v + dv);
                if (q <= p) continue;
                if (piece[static_cast<std::size_t>(q)] == piece[static_cast<std::size_t>(p)]) continue;
                bridges.push_back({p, q});
                groups.unite(p, q);
            }
    }

    // Largest bridged group; ties resolved by scan order of its first pixel.
    std::vector<int> size(static_cast<std::size_t>(n), 0);
    for (int p = 0; p < n; ++p) ++size[static_cast<std::size_t>(groups.find(p))];
    int best = -1;
    for (int p = 0; p < n; ++p) {
        const int r = groups.find(p);
        if (r != p) continue;
        if (best < 0 || size[static_cast<std::size_t>(r)] > size[static_cast<std::size_t>(best)]) best = r;
    }

    c.member.assign(id.size(), 0);
    std::vector<int> node(static_cast<std::size_t>(n), -1);
    for (int p = 0; p < n; ++p) {
        if (groups.find(p) != best) continue;
        const auto [u, v] = pixels[static_cast<std::size_t>(p)];
        node[static_cast<std::size_t>(p)] = static_cast<int>(c.pixels.size());
        c.pixels.push_back({u, v});
        c.member[static_cast<std::size_t>(v * c.w + u)] = 1;
    }

    const Vec3 s = mask.spacing();
    auto weight = [&](int a, int b) {
        const auto [ua, va] = c.pixels[static_cast<std::size_t>(a)];
        const auto [ub, vb] = c.pixels[static_cast<std::size_t>(b)];
        return std::hypot((ua - ub) * s.x, (va - vb) * s.y);
    };
    const int m = static_cast<int>(c.pixels.size());
    std::vector<std::vector<Edge>> graph(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) {
        const auto [u, v] = c.pixels[static_cast<std::size_t>(a)];
        for (int dv = -1; dv <= 1; ++dv)
            for (int du = -1; du <= 1; ++du) {
                if (du == 0 && dv == 0) continue;
                const int q = id_at(u + du, v + dv);
                if (q < 0 || node[static_cast<std::size_t>(q)] < 0) continue;
                const int b = node[static_cast<std::size_t>(q)];
                graph[static_cast<std::size_t>(a)].push_back({b, weight(a, b)});
            }
    }
    for (const Bridge& br : bridges) {
        const int a = node[static_cast<std::size_t>(br.a)];
        const int b = node[static_cast<std::size_t>(br.b)];
        if (a < 0 || b < 0) continue;
        const double w = weight(a, b);
        graph[static_cast<std::size_t>(a)].push_back({b, w});
        graph[static_cast<std::size_t>(b)].push_back({a, w});
    }

    // Double sweep: leftmost pixel -> farthest A -> farthest B.
    auto leftmost_less = [&](int a, int b) {
        const auto pa = c.pixels[static_cast<std::size_t>(a)];
        const auto pb = c.pixels[static_cast<std::size_t>(b)];
        return pa.first != pb.first ? pa.first < pb.first : pa.second < pb.second;
    };
    auto farthest = [&](const std::vector<double>& dist) {
        int f = 0;
        for (int q = 1; q < m; ++q) {
            const double dq = dist[static_cast<std::size_t>(q)];
            const double df = dist[static_cast<std::size_t>(f)];
            if (dq > df || (dq == df && leftmost_less(q, f))) f = q;
        }
        return f;
    };
    int start = 0;
    for (int q = 1; q < m; ++q)
        if (leftmost_less(q, start)) start = q;
    std::vector<int> pred;
    const int a = farthest(dijkstra(graph, start, pred));
    const int b = farthest(dijkstra(graph, a, pred));
    for (int q = b; q >= 0; q = pred[static_cast<std::size_t>(q)]) c.path.push_back(q);
    // path runs b -> a; orient it left to right.
    if (leftmost_less(c.path.front(), c.path.back()) == false) std::reverse(c.path.begin(), c.path.end());
    return c;
}

}  // namespace detail

std::vector<Vec2> axial_cross_section(const VoxelMask& mask, int k) {
    const detail::SliceComponent c = detail::principal_component(mask, k);
    std::vector<Vec2> out;
    out.reserve(c.path.size());
    for (int q : c.path) {
        const auto [u, v] = c.pixels[static_cast<std::size_t>(q)];
        const Vec3 p = mask.position(c.i0 + u, c.j0 + v, k);
        out.push_back({p.x, p.y});
    }
    return out;
}

namespace detail {

SliceMeasurement measure_slice(const VoxelMask& mask, const LocalFrame& frame, int k) {
    const SliceComponent c = principal_component(mask, k);
    if (c.path.size() < 2) {
        throw Error(ErrorCode::EmptyCrossSection,
                    "slice " + std::to_string(k) + " is too thin to separate two lateral edges", "measure_slice");
    }
    const double sx = frame.spacing.x;
    const double sy = frame.spacing.y;
    auto local = [&](std::pair<int, int> px) {
        return Vec2{frame.x(c.i0 + px.first), frame.y(c.j0 + px.second)};
    };

    std::vector<Vec2> path;
    path.reserve(c.path.size());
    for (int q : c.path) path.push_back(local(c.pixels[static_cast<std::size_t>(q)]));
    const double path_len = polyline_length(path);
    const double thickness = static_cast<double>(c.pixels.size()) * sx * sy / std::max(path_len, std::min(sx, sy));
    const double rho = std::max(1.5 * std::max(sx, sy), thickness);

    // Centre each path point on the local mass of the sheet.
    const int ru = static_cast<int>(std::ceil(rho / sx));
    const int rv = static_cast<int>(std::ceil(rho / sy));
    std::vector<Vec2> centred;
    centred.reserve(path.size());
    for (int q : c.path) {
        const auto [u, v] = c.pixels[static_cast<std::size_t>(q)];
        const Vec2 p = local({u, v});
        Vec2 acc{};
        int cnt = 0;
        for (int dv = -rv; dv <= rv; ++dv)
            for (int du = -ru; du <= ru; ++du) {
                if (!c.contains(u + du, v + dv)) continue;
                const Vec2 o = local({u + du, v + dv});
                if (distance(o, p) > rho) continue;
                acc = acc + o;
                ++cnt;
            }
        centred.push_back((1.0 / cnt) * acc);
    }
    std::vector<Vec2> smooth = smooth_polyline(centred, 2.0);

    // Extend both ends along the end tangent until leaving the sheet.
    const double step = 0.05 * std::min(sx, sy);
    const double reach = 3.0 * rho + 2.0 * std::max(sx, sy);
    auto inside = [&](Vec2 p) {
        const int u = static_cast<int>(std::lround(p.x / sx)) + frame.anchor.i - c.i0;
        const int v = static_cast<int>(std::lround(p.y / sy)) + frame.anchor.j - c.j0;
        return c.contains(u, v);
    };
    auto extend = [&](Vec2 end, Vec2 inner) {
        const Vec2 d = end - inner;
        const double len = norm(d);
        if (len == 0.0 || !inside(end)) return end;
        const Vec2 dir = (1.0 / len) * d;
        Vec2 pos = end;
        for (double walked = 0.0; walked < reach; walked += step) {
            const Vec2 next = pos + step * dir;
            if (!inside(next)) return pos + (0.5 * step) * dir;
            pos = next;
        }
        return pos;
    };
    const std::size_t n = smooth.size();
    const std::size_t m = std::min<std::size_t>(3, n - 1);
    const Vec2 e0 = extend(smooth.front(), smooth[m]);
    const Vec2 e1 = extend(smooth.back(), smooth[n - 1 - m]);

    SliceMeasurement out;
    out.curve.reserve(n + 2);
    out.curve.push_back(e0);
    out.curve.insert(out.curve.end(), smooth.begin(), smooth.end());
    out.curve.push_back(e1);
    out.ird_mm = distance(e0, e1);
    // a collinear path can sum to one ulp under its own chord
    out.width_mm = std::max(polyline_length(out.curve), out.ird_mm);
    return out;
}

}  // namespace detail

SliceMeasurement measure_slice(const VoxelMask& mask, int k) {
    return detail::measure_slice(mask, LocalFrame::of(mask), k);
}

}  // namespace lineamorph
