#include "msfem/fine_mesh.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace msfem {

namespace {

double tri_area(Vec2 a, Vec2 b, Vec2 c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Vec2 barycenter(Vec2 a, Vec2 b, Vec2 c) {
    return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

}  // namespace

int default_refinement_level(double H, double eps) {
    const double target = std::min(eps / 20.0, H / 8.0);
    int m = 1;
    while (H / std::pow(2.0, m) > target && m < 12) ++m;
    return m;
}

double FineElementMesh::eval_reference(const std::vector<double>& u, double xi, double eta) const {
    xi = std::clamp(xi, 0.0, 1.0);
    eta = std::clamp(eta, 0.0, 1.0);
    if (xi + eta > 1.0) {
        const double s = xi + eta;
        xi /= s;
        eta /= s;
    }
    double sx = xi * n, sy = eta * n;
    int i = std::min(static_cast<int>(std::floor(sx)), n - 1);
    int j = std::min(static_cast<int>(std::floor(sy)), n - 1);
    if (i + j > n - 1) {
        // clamp to the diagonal band
        const int over = i + j - (n - 1);
        if (i >= j) i -= over; else j -= over;
        i = std::max(i, 0);
        j = std::max(j, 0);
    }
    double fx = sx - i, fy = sy - j;
    if (fx + fy <= 1.0) {
        // up cell (i,j),(i+1,j),(i,j+1)
        const double u0 = u[node_id(i, j)], u1 = u[node_id(i + 1, j)], u2 = u[node_id(i, j + 1)];
        return u0 * (1.0 - fx - fy) + u1 * fx + u2 * fy;
    }
    // down cell (i+1,j),(i+1,j+1),(i,j+1); local coords relative to (i+1,j+1)
    const double u0 = u[node_id(i + 1, j)], u1 = u[node_id(i + 1, j + 1)], u2 = u[node_id(i, j + 1)];
    const double a = 1.0 - fy;  // weight of (i+1,j)
    const double c = 1.0 - fx;  // weight of (i,j+1)
    return u0 * a + u2 * c + u1 * (1.0 - a - c);
}

double FineElementMesh::eval_physical(const std::vector<double>& u, Vec2 p) const {
    const Vec2 a = corners[0], b = corners[1], c = corners[2];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double xi = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
    const double eta = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
    return eval_reference(u, xi, eta);
}

FineElementMesh build_fine_mesh_on(const std::array<Vec2, 3>& corners, int n,
                                   const std::function<bool(Vec2)>& is_fluid) {
    assert(n >= 1);
    FineElementMesh fm;
    fm.corners = corners;
    fm.n = n;
    const Vec2 a = corners[0], b = corners[1], c = corners[2];
    const double lab = std::hypot(b.x - a.x, b.y - a.y);
    const double lbc = std::hypot(c.x - b.x, c.y - b.y);
    const double lca = std::hypot(a.x - c.x, a.y - c.y);
    fm.h = std::max({lab, lbc, lca}) / n;

    fm.nodes.reserve((n + 1) * (n + 2) / 2);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n - j; ++i) {
            const double xi = static_cast<double>(i) / n;
            const double eta = static_cast<double>(j) / n;
            fm.nodes.push_back({a.x + xi * (b.x - a.x) + eta * (c.x - a.x),
                                a.y + xi * (b.y - a.y) + eta * (c.y - a.y)});
        }
    }

    fm.cells.reserve(n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n - j; ++i) {
            fm.cells.push_back({{fm.node_id(i, j), fm.node_id(i + 1, j), fm.node_id(i, j + 1)},
                                true, 0.0});
            if (i + j < n - 1) {
                fm.cells.push_back({{fm.node_id(i + 1, j), fm.node_id(i + 1, j + 1),
                                     fm.node_id(i, j + 1)},
                                    true, 0.0});
            }
        }
    }

    fm.solid_closure.assign(fm.nodes.size(), 0);
    fm.touches_fluid.assign(fm.nodes.size(), 0);
    bool any_fluid = false;
    for (FineCell& cell : fm.cells) {
        const Vec2 p0 = fm.nodes[cell.v[0]], p1 = fm.nodes[cell.v[1]], p2 = fm.nodes[cell.v[2]];
        cell.area = std::abs(tri_area(p0, p1, p2));
        cell.fluid = is_fluid(barycenter(p0, p1, p2));
        for (int v : cell.v) {
            if (cell.fluid) fm.touches_fluid[v] = 1;
            else fm.solid_closure[v] = 1;
        }
        if (cell.fluid) {
            any_fluid = true;
            fm.fluid_area += cell.area;
        }
    }
    fm.fully_solid = !any_fluid;

    for (int k = 0; k < 3; ++k) fm.edge_nodes[k].reserve(n + 1);
    for (int i = 0; i <= n; ++i) fm.edge_nodes[0].push_back(fm.node_id(i, 0));
    for (int j = 0; j <= n; ++j) fm.edge_nodes[1].push_back(fm.node_id(n - j, j));
    for (int j = n; j >= 0; --j) fm.edge_nodes[2].push_back(fm.node_id(0, j));
    return fm;
}

FineElementMesh build_fine_mesh(const CoarseMesh& coarse, int tri, const DomainSpec& spec,
                                int m) {
    assert(m >= 1);
    const auto& t = coarse.triangles[tri];
    std::array<Vec2, 3> corners{coarse.vertices[t[0]], coarse.vertices[t[1]],
                                coarse.vertices[t[2]]};
    FineElementMesh fm = build_fine_mesh_on(
        corners, 1 << m, [&spec](Vec2 p) { return fluid_indicator(p, spec); });
    fm.parent = tri;
    return fm;
}

GlobalFineMesh build_global_fine_mesh(int N, const DomainSpec& spec) {
    assert(N >= 1);
    GlobalFineMesh gm;
    gm.N = N;
    const int np = N + 1;
    gm.nodes.reserve(np * np);
    gm.on_outer_boundary.assign(np * np, 0);
    for (int j = 0; j < np; ++j) {
        for (int i = 0; i < np; ++i) {
            gm.nodes.push_back({static_cast<double>(i) / N, static_cast<double>(j) / N});
            if (i == 0 || j == 0 || i == N || j == N) gm.on_outer_boundary[gm.node_id(i, j)] = 1;
        }
    }
    gm.cells.reserve(2 * N * N);
    const double cell_area = 0.5 / (static_cast<double>(N) * N);
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) {
            const int v00 = gm.node_id(i, j), v10 = gm.node_id(i + 1, j);
            const int v01 = gm.node_id(i, j + 1), v11 = gm.node_id(i + 1, j + 1);
            gm.cells.push_back({{v00, v10, v11}, true, cell_area});
            gm.cells.push_back({{v00, v11, v01}, true, cell_area});
        }
    }
    gm.solid_closure.assign(gm.nodes.size(), 0);
    gm.touches_fluid.assign(gm.nodes.size(), 0);
    for (FineCell& cell : gm.cells) {
        const Vec2 p0 = gm.nodes[cell.v[0]], p1 = gm.nodes[cell.v[1]], p2 = gm.nodes[cell.v[2]];
        const Vec2 bc = barycenter(p0, p1, p2);
        cell.fluid = fluid_indicator(bc, spec);
        for (int v : cell.v) {
            if (cell.fluid) gm.touches_fluid[v] = 1;
            else gm.solid_closure[v] = 1;
        }
        if (cell.fluid) gm.fluid_area += cell.area;
    }
    return gm;
}

double eval_global(const GlobalFineMesh& gm, const std::vector<double>& u, Vec2 p) {
    const int N = gm.N;
    const double sx = std::clamp(p.x, 0.0, 1.0) * N;
    const double sy = std::clamp(p.y, 0.0, 1.0) * N;
    const int i = std::min(static_cast<int>(std::floor(sx)), N - 1);
    const int j = std::min(static_cast<int>(std::floor(sy)), N - 1);
    const double fx = sx - i, fy = sy - j;
    const double u00 = u[gm.node_id(i, j)], u10 = u[gm.node_id(i + 1, j)];
    const double u01 = u[gm.node_id(i, j + 1)], u11 = u[gm.node_id(i + 1, j + 1)];
    if (fx >= fy)  // lower triangle (v00, v10, v11)
        return u00 * (1.0 - fx) + u10 * (fx - fy) + u11 * fy;
    return u00 * (1.0 - fy) + u11 * fx + u01 * (fy - fx);
}

Vec2 eval_global_gradient(const GlobalFineMesh& gm, const std::vector<double>& u, Vec2 p) {
    const int N = gm.N;
    const double sx = std::clamp(p.x, 0.0, 1.0) * N;
    const double sy = std::clamp(p.y, 0.0, 1.0) * N;
    const int i = std::min(static_cast<int>(std::floor(sx)), N - 1);
    const int j = std::min(static_cast<int>(std::floor(sy)), N - 1);
    const double fx = sx - i, fy = sy - j;
    const double u00 = u[gm.node_id(i, j)], u10 = u[gm.node_id(i + 1, j)];
    const double u01 = u[gm.node_id(i, j + 1)], u11 = u[gm.node_id(i + 1, j + 1)];
    if (fx >= fy) return {N * (u10 - u00), N * (u11 - u10)};
    return {N * (u11 - u01), N * (u01 - u00)};
}

}  // namespace msfem
