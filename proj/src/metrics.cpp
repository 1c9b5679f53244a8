#include "msfem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "msfem/fem.hpp"

namespace msfem {

namespace {

Vec2 barycenter_of(const std::vector<Vec2>& nodes, const FineCell& cell) {
    const Vec2 a = nodes[cell.v[0]], b = nodes[cell.v[1]], c = nodes[cell.v[2]];
    return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double grad_sq(const std::vector<Vec2>& nodes, const FineCell& cell,
               const std::vector<double>& u) {
    const Vec2 g = cell_gradient(nodes, cell, u);
    return g.x * g.x + g.y * g.y;
}

}  // namespace

LayerInfo layer_region(double b_sup, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("layer_region: alpha <= 0");
    LayerInfo info;
    info.pe = b_sup / (2.0 * alpha);
    if (info.pe <= 1.0) {
        info.degenerate = true;
        return info;
    }
    info.delta = std::min(std::log(info.pe) / info.pe, 0.5);
    return info;
}

double broken_h1_global(const GlobalFineMesh& gm, const std::vector<double>& u,
                        const Region& region) {
    double acc = 0.0;
    for (const FineCell& cell : gm.cells) {
        if (!cell.fluid) continue;
        if (!region.contains(barycenter_of(gm.nodes, cell))) continue;
        acc += cell.area * grad_sq(gm.nodes, cell, u);
    }
    return std::sqrt(acc);
}

double broken_h1_elements(const BasisSet& bases, const std::vector<std::vector<double>>& fields,
                          const Region& region) {
    if (fields.size() != bases.meshes.size())
        throw std::invalid_argument("broken_h1_elements: field/mesh count mismatch");
    double acc = 0.0;
    for (size_t t = 0; t < bases.meshes.size(); ++t) {
        const FineElementMesh& fm = bases.meshes[t];
        for (const FineCell& cell : fm.cells) {
            if (!cell.fluid) continue;
            if (!region.contains(barycenter_of(fm.nodes, cell))) continue;
            acc += cell.area * grad_sq(fm.nodes, cell, fields[t]);
        }
    }
    return std::sqrt(acc);
}

std::vector<double> transfer_to_reference(const CoarseMesh& coarse, const BasisSet& bases,
                                          const CoarseSolution& sol, const GlobalFineMesh& gm) {
    // expand once per element, then point-evaluate at reference nodes
    std::vector<std::vector<double>> expanded(coarse.triangles.size());
    for (size_t t = 0; t < coarse.triangles.size(); ++t)
        expanded[t] = sol.expand_element(coarse, bases, static_cast<int>(t));

    const int N = coarse.N;
    std::vector<double> out(gm.node_count(), 0.0);
    for (int nid = 0; nid < gm.node_count(); ++nid) {
        const Vec2 p = gm.nodes[nid];
        const double sx = std::clamp(p.x, 0.0, 1.0) * N;
        const double sy = std::clamp(p.y, 0.0, 1.0) * N;
        const int i = std::min(static_cast<int>(std::floor(sx)), N - 1);
        const int j = std::min(static_cast<int>(std::floor(sy)), N - 1);
        const double fx = sx - i, fy = sy - j;
        const int tri = 2 * (j * N + i) + (fx >= fy ? 0 : 1);
        out[nid] = bases.meshes[tri].eval_physical(expanded[tri], p);
    }
    return out;
}

RelativeError relative_error(const GlobalFineMesh& gm, const std::vector<double>& u_h,
                             const std::vector<double>& u_ref, const Region& region) {
    std::vector<double> diff(u_ref.size());
    for (size_t i = 0; i < diff.size(); ++i) diff[i] = u_h[i] - u_ref[i];
    const double denom = broken_h1_global(gm, u_ref, region);
    RelativeError err;
    if (denom == 0.0) {
        err.undefined = true;
        return err;
    }
    err.value = broken_h1_global(gm, diff, region) / denom;
    return err;
}

}  // namespace msfem
