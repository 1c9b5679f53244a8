#include "msfem/homogenization.hpp"

#include "msfem/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace msfem {

namespace {

struct CellShape {
    double area;
    std::array<Vec2, 3> grad;
};

CellShape shape_of(const std::array<Vec2, 3>& c) {
    const double det =
        (c[1].x - c[0].x) * (c[2].y - c[0].y) - (c[2].x - c[0].x) * (c[1].y - c[0].y);
    CellShape s;
    s.area = 0.5 * std::abs(det);
    s.grad[0] = {(c[1].y - c[2].y) / det, (c[2].x - c[1].x) / det};
    s.grad[1] = {(c[2].y - c[0].y) / det, (c[0].x - c[2].x) / det};
    s.grad[2] = {(c[0].y - c[1].y) / det, (c[1].x - c[0].x) / det};
    return s;
}

Vec2 field_gradient(const PeriodicCellMesh& mesh, const std::vector<double>& u, size_t cell) {
    const CellShape s = shape_of(mesh.cell_corners[cell]);
    Vec2 g{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
        g.x += u[mesh.cells[cell].v[k]] * s.grad[k].x;
        g.y += u[mesh.cells[cell].v[k]] * s.grad[k].y;
    }
    return g;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Stiffness (+ optional constant advection) triplets over the fluid cells.
void cell_form_triplets(const PeriodicCellMesh& mesh, double alpha, Vec2 b,
                        std::vector<Triplet>& out) {
    for (size_t c = 0; c < mesh.cells.size(); ++c) {
        const FineCell& cell = mesh.cells[c];
        if (!cell.fluid) continue;
        const CellShape s = shape_of(mesh.cell_corners[c]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double v = alpha * s.area *
                           (s.grad[i].x * s.grad[j].x + s.grad[i].y * s.grad[j].y);
                v += (b.x * s.grad[j].x + b.y * s.grad[j].y) * s.area / 3.0;
                out.emplace_back(cell.v[i], cell.v[j], v);
            }
    }
}

// Lumped-free mass functional int v over fluid cells (exact for P1).
std::vector<double> cell_volume_functional(const PeriodicCellMesh& mesh) {
    std::vector<double> m(mesh.dof_count(), 0.0);
    for (size_t c = 0; c < mesh.cells.size(); ++c) {
        const FineCell& cell = mesh.cells[c];
        if (!cell.fluid) continue;
        for (int k = 0; k < 3; ++k) m[cell.v[k]] += cell.area / 3.0;
    }
    return m;
}

std::vector<std::pair<int, double>> orphan_constraints(const PeriodicCellMesh& mesh) {
    std::vector<std::pair<int, double>> fixed;
    for (int i = 0; i < mesh.dof_count(); ++i)
        if (!mesh.touches_fluid[i]) fixed.emplace_back(i, 0.0);
    return fixed;
}

// Solves a pure-Neumann-type singular system with one zero-mean Lagrange
// multiplier appended; returns the dof field.
std::vector<double> solve_zero_mean(const PeriodicCellMesh& mesh, std::vector<Triplet> trips,
                                    Eigen::VectorXd rhs) {
    const int nd = mesh.dof_count();
    const std::vector<double> m = cell_volume_functional(mesh);
    for (int i = 0; i < nd; ++i) {
        if (m[i] == 0.0) continue;
        trips.emplace_back(i, nd, m[i]);
        trips.emplace_back(nd, i, m[i]);
    }
    Eigen::VectorXd full_rhs = Eigen::VectorXd::Zero(nd + 1);
    full_rhs.head(nd) = rhs;
    const SparseSystem sys = finalize_system(nd + 1, trips, full_rhs, orphan_constraints(mesh));
    const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::General);
    return std::vector<double>(x.data(), x.data() + nd);
}

// Extends a corrector field from the fluid part into the solid cells by a
// discrete harmonic continuation of its interface values. Pointwise
// evaluation of the corrector expansion samples a reference mesh with a
// different staircase, and raw zeros in the solid would fake O(1) jumps
// there. Fluid-cell integrals (the effective tensors) are untouched.
void extend_into_solid(const PeriodicCellMesh& mesh, std::vector<double>& field) {
    std::vector<Triplet> trips;
    for (size_t c = 0; c < mesh.cells.size(); ++c) {
        const FineCell& cell = mesh.cells[c];
        if (cell.fluid) continue;
        const CellShape s = shape_of(mesh.cell_corners[c]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trips.emplace_back(cell.v[i], cell.v[j],
                                   s.area * (s.grad[i].x * s.grad[j].x +
                                             s.grad[i].y * s.grad[j].y));
    }
    if (trips.empty()) return;
    std::vector<std::pair<int, double>> fixed;
    for (int i = 0; i < mesh.dof_count(); ++i)
        if (mesh.touches_fluid[i]) fixed.emplace_back(i, field[i]);
    if (fixed.empty()) return;
    const SparseSystem sys = finalize_system(mesh.dof_count(), trips,
                                             Eigen::VectorXd::Zero(mesh.dof_count()), fixed);
    const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::Spd);
    for (int i = 0; i < mesh.dof_count(); ++i)
        if (!mesh.touches_fluid[i]) field[i] = x[i];
}

double h1_seminorm_sq(const GlobalFineMesh& gm, const std::vector<double>& u) {
    double acc = 0.0;
    for (const FineCell& cell : gm.cells) {
        if (!cell.fluid) continue;
        const Vec2 p0 = gm.nodes[cell.v[0]], p1 = gm.nodes[cell.v[1]], p2 = gm.nodes[cell.v[2]];
        const CellShape s = shape_of({p0, p1, p2});
        Vec2 g{0.0, 0.0};
        for (int k = 0; k < 3; ++k) {
            g.x += u[cell.v[k]] * s.grad[k].x;
            g.y += u[cell.v[k]] * s.grad[k].y;
        }
        acc += cell.area * (g.x * g.x + g.y * g.y);
    }
    return acc;
}

double l2_norm_sq(const GlobalFineMesh& gm, const std::vector<double>& u) {
    double acc = 0.0;
    for (const FineCell& cell : gm.cells) {
        if (!cell.fluid) continue;
        const double a = u[cell.v[0]], b = u[cell.v[1]], c = u[cell.v[2]];
        acc += cell.area / 6.0 * (a * a + b * b + c * c + a * b + b * c + a * c);
    }
    return acc;
}

double fit_rate(const std::vector<RatePoint>& pts) {
    // least-squares slope of log err against log(1/eps)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (const RatePoint& p : pts) {
        const double x = -std::log(p.eps), y = -std::log(p.err_expansion);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

double PeriodicCellMesh::eval(const std::vector<double>& field, Vec2 y) const {
    const double wx = y.x - std::floor(y.x);
    const double wy = y.y - std::floor(y.y);
    const double sx = wx * n, sy = wy * n;
    const int i = std::min(static_cast<int>(std::floor(sx)), n - 1);
    const int j = std::min(static_cast<int>(std::floor(sy)), n - 1);
    const double fx = sx - i, fy = sy - j;
    const double u00 = field[dof(i, j)], u10 = field[dof(i + 1, j)];
    const double u01 = field[dof(i, j + 1)], u11 = field[dof(i + 1, j + 1)];
    if (fx >= fy) return u00 * (1.0 - fx) + u10 * (fx - fy) + u11 * fy;
    return u00 * (1.0 - fy) + u11 * fx + u01 * (fy - fx);
}

Vec2 PeriodicCellMesh::eval_gradient(const std::vector<double>& field, Vec2 y) const {
    const double wx = y.x - std::floor(y.x);
    const double wy = y.y - std::floor(y.y);
    const double sx = wx * n, sy = wy * n;
    const int i = std::min(static_cast<int>(std::floor(sx)), n - 1);
    const int j = std::min(static_cast<int>(std::floor(sy)), n - 1);
    const double fx = sx - i, fy = sy - j;
    const double u00 = field[dof(i, j)], u10 = field[dof(i + 1, j)];
    const double u01 = field[dof(i, j + 1)], u11 = field[dof(i + 1, j + 1)];
    if (fx >= fy)
        return {n * (u10 - u00), n * (u11 - u10)};
    return {n * (u11 - u01), n * (u01 - u00)};
}

PeriodicCellMesh build_periodic_cell_mesh(const Motif& motif, int n) {
    if (n < 2) throw std::invalid_argument("build_periodic_cell_mesh: n >= 2 required");
    PeriodicCellMesh mesh;
    mesh.n = n;
    mesh.dof_pos.resize(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            mesh.dof_pos[mesh.dof(i, j)] = {static_cast<double>(i) / n,
                                            static_cast<double>(j) / n};
    mesh.solid_closure.assign(n * n, 0);
    mesh.touches_fluid.assign(n * n, 0);

    auto is_fluid = [&motif](Vec2 p) {
        for (const Rect& r : motif.rectangles)
            if (r.contains_strict(p.x, p.y)) return false;
        return true;
    };

    mesh.cells.reserve(2 * n * n);
    mesh.cell_corners.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Vec2 p00{static_cast<double>(i) / n, static_cast<double>(j) / n};
            const Vec2 p10{static_cast<double>(i + 1) / n, static_cast<double>(j) / n};
            const Vec2 p01{static_cast<double>(i) / n, static_cast<double>(j + 1) / n};
            const Vec2 p11{static_cast<double>(i + 1) / n, static_cast<double>(j + 1) / n};
            const std::array<std::array<Vec2, 3>, 2> tris{{{p00, p10, p11}, {p00, p11, p01}}};
            const std::array<std::array<int, 3>, 2> dofs{
                {{mesh.dof(i, j), mesh.dof(i + 1, j), mesh.dof(i + 1, j + 1)},
                 {mesh.dof(i, j), mesh.dof(i + 1, j + 1), mesh.dof(i, j + 1)}}};
            for (int t = 0; t < 2; ++t) {
                FineCell cell;
                cell.v = dofs[t];
                cell.area = 0.5 / (static_cast<double>(n) * n);
                const Vec2 bary{(tris[t][0].x + tris[t][1].x + tris[t][2].x) / 3.0,
                                (tris[t][0].y + tris[t][1].y + tris[t][2].y) / 3.0};
                cell.fluid = is_fluid(bary);
                mesh.cells.push_back(cell);
                mesh.cell_corners.push_back(tris[t]);
                for (int v : cell.v) {
                    if (cell.fluid) mesh.touches_fluid[v] = 1;
                    else mesh.solid_closure[v] = 1;
                }
                if (cell.fluid) mesh.fluid_area += cell.area;
            }
        }
    }

    UnionFind uf(n * n);
    for (const FineCell& cell : mesh.cells) {
        if (!cell.fluid) continue;
        uf.unite(cell.v[0], cell.v[1]);
        uf.unite(cell.v[1], cell.v[2]);
    }
    int root = -1;
    mesh.fluid_connected = true;
    for (int i = 0; i < n * n; ++i) {
        if (!mesh.touches_fluid[i]) continue;
        if (root < 0) root = uf.find(i);
        else if (uf.find(i) != root) mesh.fluid_connected = false;
    }
    return mesh;
}

std::vector<double> solve_dirichlet_cell(const PeriodicCellMesh& mesh, double alpha, Vec2 b) {
    if (alpha <= 0.0) throw std::invalid_argument("solve_dirichlet_cell: alpha <= 0");
    bool any_solid = false;
    for (char s : mesh.solid_closure) any_solid |= (s != 0);
    if (!any_solid)
        throw std::invalid_argument(
            "solve_dirichlet_cell: empty motif leaves the problem singular up to constants");

    std::vector<Triplet> trips;
    cell_form_triplets(mesh, alpha, b, trips);
    const std::vector<double> load = cell_volume_functional(mesh);
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(load.data(), load.size());

    std::vector<std::pair<int, double>> fixed;
    for (int i = 0; i < mesh.dof_count(); ++i)
        if (mesh.solid_closure[i]) fixed.emplace_back(i, 0.0);

    const SparseSystem sys = finalize_system(mesh.dof_count(), trips, rhs, fixed);
    const auto hint = (b.x == 0.0 && b.y == 0.0) ? SymmetryHint::Spd : SymmetryHint::General;
    const Eigen::VectorXd x = solve_sparse(sys, hint);
    return std::vector<double>(x.data(), x.data() + x.size());
}

CellCorrectors solve_neumann_correctors(const Motif& motif, int n) {
    CellCorrectors out;
    out.mesh = build_periodic_cell_mesh(motif, n);
    const PeriodicCellMesh& mesh = out.mesh;
    if (!mesh.fluid_connected)
        throw std::invalid_argument("solve_neumann_correctors: fluid region disconnected");

    std::vector<Triplet> trips;
    cell_form_triplets(mesh, 1.0, {0.0, 0.0}, trips);

    for (int dir = 0; dir < 2; ++dir) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh.dof_count());
        for (size_t c = 0; c < mesh.cells.size(); ++c) {
            const FineCell& cell = mesh.cells[c];
            if (!cell.fluid) continue;
            const CellShape s = shape_of(mesh.cell_corners[c]);
            for (int k = 0; k < 3; ++k)
                rhs[cell.v[k]] -= s.area * (dir == 0 ? s.grad[k].x : s.grad[k].y);
        }
        out.w[dir] = solve_zero_mean(mesh, trips, rhs);
        extend_into_solid(mesh, out.w[dir]);
    }
    return out;
}

EffectiveTensors effective_tensors(const CellCorrectors& c, double alpha, Vec2 b) {
    const PeriodicCellMesh& mesh = c.mesh;
    EffectiveTensors t;
    t.A.setZero();
    t.b.setZero();
    t.porosity = mesh.fluid_area;
    for (size_t cell = 0; cell < mesh.cells.size(); ++cell) {
        if (!mesh.cells[cell].fluid) continue;
        const double area = mesh.cells[cell].area;
        for (int i = 0; i < 2; ++i) {
            Vec2 g = field_gradient(mesh, c.w[i], cell);
            g.x += (i == 0) ? 1.0 : 0.0;
            g.y += (i == 1) ? 1.0 : 0.0;
            t.A(0, i) += alpha * area * g.x;
            t.A(1, i) += alpha * area * g.y;
            t.b(i) += area * (b.x * g.x + b.y * g.y);
        }
    }
    return t;
}

std::vector<double> decompose_drift(const PeriodicCellMesh& mesh, Vec2 b) {
    if (!mesh.fluid_connected)
        throw std::invalid_argument("decompose_drift: fluid region disconnected");
    std::vector<Triplet> trips;
    cell_form_triplets(mesh, 1.0, {0.0, 0.0}, trips);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh.dof_count());
    for (size_t c = 0; c < mesh.cells.size(); ++c) {
        const FineCell& cell = mesh.cells[c];
        if (!cell.fluid) continue;
        const CellShape s = shape_of(mesh.cell_corners[c]);
        for (int k = 0; k < 3; ++k)
            rhs[cell.v[k]] += s.area * (b.x * s.grad[k].x + b.y * s.grad[k].y);
    }
    return solve_zero_mean(mesh, trips, rhs);
}

std::vector<Vec2> drift_field(const PeriodicCellMesh& mesh, const std::vector<double>& phi,
                              Vec2 b) {
    std::vector<Vec2> out(mesh.cells.size(), b);
    for (size_t c = 0; c < mesh.cells.size(); ++c) {
        if (!mesh.cells[c].fluid) continue;
        const Vec2 g = field_gradient(mesh, phi, c);
        out[c] = {b.x - g.x, b.y - g.y};
    }
    return out;
}

Eigen::Vector2d effective_drift(const CellCorrectors& c, const std::vector<Vec2>& b_cell) {
    const PeriodicCellMesh& mesh = c.mesh;
    if (b_cell.size() != mesh.cells.size())
        throw std::invalid_argument("effective_drift: mesh mismatch");
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (size_t cell = 0; cell < mesh.cells.size(); ++cell) {
        if (!mesh.cells[cell].fluid) continue;
        const double area = mesh.cells[cell].area;
        for (int i = 0; i < 2; ++i) {
            Vec2 g = field_gradient(mesh, c.w[i], cell);
            g.x += (i == 0) ? 1.0 : 0.0;
            g.y += (i == 1) ? 1.0 : 0.0;
            out(i) += area * (b_cell[cell].x * g.x + b_cell[cell].y * g.y);
        }
    }
    return out;
}

HomogenizedSolution solve_homogenized(const Eigen::Matrix2d& A, const Eigen::Vector2d& bstar,
                                      double porosity, const std::function<double(Vec2)>& f,
                                      int N) {
    const Eigen::Matrix2d sym = 0.5 * (A + A.transpose());
    if (sym(0, 0) <= 0.0 || sym.determinant() <= 0.0)
        throw std::invalid_argument("solve_homogenized: A* not positive definite");

    HomogenizedSolution out;
    DomainSpec empty;
    empty.epsilon = 1.0;
    empty.pattern = PerforationPattern::periodic(Motif::none());
    out.mesh = build_global_fine_mesh(N, empty);
    const GlobalFineMesh& gm = out.mesh;
    const int nd = gm.node_count();

    std::vector<Triplet> trips;
    for (const FineCell& cell : gm.cells) {
        const Vec2 p0 = gm.nodes[cell.v[0]], p1 = gm.nodes[cell.v[1]], p2 = gm.nodes[cell.v[2]];
        const CellShape s = shape_of({p0, p1, p2});
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const Eigen::Vector2d gj(s.grad[j].x, s.grad[j].y);
                const Eigen::Vector2d gi(s.grad[i].x, s.grad[i].y);
                double v = s.area * gi.dot(A * gj);
                v += s.area / 3.0 * (bstar(0) * s.grad[j].x + bstar(1) * s.grad[j].y);
                trips.emplace_back(cell.v[i], cell.v[j], v);
            }
    }
    const auto load = assemble_load(gm.nodes, gm.cells, nd, f);
    Eigen::VectorXd rhs = porosity * Eigen::Map<const Eigen::VectorXd>(load.data(), nd);

    std::vector<std::pair<int, double>> fixed;
    for (int i = 0; i < nd; ++i)
        if (gm.on_outer_boundary[i]) fixed.emplace_back(i, 0.0);

    const SparseSystem sys = finalize_system(nd, trips, rhs, fixed);
    const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::General);
    out.u.assign(x.data(), x.data() + x.size());
    return out;
}

RateStudy rate_study_dirichlet(double alpha, Vec2 b, const Motif& motif,
                               const std::function<double(Vec2)>& f,
                               const std::vector<double>& eps_list, int cell_n,
                               bool paper_scale) {
    const PeriodicCellMesh cell_mesh = build_periodic_cell_mesh(motif, cell_n);
    const std::vector<double> w = solve_dirichlet_cell(cell_mesh, alpha, b);

    RateStudy study;
    const double divisor = paper_scale ? 20.0 : 10.0;
    for (double eps : eps_list) {
        ReferenceProblem problem;
        problem.spec.epsilon = eps;
        problem.spec.pattern = PerforationPattern::periodic(motif);
        problem.spec.perforation_bc = PerforationBC::Dirichlet;
        problem.alpha = alpha;
        const Vec2 bh{b.x / eps, b.y / eps};
        problem.b = AdvectionField::constant(bh);
        problem.b_max = std::hypot(bh.x, bh.y);
        problem.f = f;
        const int n_fine = std::max(static_cast<int>(std::ceil(divisor / eps)),
                                    peclet_n_fine(problem.b_max, alpha));
        const ReferenceSolution ref = solve_reference(problem, n_fine);

        std::vector<double> diff(ref.u);
        for (int i = 0; i < ref.mesh.node_count(); ++i) {
            const Vec2 p = ref.mesh.nodes[i];
            const double we = cell_mesh.eval(w, {p.x / eps, p.y / eps});
            diff[i] -= eps * eps * we * f(p);
        }
        RatePoint pt;
        pt.eps = eps;
        pt.n_fine = n_fine;
        pt.err_expansion = std::sqrt(h1_seminorm_sq(ref.mesh, diff));
        pt.err_plain = std::sqrt(h1_seminorm_sq(ref.mesh, ref.u));
        study.points.push_back(pt);
    }
    if (study.points.size() >= 2) study.fitted_rate = fit_rate(study.points);
    return study;
}

RateStudy rate_study_neumann(double alpha, Vec2 b, const Motif& motif,
                             const std::function<double(Vec2)>& f,
                             const std::vector<double>& eps_list, int cell_n, bool paper_scale) {
    const CellCorrectors correctors = solve_neumann_correctors(motif, cell_n);
    const EffectiveTensors tensors = effective_tensors(correctors, alpha, b);
    const int n_star = paper_scale ? 512 : 256;
    const HomogenizedSolution star =
        solve_homogenized(tensors.A, tensors.b, tensors.porosity, f, n_star);

    RateStudy study;
    const double divisor = paper_scale ? 20.0 : 10.0;
    for (double eps : eps_list) {
        ReferenceProblem problem;
        problem.spec.epsilon = eps;
        problem.spec.pattern = PerforationPattern::periodic(motif);
        problem.spec.perforation_bc = PerforationBC::Neumann;
        problem.alpha = alpha;
        // b-hat = b(./eps) with constant b is just b
        problem.b = AdvectionField::constant(b);
        problem.b_max = std::hypot(b.x, b.y);
        problem.f = f;
        const int n_fine = std::max(static_cast<int>(std::ceil(divisor / eps)),
                                    peclet_n_fine(problem.b_max, alpha));
        const ReferenceSolution ref = solve_reference(problem, n_fine);

        std::vector<double> diff(ref.u);
        for (int i = 0; i < ref.mesh.node_count(); ++i) {
            const Vec2 p = ref.mesh.nodes[i];
            const double us = eval_global(star.mesh, star.u, p);
            const Vec2 gs = eval_global_gradient(star.mesh, star.u, p);
            const Vec2 y{p.x / eps, p.y / eps};
            const double w1 = correctors.mesh.eval(correctors.w[0], y);
            const double w2 = correctors.mesh.eval(correctors.w[1], y);
            diff[i] -= us + eps * (w1 * gs.x + w2 * gs.y);
        }
        RatePoint pt;
        pt.eps = eps;
        pt.n_fine = n_fine;
        pt.err_expansion = std::sqrt(h1_seminorm_sq(ref.mesh, diff) + l2_norm_sq(ref.mesh, diff));
        pt.err_plain = std::sqrt(h1_seminorm_sq(ref.mesh, ref.u) + l2_norm_sq(ref.mesh, ref.u));
        study.points.push_back(pt);
    }
    if (study.points.size() >= 2) study.fitted_rate = fit_rate(study.points);
    return study;
}

}  // namespace msfem
