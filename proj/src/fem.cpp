#include "msfem/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace msfem {

namespace {

struct ShapeData {
    double area;
    std::array<Vec2, 3> grad;  // gradients of the three hat functions
    Vec2 bary;
};

ShapeData shape_data(const std::vector<Vec2>& nodes, const FineCell& cell) {
    const Vec2 p0 = nodes[cell.v[0]], p1 = nodes[cell.v[1]], p2 = nodes[cell.v[2]];
    const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    ShapeData s;
    s.area = 0.5 * std::abs(det);
    s.grad[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
    s.grad[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
    s.grad[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
    s.bary = {(p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0};
    return s;
}

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

}  // namespace

Vec2 cell_gradient(const std::vector<Vec2>& nodes, const FineCell& cell,
                   const std::vector<double>& u) {
    const ShapeData s = shape_data(nodes, cell);
    Vec2 g{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
        g.x += u[cell.v[k]] * s.grad[k].x;
        g.y += u[cell.v[k]] * s.grad[k].y;
    }
    return g;
}

void assemble_form_triplets(const std::vector<Vec2>& nodes, const std::vector<FineCell>& cells,
                            double alpha, const AdvectionField& b, Form form,
                            std::vector<Triplet>& out) {
    if (form == Form::Diffusion && alpha <= 0.0)
        throw std::invalid_argument("assemble_form: alpha must be positive");
    for (const FineCell& cell : cells) {
        if (!cell.fluid) continue;
        const ShapeData s = shape_data(nodes, cell);
        switch (form) {
            case Form::Diffusion:
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        out.emplace_back(cell.v[i], cell.v[j],
                                         alpha * s.area * dot(s.grad[i], s.grad[j]));
                break;
            case Form::Advection: {
                const Vec2 bv = b.at(s.bary);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        out.emplace_back(cell.v[i], cell.v[j],
                                         dot(bv, s.grad[j]) * s.area / 3.0);
                break;
            }
            case Form::SkewAdvection: {
                const Vec2 bv = b.at(s.bary);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        const double adv_ij = dot(bv, s.grad[j]) * s.area / 3.0;
                        const double adv_ji = dot(bv, s.grad[i]) * s.area / 3.0;
                        out.emplace_back(cell.v[i], cell.v[j], 0.5 * (adv_ij - adv_ji));
                    }
                break;
            }
            case Form::DivergenceTerm: {
                const double d = b.div_at(s.bary);
                if (d == 0.0) break;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        out.emplace_back(cell.v[i], cell.v[j],
                                         -0.5 * d * s.area / 12.0 * (i == j ? 2.0 : 1.0));
                break;
            }
            case Form::Mass:
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        out.emplace_back(cell.v[i], cell.v[j],
                                         s.area / 12.0 * (i == j ? 2.0 : 1.0));
                break;
        }
    }
}

SpMat assemble_form(const std::vector<Vec2>& nodes, const std::vector<FineCell>& cells,
                    int node_count, double alpha, const AdvectionField& b, Form form) {
    std::vector<Triplet> trips;
    assemble_form_triplets(nodes, cells, alpha, b, form, trips);
    SpMat M(node_count, node_count);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

std::vector<double> assemble_load(const std::vector<Vec2>& nodes,
                                  const std::vector<FineCell>& cells, int node_count,
                                  const std::function<double(Vec2)>& f) {
    std::vector<double> load(node_count, 0.0);
    for (const FineCell& cell : cells) {
        if (!cell.fluid) continue;
        const ShapeData s = shape_data(nodes, cell);
        // exact integration of (P1 interpolant of f) * hat
        double fv[3];
        for (int k = 0; k < 3; ++k) fv[k] = f(nodes[cell.v[k]]);
        for (int i = 0; i < 3; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 3; ++j) acc += fv[j] * (i == j ? 2.0 : 1.0);
            load[cell.v[i]] += s.area / 12.0 * acc;
        }
    }
    return load;
}

EdgeFunctional edge_average_functional(const FineElementMesh& mesh, int local_edge,
                                       PerforationBC mode, const DomainSpec& spec) {
    const std::vector<int>& trace = mesh.edge_nodes[local_edge];
    std::vector<double> w(trace.size(), 0.0);
    double measure = 0.0;
    for (size_t s = 0; s + 1 < trace.size(); ++s) {
        const Vec2 a = mesh.nodes[trace[s]], b = mesh.nodes[trace[s + 1]];
        if (mode == PerforationBC::Neumann) {
            const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
            if (!fluid_indicator(mid, spec)) continue;
        }
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        w[s] += 0.5 * len;
        w[s + 1] += 0.5 * len;
        measure += len;
    }
    EdgeFunctional out;
    if (measure == 0.0) return out;
    out.measure = measure;
    for (size_t s = 0; s < trace.size(); ++s) {
        if (w[s] != 0.0) {
            out.nodes.push_back(trace[s]);
            out.weights.push_back(w[s]);
        }
    }
    return out;
}

SparseSystem finalize_system(int dimension, const std::vector<Triplet>& triplets,
                             const Eigen::VectorXd& rhs,
                             const std::vector<std::pair<int, double>>& constraints) {
    std::vector<char> fixed(dimension, 0);
    std::vector<double> value(dimension, 0.0);
    for (const auto& [dof, g] : constraints) {
        fixed[dof] = 1;
        value[dof] = g;
    }
    SparseSystem sys;
    sys.dimension = dimension;
    sys.rhs = rhs;
    std::vector<Triplet> kept;
    kept.reserve(triplets.size() + constraints.size());
    for (const Triplet& t : triplets) {
        if (fixed[t.row()]) continue;
        if (fixed[t.col()]) {
            sys.rhs[t.row()] -= t.value() * value[t.col()];
            continue;
        }
        kept.push_back(t);
    }
    for (int i = 0; i < dimension; ++i) {
        if (fixed[i]) {
            kept.emplace_back(i, i, 1.0);
            sys.rhs[i] = value[i];
        }
    }
    sys.matrix.resize(dimension, dimension);
    sys.matrix.setFromTriplets(kept.begin(), kept.end());
    return sys;
}

Eigen::VectorXd solve_sparse(const SparseSystem& system, SymmetryHint hint) {
    const SpMat& A = system.matrix;
    const Eigen::VectorXd& b = system.rhs;
    Eigen::VectorXd x;
    constexpr int kDirectThreshold = 120000;
    bool solved = false;
    if (system.dimension <= kDirectThreshold) {
        if (hint == SymmetryHint::Spd) {
            Eigen::SimplicialLDLT<SpMat> ldlt(A);
            if (ldlt.info() == Eigen::Success) {
                x = ldlt.solve(b);
                solved = ldlt.info() == Eigen::Success;
            }
        }
        if (!solved) {
            Eigen::SparseLU<SpMat> lu(A);
            if (lu.info() != Eigen::Success)
                throw std::runtime_error("solve_sparse: singular matrix in LU factorization");
            x = lu.solve(b);
            solved = true;
        }
    } else {
        Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> krylov;
        krylov.setTolerance(1e-13);
        krylov.setMaxIterations(6000);
        krylov.preconditioner().setFillfactor(12);
        krylov.compute(A);
        x = krylov.solve(b);
        const double r = (A * x - b).norm();
        solved = r <= 1e-10 * (b.norm() + A.norm() * x.norm() + 1e-300);
        if (!solved) {
            Eigen::SparseLU<SpMat> lu(A);
            if (lu.info() != Eigen::Success)
                throw std::runtime_error("solve_sparse: Krylov stagnated and LU failed");
            x = lu.solve(b);
            solved = true;
        }
    }
    const double resid = (A * x - b).norm();
    const double scale = b.norm() + A.norm() * x.norm();
    if (!(resid <= 1e-10 * (scale + 1e-300)))
        throw std::runtime_error("solve_sparse: residual " + std::to_string(resid) +
                                 " exceeds tolerance (dim " + std::to_string(system.dimension) +
                                 ")");
    return x;
}

}  // namespace msfem
