#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <optional>
#include <vector>

#include "msfem/fine_mesh.hpp"
#include "msfem/geometry.hpp"

namespace msfem {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Advection field sampled pointwise; divergence is supplied analytically
/// when nonzero (the one-point quadrature uses barycenter values).
struct AdvectionField {
    std::function<Vec2(Vec2)> value;                 // may be null for b = 0
    std::function<double(Vec2)> divergence;          // null means div b = 0

    bool is_zero() const { return !value; }
    Vec2 at(Vec2 p) const { return value ? value(p) : Vec2{0.0, 0.0}; }
    double div_at(Vec2 p) const { return divergence ? divergence(p) : 0.0; }

    static AdvectionField zero() { return {}; }
    static AdvectionField constant(Vec2 b) {
        return {[b](Vec2) { return b; }, nullptr};
    }
};

enum class Form {
    Diffusion,        // int alpha grad u . grad v
    Advection,        // int (b . grad u) v
    SkewAdvection,    // 1/2 int (b.grad u) v - 1/2 int (b.grad v) u
    DivergenceTerm,   // -1/2 int u v div b
    Mass,             // int u v
};

/// Gradient of a P1 nodal field on one cell (constant per cell).
Vec2 cell_gradient(const std::vector<Vec2>& nodes, const FineCell& cell,
                   const std::vector<double>& u);

/// Assembles the requested bilinear form over the fluid cells.
/// Entry (i,j) tests basis j (trial) against basis i (test).
/// Rejects alpha <= 0 for the diffusion form.
SpMat assemble_form(const std::vector<Vec2>& nodes, const std::vector<FineCell>& cells,
                    int node_count, double alpha, const AdvectionField& b, Form form);

/// Same, accumulated into a triplet list (for composite element forms).
void assemble_form_triplets(const std::vector<Vec2>& nodes, const std::vector<FineCell>& cells,
                            double alpha, const AdvectionField& b, Form form,
                            std::vector<Triplet>& out);

/// P1 load vector int f v over fluid cells, with f interpolated at nodes.
std::vector<double> assemble_load(const std::vector<Vec2>& nodes,
                                  const std::vector<FineCell>& cells, int node_count,
                                  const std::function<double(Vec2)>& f);

/// Linear functional v -> int_E v over the trace mesh of a local edge.
/// Dirichlet mode integrates over all of E (trapezoid rule); Neumann mode
/// only over the segments whose midpoint is fluid. A degenerate edge
/// (no fluid segment in Neumann mode) yields the zero functional.
struct EdgeFunctional {
    std::vector<int> nodes;
    std::vector<double> weights;  // same length as nodes
    double measure = 0.0;         // integrated length

    bool zero() const { return nodes.empty(); }
    double apply(const std::vector<double>& u) const {
        double s = 0.0;
        for (size_t k = 0; k < nodes.size(); ++k) s += weights[k] * u[nodes[k]];
        return s;
    }
};

EdgeFunctional edge_average_functional(const FineElementMesh& mesh, int local_edge,
                                       PerforationBC mode, const DomainSpec& spec);

/// Sparse linear system with Dirichlet-type constraints imposed by
/// row/column elimination with identity placement.
struct SparseSystem {
    int dimension = 0;
    SpMat matrix;
    Eigen::VectorXd rhs;
};

/// Builds the system from triplets and a raw right-hand side, eliminating
/// the constrained dofs (value moved to the rhs, unit diagonal placed).
SparseSystem finalize_system(int dimension, const std::vector<Triplet>& triplets,
                             const Eigen::VectorXd& rhs,
                             const std::vector<std::pair<int, double>>& constraints);

enum class SymmetryHint { Spd, General };

struct SolveFailure {
    std::string message;
};

/// Direct sparse factorization below a size threshold, ILU-preconditioned
/// Krylov above it. Postcondition: ||Ax-b|| <= 1e-10 (||b|| + ||A||_F ||x||).
Eigen::VectorXd solve_sparse(const SparseSystem& system, SymmetryHint hint);

}  // namespace msfem
