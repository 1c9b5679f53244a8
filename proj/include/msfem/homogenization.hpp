#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "msfem/fem.hpp"
#include "msfem/fine_mesh.hpp"
#include "msfem/geometry.hpp"

namespace msfem {

/// Uniform triangulation of the unit cell Y = (0,1)^2 with periodic node
/// identification (n x n squares, split along the same diagonal as the
/// coarse mesh). DOFs are the n^2 equivalence classes; cells keep their
/// true corner coordinates for geometry.
struct PeriodicCellMesh {
    int n = 0;
    std::vector<Vec2> dof_pos;                    // representative position per dof
    std::vector<FineCell> cells;                  // v[] are dof ids
    std::vector<std::array<Vec2, 3>> cell_corners;
    std::vector<char> solid_closure;              // per dof
    std::vector<char> touches_fluid;
    double fluid_area = 0.0;                      // = porosity, |Y| = 1
    bool fluid_connected = true;

    int dof(int i, int j) const { return ((j % n + n) % n) * n + ((i % n + n) % n); }
    int dof_count() const { return n * n; }

    /// P1 interpolation of a dof field at y (wrapped into the unit cell).
    double eval(const std::vector<double>& field, Vec2 y) const;
    /// Piecewise-constant gradient at y.
    Vec2 eval_gradient(const std::vector<double>& field, Vec2 y) const;
};

PeriodicCellMesh build_periodic_cell_mesh(const Motif& motif, int n);

/// Dirichlet corrector: -alpha Lap w + b . grad w = 1 in Y \ O, w = 0 on
/// the (staircase) perforation, Y-periodic. Rejects an empty motif (the
/// problem would be singular up to constants).
std::vector<double> solve_dirichlet_cell(const PeriodicCellMesh& mesh, double alpha, Vec2 b);

struct CellCorrectors {
    PeriodicCellMesh mesh;
    std::array<std::vector<double>, 2> w;  // w_1, w_2, zero-mean
};

/// Neumann correctors: -Lap w_i = 0 in Y \ O, (grad w_i + e_i) . n = 0 on
/// the perforation, Y-periodic, zero mean. Rejects a disconnected fluid
/// region. (The correctors for the isotropic tensor alpha I do not depend
/// on alpha.)
CellCorrectors solve_neumann_correctors(const Motif& motif, int n);

struct EffectiveTensors {
    Eigen::Matrix2d A;
    Eigen::Vector2d b;
    double porosity = 1.0;
};

/// A* e_i = int_{Y\O} alpha (e_i + grad w_i), b* . e_i = int b . (e_i + grad w_i).
EffectiveTensors effective_tensors(const CellCorrectors& c, double alpha, Vec2 b);

/// Periodic Neumann projection: phi solves int grad phi . grad v =
/// int b . grad v over the fluid part, zero mean. B_per = b - grad phi is
/// weakly divergence-free with zero normal flux on the perforation.
std::vector<double> decompose_drift(const PeriodicCellMesh& mesh, Vec2 b);

/// b* evaluated with a per-cell advection field (used to cross-check the
/// drift-decomposition path against the direct one).
Eigen::Vector2d effective_drift(const CellCorrectors& c, const std::vector<Vec2>& b_cell);

/// Per-cell values of B_per = b - grad phi over the cell mesh.
std::vector<Vec2> drift_field(const PeriodicCellMesh& mesh, const std::vector<double>& phi,
                              Vec2 b);

/// Homogenized problem -div(A* grad u) + b* . grad u = porosity * f on the
/// unperforated unit square, u = 0 on the boundary; standard P1 on an N x N
/// structured mesh.
struct HomogenizedSolution {
    GlobalFineMesh mesh;
    std::vector<double> u;
};
HomogenizedSolution solve_homogenized(const Eigen::Matrix2d& A, const Eigen::Vector2d& bstar,
                                      double porosity, const std::function<double(Vec2)>& f,
                                      int N);

struct RatePoint {
    double eps;
    double err_expansion;  // H1 error of the corrector expansion
    double err_plain;      // same norm of u_ref alone (expansion omitted)
    int n_fine;
};

struct RateStudy {
    std::vector<RatePoint> points;
    double fitted_rate = 0.0;  // least-squares slope of log err vs log eps
};

/// Dirichlet problem, b-hat = (1/eps) b: compares u_ref against
/// eps^2 w(./eps) f in the H1 seminorm.
RateStudy rate_study_dirichlet(double alpha, Vec2 b, const Motif& motif,
                               const std::function<double(Vec2)>& f,
                               const std::vector<double>& eps_list, int cell_n,
                               bool paper_scale);

/// Neumann problem, b-hat = b(./eps) (constant b): compares u_ref against
/// u* + eps sum_i w_i(./eps) d_i u* in the full H1 norm.
RateStudy rate_study_neumann(double alpha, Vec2 b, const Motif& motif,
                             const std::function<double(Vec2)>& f,
                             const std::vector<double>& eps_list, int cell_n, bool paper_scale);

}  // namespace msfem
