#include "msfem/reference.hpp"

#include <cmath>

namespace msfem {

int peclet_n_fine(double b_max, double alpha) {
    if (b_max <= 0.0) return 1;
    // cell diameter of the structured mesh is sqrt(2)/N
    const double n = b_max * std::sqrt(2.0) / (2.0 * alpha);
    return std::max(1, static_cast<int>(std::ceil(n)));
}

int default_n_fine(const ReferenceProblem& problem, bool paper_scale) {
    const double divisor = paper_scale ? 20.0 : 10.0;
    const double target_h = problem.spec.epsilon / divisor;
    const int n_eps = std::max(1, static_cast<int>(std::ceil(std::sqrt(2.0) / target_h)));
    return std::max(n_eps, peclet_n_fine(problem.b_max, problem.alpha));
}

ReferenceSolution solve_reference(const ReferenceProblem& problem, int n_fine) {
    const double h = std::sqrt(2.0) / n_fine;
    if (problem.b_max * h / (2.0 * problem.alpha) > 1.0 + 1e-12)
        throw UnderResolvedError(peclet_n_fine(problem.b_max, problem.alpha));

    ReferenceSolution out;
    out.mesh = build_global_fine_mesh(n_fine, problem.spec);
    const GlobalFineMesh& gm = out.mesh;
    const int n = gm.node_count();

    std::vector<Triplet> trips;
    assemble_form_triplets(gm.nodes, gm.cells, problem.alpha, AdvectionField::zero(),
                           Form::Diffusion, trips);
    if (!problem.b.is_zero())
        assemble_form_triplets(gm.nodes, gm.cells, problem.alpha, problem.b, Form::Advection,
                               trips);
    const auto load = assemble_load(gm.nodes, gm.cells, n, problem.f);
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(load.data(), n);

    std::vector<std::pair<int, double>> fixed;
    std::vector<char> seen(n, 0);
    auto fix = [&](int i) {
        if (!seen[i]) {
            seen[i] = 1;
            fixed.emplace_back(i, 0.0);
        }
    };
    for (int i = 0; i < n; ++i)
        if (gm.on_outer_boundary[i]) fix(i);
    if (problem.spec.perforation_bc == PerforationBC::Dirichlet) {
        for (int i = 0; i < n; ++i)
            if (gm.solid_closure[i]) fix(i);
    } else {
        for (int i = 0; i < n; ++i)
            if (!gm.touches_fluid[i]) fix(i);
    }

    const SparseSystem sys = finalize_system(n, trips, rhs, fixed);
    const auto hint = problem.b.is_zero() ? SymmetryHint::Spd : SymmetryHint::General;
    const Eigen::VectorXd x = solve_sparse(sys, hint);
    out.u.assign(x.data(), x.data() + x.size());
    return out;
}

}  // namespace msfem
