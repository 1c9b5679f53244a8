#pragma once

#include <functional>
#include <stdexcept>

#include "msfem/fem.hpp"
#include "msfem/fine_mesh.hpp"
#include "msfem/geometry.hpp"

namespace msfem {

/// Problem data for the global fine-scale P1 Galerkin reference solve.
/// b_max is the supremum of |b| over the domain (Euclidean); it drives the
/// mesh Peclet guard and must be supplied by the caller (who knows the
/// advection mode in closed form).
struct ReferenceProblem {
    DomainSpec spec;
    double alpha = 1.0;
    AdvectionField b;
    double b_max = 0.0;
    std::function<double(Vec2)> f;
};

struct ReferenceSolution {
    GlobalFineMesh mesh;
    std::vector<double> u;
};

/// Thrown when the requested resolution violates the mesh Peclet bound
/// |b| h / (2 alpha) <= 1; carries the smallest admissible N_fine.
struct UnderResolvedError : std::runtime_error {
    int required_n_fine;
    explicit UnderResolvedError(int required)
        : std::runtime_error("reference mesh under-resolved; need N_fine >= " +
                             std::to_string(required)),
          required_n_fine(required) {}
};

/// Smallest N_fine satisfying the Peclet guard (cell diameter h = sqrt(2)/N).
int peclet_n_fine(double b_max, double alpha);

/// Default resolution: Peclet guard and h <= epsilon/20, whichever is
/// stricter (paper scale); desk scale relaxes to epsilon/10.
int default_n_fine(const ReferenceProblem& problem, bool paper_scale);

ReferenceSolution solve_reference(const ReferenceProblem& problem, int n_fine);

}  // namespace msfem
