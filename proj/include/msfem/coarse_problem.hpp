#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "msfem/basis.hpp"
#include "msfem/coarse_mesh.hpp"
#include "msfem/fem.hpp"
#include "msfem/fine_mesh.hpp"
#include "msfem/geometry.hpp"

namespace msfem {

enum class GlobalForm : std::uint8_t { CH, AH };

/// A named method variant. Naming convention:
///   MsFEM           diffusion-built edge functions, no bubbles
///   MsFEM+B         + diffusion bubbles
///   MsFEM+advB      + advection-diffusion bubbles
///   AdvMsFEM(+B/+advB)  edge functions built with the full operator
///   Stab-X          X with the tau-weighted stabilization terms
struct MethodSpec {
    std::string name;
    BasisConfig basis;
    GlobalForm global_form = GlobalForm::CH;
    bool stabilized = false;

    /// Parses a method name; the global form is c_H for Dirichlet
    /// perforations and a_H for Neumann. Throws on unknown names.
    static MethodSpec from_name(const std::string& name, PerforationBC bc);
};

/// tau(x) = H/(2|b|) [coth(|b|H/(2a)) - 2a/(|b|H)], with the analytic limit
/// H^2/(12 a) at b = 0. Stable for Peclet arguments across [1e-12, 1e12].
double tau_k(Vec2 x, double H, double alpha, const AdvectionField& b);

/// Per-element bases plus the fine meshes they live on.
struct BasisSet {
    std::vector<FineElementMesh> meshes;   // one per coarse element
    std::vector<LocalBasis> bases;
    int m = 0;                             // fine refinement level
};

struct CoarseSolution {
    MethodSpec method;
    Eigen::VectorXd coefficients;

    // DOF layout: edge (or vertex) dofs first, bubble dofs after.
    std::vector<int> edge_dof;    // per coarse edge, -1 if none
    std::vector<int> vertex_dof;  // per coarse vertex, -1 if none (nodal families)
    std::vector<int> bubble_dof;  // per element, -1 if none
    int n_dofs = 0;

    /// Expands the coarse solution on one element's fine mesh.
    std::vector<double> expand_element(const CoarseMesh& coarse, const BasisSet& bases,
                                       int tri) const;
};

struct CoarseProblem {
    DomainSpec spec;
    double alpha = 1.0;
    AdvectionField b;
    std::function<double(Vec2)> f;
};

/// Builds all element bases for one method (serial; the harness layers the
/// cache and worker pool on top through compute_element_basis directly).
BasisSet compute_all_bases(const CoarseMesh& coarse, const DomainSpec& spec, double alpha,
                           const AdvectionField& b, const BasisConfig& cfg, int m);

/// Assembled coarse system plus the dof maps it was built under.
struct AssembledCoarse {
    SparseSystem system;
    std::vector<int> edge_dof;
    std::vector<int> vertex_dof;
    std::vector<int> bubble_dof;
    int n_dofs = 0;
};

AssembledCoarse assemble_coarse(const CoarseMesh& coarse, const CoarseProblem& problem,
                                const BasisSet& bases, const MethodSpec& method);

CoarseSolution solve_msfem(const CoarseMesh& coarse, const CoarseProblem& problem,
                           const BasisSet& bases, const MethodSpec& method);

}  // namespace msfem
