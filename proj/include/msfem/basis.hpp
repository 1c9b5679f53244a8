#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "msfem/coarse_mesh.hpp"
#include "msfem/fem.hpp"
#include "msfem/fine_mesh.hpp"

namespace msfem {

enum class Operator : std::uint8_t { Diffusion, AdvDiff };
enum class BcFamily : std::uint8_t { CrouzeixRaviart, Linear, Oversampling };
enum class FluxForm : std::uint8_t { CFlux, AFlux };
enum class BubbleKind : std::uint8_t { None, DiffusionBubble, AdvDiffBubble };

struct BasisConfig {
    Operator op = Operator::Diffusion;
    BcFamily bc_family = BcFamily::CrouzeixRaviart;
    int oversampling_ratio = 1;  // Oversampling family only
    FluxForm flux_form = FluxForm::CFlux;
    BubbleKind bubbles = BubbleKind::None;
};

/// Multiscale basis fields of one coarse element, as nodal values on its
/// fine mesh. Edge fields (CR family) are indexed by local edge; nodal
/// families (linear / oversampling) fill vertex_fields instead.
struct LocalBasis {
    int element = -1;
    double h = 0.0;

    std::array<std::vector<double>, 3> edge_fields;
    std::array<char, 3> edge_active{};  // inner, non-degenerate
    std::array<std::vector<double>, 3> vertex_fields;

    std::vector<double> bubble_field;
    bool has_bubble = false;

    // lambda^{K,E'} per target edge, mu^{K,E'} for the bubble (CR family).
    std::array<std::array<double, 3>, 3> edge_multipliers{};
    std::array<double, 3> bubble_multipliers{};

    bool fully_perforated = false;
    bool os_fallback = false;      // oversampling recombination was singular
    double solver_residual = 0.0;  // max relative residual over local solves
};

/// Crouzeix-Raviart edge functions of one element: per inner edge E, the
/// local operator is solved with edge-average constraints int_{E'} Phi =
/// delta_{E,E'} enforced through one scalar Lagrange multiplier per edge
/// (the multiplier is the constant flux lambda^{K,E'}).
LocalBasis compute_cr_basis(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                            const DomainSpec& spec, double alpha, const AdvectionField& b,
                            const BasisConfig& cfg);

/// Bubble function: unit source, zero edge averages. Appends to `basis`.
void compute_bubble(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                    const DomainSpec& spec, double alpha, const AdvectionField& b,
                    const BasisConfig& cfg, LocalBasis& basis);

/// Nodal basis with affine (hat-function) boundary data on all of dK.
LocalBasis compute_linear_basis(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                                const DomainSpec& spec, double alpha, const AdvectionField& b,
                                const BasisConfig& cfg);

/// Oversampling: operator-harmonic functions on the enlarged patch with
/// affine data, restricted to K and recombined to interpolate Kronecker
/// deltas at the vertices of K.
LocalBasis compute_oversampling_basis(const CoarseMesh& coarse, int tri,
                                      const FineElementMesh& fine, const DomainSpec& spec,
                                      double alpha, const AdvectionField& b,
                                      const BasisConfig& cfg);

/// Computes the full per-element basis requested by cfg (edge or nodal
/// family plus optional bubble, possibly with a different operator).
LocalBasis compute_element_basis(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                                 const DomainSpec& spec, double alpha, const AdvectionField& b,
                                 const BasisConfig& cfg);

}  // namespace msfem
