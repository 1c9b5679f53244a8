#pragma once

#include <vector>

#include "msfem/coarse_mesh.hpp"
#include "msfem/coarse_problem.hpp"
#include "msfem/fine_mesh.hpp"
#include "msfem/geometry.hpp"

namespace msfem {

/// Region of the unit square used to restrict error norms. The boundary
/// layer is the union of the upper and right bands of width delta:
/// (0,1) x (1-delta,1) together with (1-delta,1) x (0,1).
struct Region {
    enum class Kind { Whole, InsideLayer, OutsideLayer };
    Kind kind = Kind::Whole;
    double delta = 0.0;

    bool contains(Vec2 p) const {
        if (kind == Kind::Whole) return true;
        const bool in_layer = p.y > 1.0 - delta || p.x > 1.0 - delta;
        return kind == Kind::InsideLayer ? in_layer : !in_layer;
    }

    static Region whole() { return {}; }
};

/// Layer geometry from the Peclet number Pe = |b|_sup / (2 alpha), with
/// delta = log(Pe)/Pe. Pe <= 1 gives no layer; the regions degenerate to
/// the whole domain and `degenerate` is set.
struct LayerInfo {
    double pe = 0.0;
    double delta = 0.0;
    bool degenerate = false;

    Region inside() const {
        return degenerate ? Region::whole() : Region{Region::Kind::InsideLayer, delta};
    }
    Region outside() const {
        return degenerate ? Region::whole() : Region{Region::Kind::OutsideLayer, delta};
    }
};

LayerInfo layer_region(double b_sup, double alpha);

/// Broken H1 seminorm of a nodal field on the global fine mesh, restricted
/// to fluid cells whose barycenter lies in the region.
double broken_h1_global(const GlobalFineMesh& gm, const std::vector<double>& u,
                        const Region& region);

/// Broken H1 seminorm of per-element fine fields (the expansion of a coarse
/// solution), same restriction rule.
double broken_h1_elements(const BasisSet& bases, const std::vector<std::vector<double>>& fields,
                          const Region& region);

/// Nodal transfer of the expanded multiscale solution onto the reference
/// mesh (point evaluation at reference nodes; a point inside a solid
/// staircase cell inherits the basis value there, 0 in Dirichlet mode).
std::vector<double> transfer_to_reference(const CoarseMesh& coarse, const BasisSet& bases,
                                          const CoarseSolution& sol, const GlobalFineMesh& gm);

struct RelativeError {
    double value = 0.0;
    bool undefined = false;  // |u_ref| = 0 on the region
};

/// |u_h - u_ref|_{H1,broken} / |u_ref|_{H1} over the region, both fields
/// nodal on the reference mesh.
RelativeError relative_error(const GlobalFineMesh& gm, const std::vector<double>& u_h,
                             const std::vector<double>& u_ref, const Region& region);

}  // namespace msfem
