#pragma once

#include <array>
#include <functional>
#include <vector>

#include "msfem/coarse_mesh.hpp"
#include "msfem/geometry.hpp"

namespace msfem {

struct FineCell {
    std::array<int, 3> v;
    bool fluid;
    double area;
};

/// Structured P1 subdivision of a coarse triangle into n^2 similar triangles
/// (n = 2^m), with fluid/solid classification by cell barycenter.
struct FineElementMesh {
    int parent = -1;                 // coarse triangle id
    std::array<Vec2, 3> corners{};   // A, B, C (ccw)
    int n = 0;                       // subdivisions per edge
    double h = 0.0;                  // fine cell diameter
    std::vector<Vec2> nodes;
    std::vector<FineCell> cells;
    // Ordered fine-node ids along local edge k (from local vertex k to k+1).
    std::array<std::vector<int>, 3> edge_nodes;
    std::vector<char> solid_closure;  // node is a vertex of some solid cell
    std::vector<char> touches_fluid;  // node is a vertex of some fluid cell
    bool fully_solid = false;
    double fluid_area = 0.0;

    int node_count() const { return static_cast<int>(nodes.size()); }

    // Lattice addressing: node (i,j) with i+j <= n, row-major in j.
    int node_id(int i, int j) const { return j * (n + 1) - j * (j - 1) / 2 + i; }

    /// P1 evaluation of a nodal field at a point given in barycentric-free
    /// reference coordinates (xi,eta) with xi,eta >= 0, xi+eta <= 1.
    double eval_reference(const std::vector<double>& u, double xi, double eta) const;
    /// P1 evaluation at a physical point assumed to lie in this element.
    double eval_physical(const std::vector<double>& u, Vec2 p) const;
};

/// Smallest m with H/2^m <= min(eps/20, H/8).
int default_refinement_level(double H, double eps);

FineElementMesh build_fine_mesh(const CoarseMesh& coarse, int tri, const DomainSpec& spec,
                                int m);

/// Same subdivision on an arbitrary triangle with a caller-supplied fluid
/// classifier (used by the oversampling patches).
FineElementMesh build_fine_mesh_on(const std::array<Vec2, 3>& corners, int n,
                                   const std::function<bool(Vec2)>& is_fluid);

/// Uniform global fine mesh of (0,1)^2 in the same square/diagonal pattern as
/// the coarse mesh, with fluid/solid classification. Used by the reference
/// solver and the error metrics.
struct GlobalFineMesh {
    int N = 0;
    std::vector<Vec2> nodes;
    std::vector<FineCell> cells;
    std::vector<char> on_outer_boundary;
    std::vector<char> solid_closure;
    std::vector<char> touches_fluid;
    double fluid_area = 0.0;

    double h() const { return 1.0 / N; }
    int node_id(int i, int j) const { return j * (N + 1) + i; }
    int node_count() const { return static_cast<int>(nodes.size()); }
};

GlobalFineMesh build_global_fine_mesh(int N, const DomainSpec& spec);

/// P1 evaluation of a nodal field at p (clamped to the unit square).
double eval_global(const GlobalFineMesh& gm, const std::vector<double>& u, Vec2 p);
/// Piecewise-constant gradient of the field at p.
Vec2 eval_global_gradient(const GlobalFineMesh& gm, const std::vector<double>& u, Vec2 p);

}  // namespace msfem
