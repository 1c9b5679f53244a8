#include "msfem/basis.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace msfem {

namespace {

// Element form of the local problems: the skew (c_K) or plain (a_K) variant
// of the advection term, per flux_form; diffusion-only operators ignore b.
void element_form_triplets(const FineElementMesh& fine, double alpha, const AdvectionField& b,
                           Operator op, FluxForm flux, std::vector<Triplet>& out) {
    assemble_form_triplets(fine.nodes, fine.cells, alpha, AdvectionField::zero(),
                           Form::Diffusion, out);
    if (op == Operator::AdvDiff && !b.is_zero()) {
        if (flux == FluxForm::CFlux) {
            assemble_form_triplets(fine.nodes, fine.cells, alpha, b, Form::SkewAdvection, out);
            assemble_form_triplets(fine.nodes, fine.cells, alpha, b, Form::DivergenceTerm, out);
        } else {
            assemble_form_triplets(fine.nodes, fine.cells, alpha, b, Form::Advection, out);
        }
    }
}

std::vector<std::pair<int, double>> fixed_dofs(const CoarseMesh& coarse, int tri,
                                               const FineElementMesh& fine,
                                               const DomainSpec& spec,
                                               bool fix_exterior_trace = true) {
    std::vector<std::pair<int, double>> fixed;
    std::vector<char> seen(fine.nodes.size(), 0);
    auto fix = [&](int node) {
        if (!seen[node]) {
            seen[node] = 1;
            fixed.emplace_back(node, 0.0);
        }
    };
    // Zero trace on exterior (dOmega) edges. The CR family instead imposes a
    // zero-average constraint there (classical nonconforming treatment), so
    // it opts out of the pointwise version.
    if (fix_exterior_trace) {
        for (int k = 0; k < 3; ++k) {
            const int eid = coarse.tri_edges[tri][k];
            if (!coarse.edges[eid].interior)
                for (int nid : fine.edge_nodes[k]) fix(nid);
        }
    }
    if (spec.perforation_bc == PerforationBC::Dirichlet) {
        for (int i = 0; i < fine.node_count(); ++i)
            if (fine.solid_closure[i]) fix(i);
    } else {
        for (int i = 0; i < fine.node_count(); ++i)
            if (!fine.touches_fluid[i]) fix(i);
    }
    return fixed;
}

struct LocalSaddle {
    std::unique_ptr<Eigen::SparseLU<SpMat>> lu;  // SparseLU itself is not movable
    SpMat matrix;
    int n_nodes = 0;
    std::vector<int> active_edges;                  // local edge ids carrying a multiplier
    std::array<EdgeFunctional, 3> functionals;
    std::vector<char> fixed_mask;
    bool ok = false;
};

// Assembles and factorizes the bordered system
//   [ C  -B^T ] [u]   [g]
//   [ B    0  ] [l] = [d]
// where B stacks the edge-average functionals of the active inner edges.
LocalSaddle build_saddle(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                         const DomainSpec& spec, double alpha, const AdvectionField& b,
                         Operator op, FluxForm flux) {
    LocalSaddle s;
    s.n_nodes = fine.node_count();
    const auto fixed = fixed_dofs(coarse, tri, fine, spec, /*fix_exterior_trace=*/false);
    s.fixed_mask.assign(s.n_nodes, 0);
    for (const auto& [dof, v] : fixed) s.fixed_mask[dof] = 1;

    // Every coarse edge carries an average constraint: delta targets on the
    // interior ones, zero on the exterior ones (weak outer Dirichlet BC).
    for (int k = 0; k < 3; ++k) {
        EdgeFunctional fn = edge_average_functional(fine, k, spec.perforation_bc, spec);
        // A constraint acting only on fixed dofs is degenerate (E inside the
        // perforations); it gets no multiplier.
        bool any_free = false;
        for (int nid : fn.nodes)
            if (!s.fixed_mask[nid]) any_free = true;
        if (fn.zero() || !any_free) continue;
        s.functionals[k] = std::move(fn);
        s.active_edges.push_back(k);
    }
    if (s.active_edges.empty()) return s;  // fully degenerate element

    const int m = static_cast<int>(s.active_edges.size());
    const int dim = s.n_nodes + m;
    std::vector<Triplet> trips;
    element_form_triplets(fine, alpha, b, op, flux, trips);
    for (int a = 0; a < m; ++a) {
        const EdgeFunctional& fn = s.functionals[s.active_edges[a]];
        for (size_t i = 0; i < fn.nodes.size(); ++i) {
            trips.emplace_back(fn.nodes[i], s.n_nodes + a, -fn.weights[i]);
            trips.emplace_back(s.n_nodes + a, fn.nodes[i], fn.weights[i]);
        }
    }
    const SparseSystem sys =
        finalize_system(dim, trips, Eigen::VectorXd::Zero(dim), fixed);
    s.matrix = sys.matrix;
    s.lu = std::make_unique<Eigen::SparseLU<SpMat>>();
    s.lu->compute(s.matrix);
    if (s.lu->info() != Eigen::Success)
        throw std::runtime_error("basis_factory: singular local saddle system, element " +
                                 std::to_string(tri));
    s.ok = true;
    return s;
}

// Solves for one right-hand side; returns nodal field + multipliers and
// updates the recorded residual.
std::vector<double> saddle_solve(const LocalSaddle& s, const Eigen::VectorXd& rhs,
                                 std::array<double, 3>& multipliers, double& residual) {
    const Eigen::VectorXd x = s.lu->solve(rhs);
    const double r = (s.matrix * x - rhs).norm() / (rhs.norm() + 1e-300);
    residual = std::max(residual, r);
    std::vector<double> field(s.n_nodes);
    for (int i = 0; i < s.n_nodes; ++i) field[i] = s.fixed_mask[i] ? 0.0 : x[i];
    multipliers = {0.0, 0.0, 0.0};
    for (size_t a = 0; a < s.active_edges.size(); ++a)
        multipliers[s.active_edges[a]] = x[s.n_nodes + a];
    return field;
}

Eigen::VectorXd zero_rhs(const LocalSaddle& s) {
    return Eigen::VectorXd::Zero(s.n_nodes + static_cast<int>(s.active_edges.size()));
}

Operator bubble_operator(const BasisConfig& cfg) {
    return cfg.bubbles == BubbleKind::AdvDiffBubble ? Operator::AdvDiff : Operator::Diffusion;
}

// Neumann-mode fields are solved on the fluid part only; the solid nodes
// would otherwise hold zeros, and point evaluation near the staircase (error
// transfer onto a differently-staircased reference mesh) would see O(1)
// jumps across one fine cell. Replace the solid values with the discrete
// harmonic continuation of the interface values. Nothing assembled changes:
// all bilinear forms and edge functionals integrate over fluid cells only.
void extend_fields_into_solid(const FineElementMesh& fine, LocalBasis& basis) {
    std::vector<FineCell> solid;
    for (const FineCell& c : fine.cells)
        if (!c.fluid) {
            solid.push_back(c);
            solid.back().fluid = true;  // assemble over exactly these cells
        }
    if (solid.empty()) return;

    // Keep every fluid-touching node and the whole element boundary: edge
    // nodes can sit in indicator-fluid edge segments of barycenter-solid
    // cells, where the edge-average functionals still reference them.
    std::vector<char> keep(fine.node_count(), 0);
    for (int i = 0; i < fine.node_count(); ++i) keep[i] = fine.touches_fluid[i];
    for (int k = 0; k < 3; ++k)
        for (int nid : fine.edge_nodes[k]) keep[nid] = 1;
    std::vector<std::pair<int, double>> fixed;
    bool any_fluid = false;
    for (int i = 0; i < fine.node_count(); ++i) {
        if (keep[i]) fixed.emplace_back(i, 0.0);
        any_fluid = any_fluid || fine.touches_fluid[i];
    }
    if (!any_fluid) return;  // fully solid element, nothing to anchor to

    std::vector<Triplet> trips;
    assemble_form_triplets(fine.nodes, solid, 1.0, AdvectionField::zero(), Form::Diffusion,
                           trips);
    auto extend = [&](std::vector<double>& field) {
        if (field.empty()) return;
        for (auto& [dof, v] : fixed) v = field[dof];
        const SparseSystem sys = finalize_system(
            fine.node_count(), trips, Eigen::VectorXd::Zero(fine.node_count()), fixed);
        const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::Spd);
        for (int i = 0; i < fine.node_count(); ++i)
            if (!keep[i]) field[i] = x[i];
    };
    for (int k = 0; k < 3; ++k) {
        if (basis.edge_active[k]) extend(basis.edge_fields[k]);
        extend(basis.vertex_fields[k]);
    }
    if (basis.has_bubble) extend(basis.bubble_field);
}

}  // namespace

LocalBasis compute_cr_basis(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                            const DomainSpec& spec, double alpha, const AdvectionField& b,
                            const BasisConfig& cfg) {
    LocalBasis basis;
    basis.element = tri;
    basis.h = fine.h;
    if (fine.fully_solid && spec.perforation_bc == PerforationBC::Dirichlet) {
        basis.fully_perforated = true;
        for (int k = 0; k < 3; ++k) basis.edge_fields[k].assign(fine.node_count(), 0.0);
        return basis;
    }
    LocalSaddle s = build_saddle(coarse, tri, fine, spec, alpha, b, cfg.op, cfg.flux_form);
    for (int k = 0; k < 3; ++k) basis.edge_fields[k].assign(fine.node_count(), 0.0);
    if (!s.ok) {
        basis.fully_perforated = true;
        return basis;
    }
    for (size_t a = 0; a < s.active_edges.size(); ++a) {
        const int k = s.active_edges[a];
        if (!coarse.edges[coarse.tri_edges[tri][k]].interior) continue;  // no exterior dofs
        Eigen::VectorXd rhs = zero_rhs(s);
        // unit average on E (the delta constraint scaled by |E|), zero on the rest
        rhs[s.n_nodes + static_cast<int>(a)] = s.functionals[k].measure;
        basis.edge_fields[k] =
            saddle_solve(s, rhs, basis.edge_multipliers[k], basis.solver_residual);
        basis.edge_active[k] = 1;
    }
    return basis;
}

void compute_bubble(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                    const DomainSpec& spec, double alpha, const AdvectionField& b,
                    const BasisConfig& cfg, LocalBasis& basis) {
    if (cfg.bubbles == BubbleKind::None) return;
    if (basis.fully_perforated) {
        basis.bubble_field.assign(fine.node_count(), 0.0);
        basis.has_bubble = true;
        return;
    }
    const Operator op = bubble_operator(cfg);
    if (cfg.bc_family != BcFamily::CrouzeixRaviart) {
        // Companion bubble with homogeneous Dirichlet data on dK.
        std::vector<Triplet> trips;
        element_form_triplets(fine, alpha, b, op, cfg.flux_form, trips);
        auto fixed = fixed_dofs(coarse, tri, fine, spec);
        std::vector<char> seen(fine.node_count(), 0);
        for (auto& [d, v] : fixed) seen[d] = 1;
        for (int k = 0; k < 3; ++k)
            for (int nid : fine.edge_nodes[k])
                if (!seen[nid]) {
                    seen[nid] = 1;
                    fixed.emplace_back(nid, 0.0);
                }
        const auto load = assemble_load(fine.nodes, fine.cells, fine.node_count(),
                                        [](Vec2) { return 1.0; });
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(load.data(), load.size());
        const SparseSystem sys = finalize_system(fine.node_count(), trips, rhs, fixed);
        const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::General);
        basis.bubble_field.assign(x.data(), x.data() + x.size());
        basis.has_bubble = true;
        return;
    }
    LocalSaddle s = build_saddle(coarse, tri, fine, spec, alpha, b, op, cfg.flux_form);
    if (!s.ok) {
        basis.bubble_field.assign(fine.node_count(), 0.0);
        basis.has_bubble = true;
        return;
    }
    const auto load =
        assemble_load(fine.nodes, fine.cells, fine.node_count(), [](Vec2) { return 1.0; });
    Eigen::VectorXd rhs = zero_rhs(s);
    for (int i = 0; i < s.n_nodes; ++i) rhs[i] = s.fixed_mask[i] ? 0.0 : load[i];
    basis.bubble_field = saddle_solve(s, rhs, basis.bubble_multipliers, basis.solver_residual);
    basis.has_bubble = true;
}

LocalBasis compute_linear_basis(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                                const DomainSpec& spec, double alpha, const AdvectionField& b,
                                const BasisConfig& cfg) {
    LocalBasis basis;
    basis.element = tri;
    basis.h = fine.h;
    if (fine.fully_solid && spec.perforation_bc == PerforationBC::Dirichlet) {
        basis.fully_perforated = true;
        for (int v = 0; v < 3; ++v) basis.vertex_fields[v].assign(fine.node_count(), 0.0);
        return basis;
    }
    std::vector<Triplet> trips;
    element_form_triplets(fine, alpha, b, cfg.op, cfg.flux_form, trips);
    const auto base_fixed = fixed_dofs(coarse, tri, fine, spec);
    std::vector<char> perf_fixed(fine.node_count(), 0);
    for (const auto& [d, v] : base_fixed) perf_fixed[d] = 1;

    // Barycentric hat value of local vertex `vtx` at a fine node.
    const Vec2 a = fine.corners[0], bb = fine.corners[1], c = fine.corners[2];
    const double det = (bb.x - a.x) * (c.y - a.y) - (c.x - a.x) * (bb.y - a.y);
    auto hat = [&](int vtx, Vec2 p) {
        const double xi = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
        const double eta = ((bb.x - a.x) * (p.y - a.y) - (p.x - a.x) * (bb.y - a.y)) / det;
        const double l[3] = {1.0 - xi - eta, xi, eta};
        return l[vtx];
    };

    for (int vtx = 0; vtx < 3; ++vtx) {
        std::vector<std::pair<int, double>> fixed = base_fixed;
        std::vector<char> seen = perf_fixed;
        for (int k = 0; k < 3; ++k) {
            for (int nid : fine.edge_nodes[k]) {
                if (seen[nid]) continue;  // perforation constraint wins (trace forced to 0)
                seen[nid] = 1;
                fixed.emplace_back(nid, hat(vtx, fine.nodes[nid]));
            }
        }
        const SparseSystem sys =
            finalize_system(fine.node_count(), trips, Eigen::VectorXd::Zero(fine.node_count()),
                            fixed);
        const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::General);
        basis.vertex_fields[vtx].assign(x.data(), x.data() + x.size());
    }
    compute_bubble(coarse, tri, fine, spec, alpha, b, cfg, basis);
    return basis;
}

LocalBasis compute_oversampling_basis(const CoarseMesh& coarse, int tri,
                                      const FineElementMesh& fine, const DomainSpec& spec,
                                      double alpha, const AdvectionField& b,
                                      const BasisConfig& cfg) {
    const int ratio = cfg.oversampling_ratio;
    if (ratio <= 1) return compute_linear_basis(coarse, tri, fine, spec, alpha, b, cfg);

    LocalBasis basis;
    basis.element = tri;
    basis.h = fine.h;

    const Vec2 g{(fine.corners[0].x + fine.corners[1].x + fine.corners[2].x) / 3.0,
                 (fine.corners[0].y + fine.corners[1].y + fine.corners[2].y) / 3.0};
    std::array<Vec2, 3> patch;
    for (int i = 0; i < 3; ++i)
        patch[i] = {g.x + ratio * (fine.corners[i].x - g.x),
                    g.y + ratio * (fine.corners[i].y - g.y)};
    const int np = ratio * fine.n;
    FineElementMesh pm = build_fine_mesh_on(
        patch, np, [&spec](Vec2 p) { return fluid_indicator(p, spec); });

    std::vector<Triplet> trips;
    element_form_triplets(pm, alpha, b, cfg.op, cfg.flux_form, trips);

    const Vec2 a = patch[0], bb = patch[1], c = patch[2];
    const double det = (bb.x - a.x) * (c.y - a.y) - (c.x - a.x) * (bb.y - a.y);
    auto patch_hat = [&](int vtx, Vec2 p) {
        const double xi = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
        const double eta = ((bb.x - a.x) * (p.y - a.y) - (p.x - a.x) * (bb.y - a.y)) / det;
        const double l[3] = {1.0 - xi - eta, xi, eta};
        return l[vtx];
    };
    auto outside_domain = [](Vec2 p) {
        constexpr double tol = 1e-12;
        return p.x < -tol || p.x > 1.0 + tol || p.y < -tol || p.y > 1.0 + tol;
    };

    // Per patch vertex: operator-harmonic extension of the patch hat data,
    // clipped to Omega (outside nodes pinned to the affine data).
    std::array<std::vector<double>, 3> patch_fields;
    for (int pv = 0; pv < 3; ++pv) {
        std::vector<std::pair<int, double>> fixed;
        std::vector<char> seen(pm.node_count(), 0);
        auto fix = [&](int nid, double v) {
            if (!seen[nid]) {
                seen[nid] = 1;
                fixed.emplace_back(nid, v);
            }
        };
        if (spec.perforation_bc == PerforationBC::Dirichlet) {
            for (int i = 0; i < pm.node_count(); ++i)
                if (pm.solid_closure[i]) fix(i, 0.0);
        } else {
            for (int i = 0; i < pm.node_count(); ++i)
                if (!pm.touches_fluid[i]) fix(i, 0.0);
        }
        for (int k = 0; k < 3; ++k)
            for (int nid : pm.edge_nodes[k]) fix(nid, patch_hat(pv, pm.nodes[nid]));
        for (int i = 0; i < pm.node_count(); ++i)
            if (outside_domain(pm.nodes[i])) fix(i, patch_hat(pv, pm.nodes[i]));
        const SparseSystem sys = finalize_system(
            pm.node_count(), trips, Eigen::VectorXd::Zero(pm.node_count()), fixed);
        const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::General);
        patch_fields[pv].assign(x.data(), x.data() + x.size());
    }

    // Recombine so the restrictions interpolate Kronecker deltas at the
    // vertices of K.
    Eigen::Matrix3d vertex_values;
    for (int i = 0; i < 3; ++i)
        for (int pv = 0; pv < 3; ++pv)
            vertex_values(i, pv) = pm.eval_physical(patch_fields[pv], fine.corners[i]);
    Eigen::FullPivLU<Eigen::Matrix3d> lu(vertex_values);
    if (!lu.isInvertible() || lu.rcond() < 1e-12) {
        LocalBasis fallback = compute_linear_basis(coarse, tri, fine, spec, alpha, b, cfg);
        fallback.os_fallback = true;
        return fallback;
    }
    const Eigen::Matrix3d coeff = lu.inverse();  // row i: weights for basis_i

    for (int i = 0; i < 3; ++i) {
        basis.vertex_fields[i].resize(fine.node_count());
        for (int nid = 0; nid < fine.node_count(); ++nid) {
            double v = 0.0;
            for (int pv = 0; pv < 3; ++pv)
                v += coeff(i, pv) * pm.eval_physical(patch_fields[pv], fine.nodes[nid]);
            basis.vertex_fields[i][nid] = v;
        }
        // honor the element's own perforation constraints on the restriction
        if (spec.perforation_bc == PerforationBC::Dirichlet)
            for (int nid = 0; nid < fine.node_count(); ++nid)
                if (fine.solid_closure[nid]) basis.vertex_fields[i][nid] = 0.0;
    }
    compute_bubble(coarse, tri, fine, spec, alpha, b, cfg, basis);
    return basis;
}

LocalBasis compute_element_basis(const CoarseMesh& coarse, int tri, const FineElementMesh& fine,
                                 const DomainSpec& spec, double alpha, const AdvectionField& b,
                                 const BasisConfig& cfg) {
    if (alpha <= 0.0) throw std::invalid_argument("compute_element_basis: alpha <= 0");
    LocalBasis basis;
    switch (cfg.bc_family) {
        case BcFamily::Linear:
            basis = compute_linear_basis(coarse, tri, fine, spec, alpha, b, cfg);
            break;
        case BcFamily::Oversampling:
            basis = compute_oversampling_basis(coarse, tri, fine, spec, alpha, b, cfg);
            break;
        case BcFamily::CrouzeixRaviart:
        default:
            basis = compute_cr_basis(coarse, tri, fine, spec, alpha, b, cfg);
            compute_bubble(coarse, tri, fine, spec, alpha, b, cfg, basis);
            break;
    }
    if (spec.perforation_bc == PerforationBC::Neumann) extend_fields_into_solid(fine, basis);
    return basis;
}

}  // namespace msfem
