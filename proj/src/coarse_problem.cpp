#include "msfem/coarse_problem.hpp"

#include <cmath>
#include <stdexcept>

namespace msfem {

namespace {

bool all_zero(const std::vector<double>& v) {
    for (double d : v)
        if (d != 0.0) return false;
    return true;
}

BasisConfig config_for(const std::string& base) {
    BasisConfig cfg;
    std::string stem = base;
    if (auto pos = stem.find('+'); pos != std::string::npos) {
        const std::string suffix = stem.substr(pos + 1);
        stem = stem.substr(0, pos);
        if (suffix == "B")
            cfg.bubbles = BubbleKind::DiffusionBubble;
        else if (suffix == "advB")
            cfg.bubbles = BubbleKind::AdvDiffBubble;
        else
            throw std::invalid_argument("unknown method suffix: " + suffix);
    }
    if (stem == "MsFEM")
        cfg.op = Operator::Diffusion;
    else if (stem == "AdvMsFEM")
        cfg.op = Operator::AdvDiff;
    else
        throw std::invalid_argument("unknown method name: " + stem);
    return cfg;
}

}  // namespace

MethodSpec MethodSpec::from_name(const std::string& name, PerforationBC bc) {
    MethodSpec spec;
    spec.name = name;
    std::string base = name;
    if (base.rfind("Stab-", 0) == 0) {
        spec.stabilized = true;
        base = base.substr(5);
    } else if (base.rfind("Stab(", 0) == 0 && base.back() == ')') {
        spec.stabilized = true;
        base = base.substr(5, base.size() - 6);
    }
    spec.basis = config_for(base);
    spec.global_form = bc == PerforationBC::Dirichlet ? GlobalForm::CH : GlobalForm::AH;
    // The skew form needs the flux matching it; a_H pairs with a_flux.
    spec.basis.flux_form = spec.global_form == GlobalForm::CH ? FluxForm::CFlux : FluxForm::AFlux;
    return spec;
}

double tau_k(Vec2 x, double H, double alpha, const AdvectionField& b) {
    if (alpha <= 0.0 || H <= 0.0) throw std::invalid_argument("tau_k: need alpha > 0, H > 0");
    const Vec2 bv = b.at(x);
    const double bn = std::hypot(bv.x, bv.y);
    const double pe = bn * H / (2.0 * alpha);
    if (pe < 1e-4) {
        // coth(x) - 1/x = x/3 - x^3/45 + 2x^5/945 + O(x^7)
        const double series = pe / 3.0 - pe * pe * pe / 45.0;
        if (bn == 0.0) return H * H / (12.0 * alpha);
        return H / (2.0 * bn) * series;
    }
    double coth;
    if (pe > 350.0)
        coth = 1.0;  // tanh saturates; avoids overflow in cosh/sinh
    else
        coth = 1.0 / std::tanh(pe);
    return H / (2.0 * bn) * (coth - 1.0 / pe);
}

BasisSet compute_all_bases(const CoarseMesh& coarse, const DomainSpec& spec, double alpha,
                           const AdvectionField& b, const BasisConfig& cfg, int m) {
    BasisSet set;
    set.m = m;
    const int nt = static_cast<int>(coarse.triangles.size());
    set.meshes.reserve(nt);
    set.bases.reserve(nt);
    for (int tri = 0; tri < nt; ++tri) {
        set.meshes.push_back(build_fine_mesh(coarse, tri, spec, m));
        set.bases.push_back(
            compute_element_basis(coarse, tri, set.meshes.back(), spec, alpha, b, cfg));
    }
    return set;
}

namespace {

struct DofMaps {
    std::vector<int> edge_dof;
    std::vector<int> vertex_dof;
    std::vector<int> bubble_dof;
    int n = 0;
};

DofMaps build_dof_maps(const CoarseMesh& coarse, const BasisSet& bases, const MethodSpec& method) {
    DofMaps maps;
    maps.edge_dof.assign(coarse.edges.size(), -1);
    maps.vertex_dof.assign(coarse.vertices.size(), -1);
    maps.bubble_dof.assign(coarse.triangles.size(), -1);
    const bool nodal = method.basis.bc_family != BcFamily::CrouzeixRaviart;
    if (!nodal) {
        for (size_t e = 0; e < coarse.edges.size(); ++e) {
            const CoarseMesh::Edge& edge = coarse.edges[e];
            if (!edge.interior) continue;
            bool active = false;
            for (int t : edge.tris) {
                if (t < 0) continue;
                for (int k = 0; k < 3; ++k)
                    if (coarse.tri_edges[t][k] == static_cast<int>(e) &&
                        bases.bases[t].edge_active[k])
                        active = true;
            }
            if (active) maps.edge_dof[e] = maps.n++;
        }
    } else {
        std::vector<char> has_support(coarse.vertices.size(), 0);
        for (size_t t = 0; t < coarse.triangles.size(); ++t)
            for (int v = 0; v < 3; ++v)
                if (!all_zero(bases.bases[t].vertex_fields[v]))
                    has_support[coarse.triangles[t][v]] = 1;
        for (size_t v = 0; v < coarse.vertices.size(); ++v) {
            const Vec2 p = coarse.vertices[v];
            const bool boundary = p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
            if (!boundary && has_support[v]) maps.vertex_dof[v] = maps.n++;
        }
    }
    if (method.basis.bubbles != BubbleKind::None) {
        for (size_t t = 0; t < coarse.triangles.size(); ++t) {
            const LocalBasis& lb = bases.bases[t];
            if (lb.has_bubble && !lb.fully_perforated && !all_zero(lb.bubble_field))
                maps.bubble_dof[t] = maps.n++;
        }
    }
    return maps;
}

struct LocalDof {
    int global;
    const std::vector<double>* field;
    bool is_bubble;
};

std::vector<LocalDof> local_dofs(const CoarseMesh& coarse, const BasisSet& bases,
                                 const DofMaps& maps, const MethodSpec& method, int tri) {
    std::vector<LocalDof> dofs;
    const LocalBasis& lb = bases.bases[tri];
    if (method.basis.bc_family != BcFamily::CrouzeixRaviart) {
        for (int v = 0; v < 3; ++v) {
            const int g = maps.vertex_dof[coarse.triangles[tri][v]];
            if (g >= 0) dofs.push_back({g, &lb.vertex_fields[v], false});
        }
    } else {
        for (int k = 0; k < 3; ++k) {
            const int g = maps.edge_dof[coarse.tri_edges[tri][k]];
            if (g >= 0) dofs.push_back({g, &lb.edge_fields[k], false});
        }
    }
    if (maps.bubble_dof[tri] >= 0) dofs.push_back({maps.bubble_dof[tri], &lb.bubble_field, true});
    return dofs;
}

}  // namespace

AssembledCoarse assemble_coarse(const CoarseMesh& coarse, const CoarseProblem& problem,
                                const BasisSet& bases, const MethodSpec& method) {
    if (bases.bases.size() != coarse.triangles.size())
        throw std::invalid_argument("assemble_coarse: basis/mesh mismatch");
    const DofMaps maps = build_dof_maps(coarse, bases, method);
    const double H = coarse.H();

    std::vector<Triplet> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(maps.n);

    const bool stab_active = method.stabilized && !problem.b.is_zero();
    const bool stab_full = stab_active && method.basis.op == Operator::Diffusion;

    for (size_t tri = 0; tri < coarse.triangles.size(); ++tri) {
        const FineElementMesh& fm = bases.meshes[tri];
        const std::vector<LocalDof> dofs = local_dofs(coarse, bases, maps, method,
                                                      static_cast<int>(tri));
        if (dofs.empty()) continue;

        std::vector<Triplet> fine_trips;
        assemble_form_triplets(fm.nodes, fm.cells, problem.alpha, AdvectionField::zero(),
                               Form::Diffusion, fine_trips);
        if (!problem.b.is_zero()) {
            if (method.global_form == GlobalForm::CH) {
                assemble_form_triplets(fm.nodes, fm.cells, problem.alpha, problem.b,
                                       Form::SkewAdvection, fine_trips);
                assemble_form_triplets(fm.nodes, fm.cells, problem.alpha, problem.b,
                                       Form::DivergenceTerm, fine_trips);
            } else {
                assemble_form_triplets(fm.nodes, fm.cells, problem.alpha, problem.b,
                                       Form::Advection, fine_trips);
            }
        }
        SpMat A(fm.node_count(), fm.node_count());
        A.setFromTriplets(fine_trips.begin(), fine_trips.end());

        const auto load = assemble_load(fm.nodes, fm.cells, fm.node_count(), problem.f);

        std::vector<Eigen::VectorXd> fields(dofs.size());
        for (size_t a = 0; a < dofs.size(); ++a)
            fields[a] = Eigen::Map<const Eigen::VectorXd>(dofs[a].field->data(),
                                                          dofs[a].field->size());
        for (size_t bcol = 0; bcol < dofs.size(); ++bcol) {
            const Eigen::VectorXd y = A * fields[bcol];
            for (size_t arow = 0; arow < dofs.size(); ++arow)
                trips.emplace_back(dofs[arow].global, dofs[bcol].global, fields[arow].dot(y));
        }
        for (size_t a = 0; a < dofs.size(); ++a) {
            double F = 0.0;
            for (size_t i = 0; i < load.size(); ++i) F += load[i] * (*dofs[a].field)[i];
            rhs[dofs[a].global] += F;
        }

        if (stab_active) {
            const int bubble_local = [&] {
                for (size_t a = 0; a < dofs.size(); ++a)
                    if (dofs[a].is_bubble) return static_cast<int>(a);
                return -1;
            }();
            std::vector<double> stab_mat(dofs.size() * dofs.size(), 0.0);
            std::vector<double> stab_bubble(dofs.size(), 0.0);
            std::vector<double> stab_rhs(dofs.size(), 0.0);
            std::vector<double> bg(dofs.size());
            for (const FineCell& cell : fm.cells) {
                if (!cell.fluid) continue;
                const Vec2 p0 = fm.nodes[cell.v[0]], p1 = fm.nodes[cell.v[1]],
                           p2 = fm.nodes[cell.v[2]];
                const Vec2 bary{(p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0};
                const double tau = tau_k(bary, H, problem.alpha, problem.b);
                const Vec2 bv = problem.b.at(bary);
                for (size_t a = 0; a < dofs.size(); ++a) {
                    const Vec2 g = cell_gradient(fm.nodes, cell, *dofs[a].field);
                    bg[a] = bv.x * g.x + bv.y * g.y;
                }
                if (stab_full)
                    for (size_t arow = 0; arow < dofs.size(); ++arow)
                        for (size_t bcol = 0; bcol < dofs.size(); ++bcol)
                            stab_mat[arow * dofs.size() + bcol] +=
                                tau * bg[bcol] * bg[arow] * cell.area;
                if (bubble_local >= 0)
                    for (size_t arow = 0; arow < dofs.size(); ++arow)
                        stab_bubble[arow] += tau * bg[arow] * cell.area;
                const double fv = problem.f(bary);
                for (size_t arow = 0; arow < dofs.size(); ++arow)
                    stab_rhs[arow] += tau * fv * bg[arow] * cell.area;
            }
            for (size_t arow = 0; arow < dofs.size(); ++arow) {
                for (size_t bcol = 0; bcol < dofs.size(); ++bcol) {
                    const double v = stab_mat[arow * dofs.size() + bcol];
                    if (v != 0.0)
                        trips.emplace_back(dofs[arow].global, dofs[bcol].global, v);
                }
                if (bubble_local >= 0 && stab_bubble[arow] != 0.0)
                    trips.emplace_back(dofs[arow].global, dofs[bubble_local].global,
                                       stab_bubble[arow]);
                rhs[dofs[arow].global] += stab_rhs[arow];
            }
        }
    }

    AssembledCoarse out;
    out.system = finalize_system(maps.n, trips, rhs, {});
    out.edge_dof = maps.edge_dof;
    out.vertex_dof = maps.vertex_dof;
    out.bubble_dof = maps.bubble_dof;
    out.n_dofs = maps.n;
    return out;
}

CoarseSolution solve_msfem(const CoarseMesh& coarse, const CoarseProblem& problem,
                           const BasisSet& bases, const MethodSpec& method) {
    AssembledCoarse asm_ = assemble_coarse(coarse, problem, bases, method);
    CoarseSolution sol;
    sol.method = method;
    sol.edge_dof = std::move(asm_.edge_dof);
    sol.vertex_dof = std::move(asm_.vertex_dof);
    sol.bubble_dof = std::move(asm_.bubble_dof);
    sol.n_dofs = asm_.n_dofs;
    try {
        sol.coefficients = solve_sparse(asm_.system, SymmetryHint::General);
    } catch (const std::exception& e) {
        throw std::runtime_error("solve_msfem[" + method.name + "]: " + e.what());
    }
    return sol;
}

std::vector<double> CoarseSolution::expand_element(const CoarseMesh& coarse,
                                                   const BasisSet& bases, int tri) const {
    const LocalBasis& lb = bases.bases[tri];
    const FineElementMesh& fm = bases.meshes[tri];
    std::vector<double> u(fm.node_count(), 0.0);
    auto add = [&](const std::vector<double>& field, double coeff) {
        if (coeff == 0.0 || field.empty()) return;
        for (size_t i = 0; i < u.size(); ++i) u[i] += coeff * field[i];
    };
    if (method.basis.bc_family != BcFamily::CrouzeixRaviart) {
        for (int v = 0; v < 3; ++v) {
            const int g = vertex_dof[coarse.triangles[tri][v]];
            if (g >= 0) add(lb.vertex_fields[v], coefficients[g]);
        }
    } else {
        for (int k = 0; k < 3; ++k) {
            const int g = edge_dof[coarse.tri_edges[tri][k]];
            if (g >= 0) add(lb.edge_fields[k], coefficients[g]);
        }
    }
    if (bubble_dof[tri] >= 0) add(lb.bubble_field, coefficients[bubble_dof[tri]]);
    return u;
}

}  // namespace msfem
