#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "msfem/coarse_mesh.hpp"
#include "msfem/fem.hpp"
#include "msfem/fine_mesh.hpp"

using namespace msfem;

namespace {

DomainSpec unperforated() {
    DomainSpec spec;
    spec.epsilon = 0.25;
    spec.pattern = PerforationPattern::periodic(Motif::none());
    return spec;
}

// a single unit right triangle as a degenerate "fine mesh"
std::pair<std::vector<Vec2>, std::vector<FineCell>> unit_triangle() {
    std::vector<Vec2> nodes{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    std::vector<FineCell> cells{{{0, 1, 2}, true, 0.5}};
    return {nodes, cells};
}

}  // namespace

TEST_CASE("P1 stiffness of the reference triangle") {
    auto [nodes, cells] = unit_triangle();
    const SpMat K = assemble_form(nodes, cells, 3, 1.0, AdvectionField::zero(), Form::Diffusion);
    const Eigen::MatrixXd D = Eigen::MatrixXd(K);
    Eigen::Matrix3d expect;
    // hand integration: grad hats = (-1,-1), (1,0), (0,1), area 1/2
    expect << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
    CHECK((D - expect).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("mass matrix of the reference triangle") {
    auto [nodes, cells] = unit_triangle();
    const SpMat M = assemble_form(nodes, cells, 3, 1.0, AdvectionField::zero(), Form::Mass);
    const Eigen::MatrixXd D = Eigen::MatrixXd(M);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(D(i, j) == doctest::Approx((i == j ? 2.0 : 1.0) / 24.0).epsilon(1e-14));
}

TEST_CASE("skew advection form is antisymmetric, divergence term vanishes for constant b") {
    const CoarseMesh coarse = build_coarse_mesh(2);
    const FineElementMesh fm = build_fine_mesh(coarse, 1, unperforated(), 2);
    const AdvectionField b = AdvectionField::constant({2.0, -1.0});
    const SpMat S = assemble_form(fm.nodes, fm.cells, fm.node_count(), 1.0, b,
                                  Form::SkewAdvection);
    const Eigen::MatrixXd D = Eigen::MatrixXd(S);
    CHECK((D + D.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    const SpMat V = assemble_form(fm.nodes, fm.cells, fm.node_count(), 1.0, b,
                                  Form::DivergenceTerm);
    CHECK(Eigen::MatrixXd(V).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("advection form consistency: skew = skew part of plain form for constant b") {
    const CoarseMesh coarse = build_coarse_mesh(2);
    const FineElementMesh fm = build_fine_mesh(coarse, 0, unperforated(), 2);
    const AdvectionField b = AdvectionField::constant({1.0, 3.0});
    const Eigen::MatrixXd A = Eigen::MatrixXd(
        assemble_form(fm.nodes, fm.cells, fm.node_count(), 1.0, b, Form::Advection));
    const Eigen::MatrixXd S = Eigen::MatrixXd(
        assemble_form(fm.nodes, fm.cells, fm.node_count(), 1.0, b, Form::SkewAdvection));
    CHECK((S - 0.5 * (A - A.transpose())).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("diffusion rejects nonpositive alpha") {
    auto [nodes, cells] = unit_triangle();
    std::vector<Triplet> trips;
    CHECK_THROWS(assemble_form_triplets(nodes, cells, 0.0, AdvectionField::zero(),
                                        Form::Diffusion, trips));
}

TEST_CASE("load vector integrates a constant exactly") {
    const CoarseMesh coarse = build_coarse_mesh(2);
    const FineElementMesh fm = build_fine_mesh(coarse, 2, unperforated(), 2);
    const auto load = assemble_load(fm.nodes, fm.cells, fm.node_count(), [](Vec2) { return 3.0; });
    double total = 0.0;
    for (double v : load) total += v;
    CHECK(total == doctest::Approx(3.0 * 0.5 * 0.5 * 0.5).epsilon(1e-12));
}

TEST_CASE("edge average functionals") {
    const CoarseMesh coarse = build_coarse_mesh(1);
    DomainSpec spec = unperforated();
    const FineElementMesh fm = build_fine_mesh(coarse, 0, spec, 3);
    // local edge 0 of triangle 0 is the bottom edge, length 1
    const EdgeFunctional fn = edge_average_functional(fm, 0, PerforationBC::Dirichlet, spec);
    CHECK(fn.measure == doctest::Approx(1.0).epsilon(1e-14));
    std::vector<double> ones(fm.node_count(), 1.0);
    CHECK(fn.apply(ones) == doctest::Approx(1.0).epsilon(1e-14));
    // linear ramp x: trapezoid rule is exact for P1
    std::vector<double> ramp(fm.node_count());
    for (int i = 0; i < fm.node_count(); ++i) ramp[i] = fm.nodes[i].x;
    CHECK(fn.apply(ramp) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("edge functional in Neumann mode skips perforated segments") {
    // perforation strip covering the middle half of the bottom edge:
    // O2-like motif at eps = 1 covers x in (0, 0.25) u (0.75, 1), y in (0.25, 0.75);
    // use a custom motif overlapping the edge y = 0.5 of the upper triangle instead.
    DomainSpec spec;
    spec.epsilon = 1.0;
    Motif strip;
    strip.rectangles.push_back({0.25, -0.1, 0.75, 0.3});
    spec.pattern = PerforationPattern::periodic(strip);
    spec.perforation_bc = PerforationBC::Neumann;
    const CoarseMesh coarse = build_coarse_mesh(1);
    const FineElementMesh fm = build_fine_mesh(coarse, 0, spec, 4);
    const EdgeFunctional fn = edge_average_functional(fm, 0, PerforationBC::Neumann, spec);
    // half of the bottom edge is solid
    CHECK(fn.measure == doctest::Approx(0.5).epsilon(1e-12));
    std::vector<double> ones(fm.node_count(), 1.0);
    CHECK(fn.apply(ones) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_sparse basics") {
    {
        std::vector<Triplet> trips{{0, 0, 1.0}, {1, 1, 1.0}};
        Eigen::VectorXd rhs(2);
        rhs << 3.0, -2.0;
        const SparseSystem sys = finalize_system(2, trips, rhs, {});
        const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::General);
        CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(x[1] == doctest::Approx(-2.0).epsilon(1e-14));
    }
    {
        std::vector<Triplet> trips{{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 2.0}};
        Eigen::VectorXd rhs(2);
        rhs << 3.0, 3.0;
        const SparseSystem sys = finalize_system(2, trips, rhs, {});
        const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::Spd);
        CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("assembled Laplace system matches a dense LU oracle") {
    const CoarseMesh coarse = build_coarse_mesh(1);
    DomainSpec spec = unperforated();
    const FineElementMesh fm = build_fine_mesh(coarse, 0, spec, 3);
    std::vector<Triplet> trips;
    assemble_form_triplets(fm.nodes, fm.cells, 1.0, AdvectionField::zero(), Form::Diffusion,
                           trips);
    const auto load = assemble_load(fm.nodes, fm.cells, fm.node_count(), [](Vec2 p) {
        return 1.0 + p.x;
    });
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(load.data(), load.size());
    std::vector<std::pair<int, double>> fixed;
    for (int k = 0; k < 3; ++k)
        for (int nid : fm.edge_nodes[k]) fixed.emplace_back(nid, 0.0);
    const SparseSystem sys = finalize_system(fm.node_count(), trips, rhs, fixed);
    const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::Spd);
    const Eigen::MatrixXd dense = Eigen::MatrixXd(sys.matrix);
    const Eigen::VectorXd oracle = dense.fullPivLu().solve(sys.rhs);
    CHECK((x - oracle).norm() <= 1e-10 * (1.0 + oracle.norm()));
}

TEST_CASE("constraint elimination places identity rows and imposes values") {
    std::vector<Triplet> trips{{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 4.0},
                               {1, 2, 1.0}, {2, 1, 1.0}, {2, 2, 4.0}};
    Eigen::VectorXd rhs(3);
    rhs << 1.0, 1.0, 1.0;
    const SparseSystem sys = finalize_system(3, trips, rhs, {{1, 2.5}});
    const Eigen::VectorXd x = solve_sparse(sys, SymmetryHint::General);
    CHECK(x[1] == doctest::Approx(2.5).epsilon(1e-14));
    // remaining equations: 4 x0 = 1 - 2.5, 4 x2 = 1 - 2.5
    CHECK(x[0] == doctest::Approx((1.0 - 2.5) / 4.0).epsilon(1e-12));
    CHECK(x[2] == doctest::Approx((1.0 - 2.5) / 4.0).epsilon(1e-12));
}

TEST_CASE("c_H coercivity on random fields (div b <= 0)") {
    const CoarseMesh coarse = build_coarse_mesh(2);
    DomainSpec spec = unperforated();
    const FineElementMesh fm = build_fine_mesh(coarse, 0, spec, 3);
    const double alpha = 0.5;
    const AdvectionField b = AdvectionField::constant({3.0, 1.0});
    std::vector<Triplet> trips;
    assemble_form_triplets(fm.nodes, fm.cells, alpha, AdvectionField::zero(), Form::Diffusion,
                           trips);
    assemble_form_triplets(fm.nodes, fm.cells, alpha, b, Form::SkewAdvection, trips);
    assemble_form_triplets(fm.nodes, fm.cells, alpha, b, Form::DivergenceTerm, trips);
    SpMat C(fm.node_count(), fm.node_count());
    C.setFromTriplets(trips.begin(), trips.end());
    const SpMat D = assemble_form(fm.nodes, fm.cells, fm.node_count(), alpha,
                                  AdvectionField::zero(), Form::Diffusion);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd v(fm.node_count());
        for (int i = 0; i < v.size(); ++i) v[i] = gauss(rng);
        const double c_vv = v.dot(C * v);
        const double d_vv = v.dot(D * v);
        CHECK(c_vv >= d_vv - 1e-10 * std::abs(d_vv));
    }
}
