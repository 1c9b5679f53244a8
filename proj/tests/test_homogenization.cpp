#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "msfem/homogenization.hpp"

using namespace msfem;

namespace {

constexpr double kPi = 3.14159265358979323846;

double cell_integral(const PeriodicCellMesh& mesh, const std::vector<double>& u) {
    double s = 0.0;
    for (const FineCell& c : mesh.cells) {
        if (!c.fluid) continue;
        s += c.area / 3.0 * (u[c.v[0]] + u[c.v[1]] + u[c.v[2]]);
    }
    return s;
}

}  // namespace

TEST_CASE("periodic cell mesh basics") {
    const PeriodicCellMesh mesh = build_periodic_cell_mesh(Motif::none(), 8);
    CHECK(mesh.dof_count() == 64);
    CHECK(mesh.cells.size() == 128);
    CHECK(mesh.fluid_area == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mesh.fluid_connected);
    // wrap-around identification
    CHECK(mesh.dof(8, 3) == mesh.dof(0, 3));
    CHECK(mesh.dof(-1, 3) == mesh.dof(7, 3));
    CHECK(mesh.dof(2, 8) == mesh.dof(2, 0));
    double area = 0.0;
    for (const FineCell& c : mesh.cells) area += c.area;
    CHECK(area == doctest::Approx(1.0).epsilon(1e-14));

    const PeriodicCellMesh o1 = build_periodic_cell_mesh(Motif::o1(), 16);
    CHECK(o1.fluid_area == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(o1.fluid_connected);
    CHECK_THROWS(build_periodic_cell_mesh(Motif::none(), 1));
}

TEST_CASE("empty motif: identity correctors") {
    const CellCorrectors c = solve_neumann_correctors(Motif::none(), 16);
    for (int i = 0; i < 2; ++i)
        for (double v : c.w[i]) CHECK(std::abs(v) <= 1e-10);
    const EffectiveTensors t = effective_tensors(c, 0.8, {2.0, -1.0});
    CHECK(std::abs(t.A(0, 0) - 0.8) <= 1e-10);
    CHECK(std::abs(t.A(1, 1) - 0.8) <= 1e-10);
    CHECK(std::abs(t.A(0, 1)) <= 1e-10);
    CHECK(std::abs(t.A(1, 0)) <= 1e-10);
    CHECK(std::abs(t.b(0) - 2.0) <= 1e-10);
    CHECK(std::abs(t.b(1) + 1.0) <= 1e-10);
    CHECK(t.porosity == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("O1 effective tensor: symmetry, isotropy, eigenvalue bounds") {
    const double alpha = 0.7;
    const CellCorrectors c = solve_neumann_correctors(Motif::o1(), 64);
    const EffectiveTensors t = effective_tensors(c, alpha, {1.0, 1.0});
    CHECK(std::abs(t.A(0, 1) - t.A(1, 0)) <= 1e-10);
    // the motif has the full square symmetry group
    CHECK(std::abs(t.A(0, 0) - t.A(1, 1)) <= 1e-6 * alpha);
    CHECK(std::abs(t.A(0, 1)) <= 1e-6 * alpha);
    const Eigen::Vector2d ev =
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(0.5 * (t.A + t.A.transpose()))
            .eigenvalues();
    CHECK(ev.minCoeff() > 0.0);
    CHECK(ev.maxCoeff() <= alpha + 1e-12);
    // Voigt-type upper bound: A* <= porosity * alpha in the quadratic-form sense
    CHECK(t.A(0, 0) <= t.porosity * alpha + 1e-12);
    CHECK(t.porosity == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("b* = A*^T b / alpha for constant b") {
    const double alpha = 0.45;
    const Eigen::Vector2d b(1.3, -0.2);
    const CellCorrectors c = solve_neumann_correctors(Motif::o2(), 64);
    const EffectiveTensors t = effective_tensors(c, alpha, {b(0), b(1)});
    const Eigen::Vector2d predicted = t.A.transpose() * b / alpha;
    CHECK((t.b - predicted).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("drift decomposition leaves b* unchanged") {
    const Vec2 b{0.9, 1.7};
    const CellCorrectors c = solve_neumann_correctors(Motif::o1(), 48);
    const EffectiveTensors direct = effective_tensors(c, 1.0, b);
    const std::vector<double> phi = decompose_drift(c.mesh, b);
    const std::vector<Vec2> bper = drift_field(c.mesh, phi, b);
    const Eigen::Vector2d via_drift = effective_drift(c, bper);
    CHECK(std::abs(via_drift(0) - direct.b(0)) <= 1e-8);
    CHECK(std::abs(via_drift(1) - direct.b(1)) <= 1e-8);
    // phi has zero mean over the fluid part
    CHECK(std::abs(cell_integral(c.mesh, phi)) <= 1e-10);
}

TEST_CASE("Neumann correctors have zero mean and periodic mean gradient") {
    const CellCorrectors c = solve_neumann_correctors(Motif::o1(), 32);
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(cell_integral(c.mesh, c.w[i])) <= 1e-10);
        // symmetry of O1 about both axes: the two correctors are mirror images,
        // so their effective contributions coincide
    }
    // square symmetry swaps w_1 and w_2 under (x,y) -> (y,x)
    for (int j = 0; j < c.mesh.n; ++j)
        for (int i = 0; i < c.mesh.n; ++i) {
            const int a = c.mesh.dof(i, j);
            const int b = c.mesh.dof(j, i);
            if (!c.mesh.touches_fluid[a]) continue;
            CHECK(std::abs(c.w[0][a] - c.w[1][b]) <= 1e-9);
        }
}

TEST_CASE("Dirichlet cell corrector") {
    CHECK_THROWS(solve_dirichlet_cell(build_periodic_cell_mesh(Motif::none(), 16), 1.0,
                                      {0.0, 0.0}));
    const PeriodicCellMesh mesh = build_periodic_cell_mesh(Motif::o1(), 48);
    const std::vector<double> w1 = solve_dirichlet_cell(mesh, 1.0, {1.0, 1.0});
    for (int d = 0; d < mesh.dof_count(); ++d)
        if (mesh.solid_closure[d]) CHECK(w1[d] == 0.0);
    CHECK(cell_integral(mesh, w1) > 0.0);
    // pure diffusion scales inversely with alpha
    const std::vector<double> wa = solve_dirichlet_cell(mesh, 1.0, {0.0, 0.0});
    const std::vector<double> wb = solve_dirichlet_cell(mesh, 2.0, {0.0, 0.0});
    for (int d = 0; d < mesh.dof_count(); ++d)
        CHECK(std::abs(wb[d] - 0.5 * wa[d]) <= 1e-10);
    // scaling both alpha and b scales the solution
    const std::vector<double> wc = solve_dirichlet_cell(mesh, 1.0, {3.0, -1.0});
    const std::vector<double> wd = solve_dirichlet_cell(mesh, 2.0, {6.0, -2.0});
    for (int d = 0; d < mesh.dof_count(); ++d)
        CHECK(std::abs(wd[d] - 0.5 * wc[d]) <= 1e-10);
}

TEST_CASE("homogenized solver reproduces a manufactured solution") {
    auto exact = [](Vec2 p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); };
    Eigen::Matrix2d A;
    A << 2.0, 0.0, 0.0, 1.0;
    const Eigen::Vector2d bstar(1.0, 0.0);
    auto f = [&](Vec2 p) {
        const double u = std::sin(kPi * p.x) * std::sin(kPi * p.y);
        const double ux = kPi * std::cos(kPi * p.x) * std::sin(kPi * p.y);
        return (2.0 + 1.0) * kPi * kPi * u + 1.0 * ux;
    };
    const HomogenizedSolution sol = solve_homogenized(A, bstar, 1.0, f, 64);
    double sup = 0.0;
    for (int i = 0; i < sol.mesh.node_count(); ++i)
        sup = std::max(sup, std::abs(sol.u[i] - exact(sol.mesh.nodes[i])));
    CHECK(sup <= 2e-3);
    CHECK_THROWS(solve_homogenized(-A, bstar, 1.0, f, 16));
}

TEST_CASE("porosity scales the homogenized load linearly") {
    Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
    auto f = [](Vec2) { return 1.0; };
    const HomogenizedSolution full = solve_homogenized(A, {0.0, 0.0}, 1.0, f, 16);
    const HomogenizedSolution half = solve_homogenized(A, {0.0, 0.0}, 0.5, f, 16);
    for (int i = 0; i < full.mesh.node_count(); ++i)
        CHECK(std::abs(half.u[i] - 0.5 * full.u[i]) <= 1e-12);
}

TEST_CASE("Dirichlet rate study smoke test: expansion beats the plain error") {
    auto f = [](Vec2 p) { return std::sin(kPi * p.x / 2.0) * std::sin(kPi * p.y / 2.0); };
    const RateStudy study =
        rate_study_dirichlet(1.0, {1.0, 1.0}, Motif::o1(), f, {0.25, 0.125}, 32, false);
    REQUIRE(study.points.size() == 2);
    for (const RatePoint& p : study.points) {
        CHECK(p.err_expansion > 0.0);
        CHECK(p.err_expansion < p.err_plain);
    }
    CHECK(study.points[1].err_expansion < study.points[0].err_expansion);
    CHECK(study.fitted_rate > 0.0);
}
