#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msfem/geometry.hpp"

using namespace msfem;

namespace {

DomainSpec periodic_spec(Motif motif, double eps) {
    DomainSpec spec;
    spec.epsilon = eps;
    spec.pattern = PerforationPattern::periodic(std::move(motif));
    return spec;
}

}  // namespace

TEST_CASE("motif geometry") {
    CHECK(Motif::o1().area() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(Motif::o2().area() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(Motif::scaled_o1(1.0).area() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(Motif::scaled_o1(0.5).area() == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(Motif::none().empty());
}

TEST_CASE("fluid indicator on motif cells") {
    const double eps = 0.125;
    const DomainSpec o1 = periodic_spec(Motif::o1(), eps);
    // fractional cell coordinates (0.5, 0.5): center of the O1 square
    CHECK_FALSE(fluid_indicator({eps * 0.5, eps * 0.5}, o1));
    CHECK(fluid_indicator({eps * 0.1, eps * 0.1}, o1));
    // boundary of the perforation counts as fluid
    CHECK(fluid_indicator({eps * 0.25, eps * 0.5}, o1));

    const DomainSpec o2 = periodic_spec(Motif::o2(), eps);
    CHECK_FALSE(fluid_indicator({eps * 0.1, eps * 0.5}, o2));
    CHECK(fluid_indicator({eps * 0.5, eps * 0.5}, o2));

    const DomainSpec none = periodic_spec(Motif::none(), eps);
    CHECK(fluid_indicator({0.5, 0.5}, none));
}

TEST_CASE("periodicity of the indicator") {
    const double eps = 0.0625;
    const DomainSpec spec = periodic_spec(Motif::o1(), eps);
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 40; ++j) {
            const Vec2 p{0.021 * i / 40.0 + 0.3, 0.017 * j / 40.0 + 0.11};
            const Vec2 q{p.x + eps, p.y};
            if (q.x >= 1.0) continue;
            CHECK(fluid_indicator(p, spec) == fluid_indicator(q, spec));
        }
    }
}

TEST_CASE("perforation rectangles, periodic O1 at eps = 1/2") {
    const DomainSpec spec = periodic_spec(Motif::o1(), 0.5);
    const auto rects = perforation_rectangles(spec, {0.0, 0.0, 1.0, 1.0});
    REQUIRE(rects.size() == 4);
    for (const Rect& r : rects) {
        CHECK(r.xmax - r.xmin == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(r.ymax - r.ymin == doctest::Approx(0.25).epsilon(1e-15));
    }
    // deterministic lexicographic order by cell index
    CHECK(rects[0].xmin == doctest::Approx(0.125));
    CHECK(rects[0].ymin == doctest::Approx(0.125));
    CHECK(rects[3].xmin == doctest::Approx(0.625));
    CHECK(rects[3].ymin == doctest::Approx(0.625));
}

TEST_CASE("keep probability 1 is identical to periodic") {
    const DomainSpec per = periodic_spec(Motif::o1(), 0.5);
    DomainSpec thin = per;
    thin.pattern = PerforationPattern::random_thinned(Motif::o1(), 1.0, 1234567);
    const auto a = perforation_rectangles(per, {0.0, 0.0, 1.0, 1.0});
    const auto b = perforation_rectangles(thin, {0.0, 0.0, 1.0, 1.0});
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].xmin == b[i].xmin);
        CHECK(a[i].ymin == b[i].ymin);
        CHECK(a[i].xmax == b[i].xmax);
        CHECK(a[i].ymax == b[i].ymax);
    }
}

TEST_CASE("seeded thinning: frozen regression count and determinism") {
    DomainSpec spec;
    spec.epsilon = 0.03125;
    spec.pattern = PerforationPattern::random_thinned(Motif::o2(), 0.5, 42);
    const auto rects = perforation_rectangles(spec, {0.0, 0.0, 1.0, 1.0});
    // frozen against an independent reimplementation of the counter PRF:
    // 544 of the 1024 cells retained, two rectangles each
    CHECK(rects.size() == 1088);
    const auto again = perforation_rectangles(spec, {0.0, 0.0, 1.0, 1.0});
    REQUIRE(rects.size() == again.size());
    for (size_t i = 0; i < rects.size(); ++i) {
        CHECK(rects[i].xmin == again[i].xmin);
        CHECK(rects[i].ymax == again[i].ymax);
    }
}

TEST_CASE("indicator consistent with rectangle enumeration") {
    DomainSpec spec;
    spec.epsilon = 0.125;
    spec.pattern = PerforationPattern::random_thinned(Motif::o1(), 0.7, 9);
    const auto rects = perforation_rectangles(spec, {0.0, 0.0, 1.0, 1.0});
    const int n = 101;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 p{static_cast<double>(i) / (n - 1), static_cast<double>(j) / (n - 1)};
            bool inside = false;
            for (const Rect& r : rects)
                if (r.contains_strict(p.x, p.y)) inside = true;
            CHECK(fluid_indicator(p, spec) == !inside);
        }
    }
}
