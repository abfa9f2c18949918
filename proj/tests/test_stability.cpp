#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "expem/stability.hpp"

using namespace expem;

namespace {

double phi_of(const ModelSpec& m, double x) {
    return m.b0 / x + m.B1 - (m.B2 + 0.5 * m.Sigma * m.Sigma) * std::pow(x, 2.0 * (m.alpha - 1.0));
}

} // namespace

TEST_CASE("stationary point of the long-run benchmark") {
    const ModelSpec m = preset("stability"); // b(x) = x - 6 x^3, sigma = x^2
    const double xi = stationary_point(m);
    CHECK(xi * xi == doctest::Approx(2.0 / 13.0).epsilon(1e-12));
    CHECK(std::fabs(phi_of(m, xi)) <= 1e-10);
}

TEST_CASE("stationary point at a constructed root") {
    ModelSpec m = preset("stability");
    m.B1 = m.B2 + 0.5; // phi(1) = 0 by construction (Sigma = 1)
    CHECK(stationary_point(m) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("stationary point with intercept") {
    // phi(x) = 1/x + 1 - 7 x^2; root frozen from an independent bisection.
    const ModelSpec m = preset("case1");
    const double xi = stationary_point(m);
    CHECK(xi == doctest::Approx(0.6130834594244536).epsilon(1e-10));
    CHECK(std::fabs(phi_of(m, xi)) <= 1e-10);
}

TEST_CASE("unsupported models are rejected") {
    CHECK_THROWS_AS(stationary_point(preset("case8")), std::invalid_argument);
    CHECK_THROWS_AS(stationary_point(preset("gbm")), std::invalid_argument);
    ModelSpec off_critical = preset("case1");
    off_critical.beta = 3.5;
    CHECK_THROWS_AS(stationary_point(off_critical), std::invalid_argument);
}

TEST_CASE("scheme stability band") {
    const ModelSpec m = preset("case1"); // b0 = 1
    const double xi = stationary_point(m);

    SUBCASE("ordering and residuals at a fixed step") {
        const auto [lo, hi] = scheme_stationary_bounds(m, 0.01);
        CHECK(lo <= xi);
        CHECK(xi <= hi);
        CHECK(hi - lo < 0.05); // gap of order dt
        CHECK(std::fabs(phi_of(m, lo) - (m.b0 / lo) * m.B1 * 0.01) <= 1e-10);
        CHECK(std::fabs(phi_of(m, hi) + m.b0 * (m.Sigma * m.Sigma + m.B2) *
                                            std::pow(hi, 2.0 * m.alpha - 3.0) * 0.01) <= 1e-10);
    }
    SUBCASE("zero intercept collapses the band exactly") {
        const ModelSpec flat = preset("stability");
        const double star = stationary_point(flat);
        const auto [lo, hi] = scheme_stationary_bounds(flat, 0.05);
        CHECK(lo == star);
        CHECK(hi == star);
    }
    SUBCASE("the band shrinks linearly in dt") {
        double prev_width = 1.0;
        for (double dt : {1e-1, 1e-2, 1e-3, 1e-4}) {
            const auto [lo, hi] = scheme_stationary_bounds(m, dt);
            const double width = hi - lo;
            CHECK(width > 0.0);
            CHECK(width <= 10.0 * dt); // linear-in-dt bound with generous constant
            CHECK(width < prev_width);
            prev_width = width;
        }
    }
    SUBCASE("time step beyond 1/B1 is refused") {
        CHECK_THROWS_AS(scheme_stationary_bounds(m, 1.5), std::invalid_argument);
    }
}

TEST_CASE("crossing counter") {
    Trajectory t;
    t.grid = make_grid(1.0, 2);
    SUBCASE("single upward crossing") {
        t.values = {0.5, 0.8, 1.1, 1.4, 1.7};
        CHECK(count_crossings(t, 1.0) == 1);
    }
    SUBCASE("constant at the level never crosses strictly") {
        t.values = {1.0, 1.0, 1.0, 1.0, 1.0};
        CHECK(count_crossings(t, 1.0) == 0);
    }
    SUBCASE("oscillation counts every strict sign change") {
        t.values = {0.5, 1.5, 0.5, 1.5, 0.5};
        CHECK(count_crossings(t, 1.0) == 4);
    }
    SUBCASE("touching without crossing is not counted") {
        t.values = {0.5, 1.0, 0.5, 0.9, 1.5};
        CHECK(count_crossings(t, 1.0) == 1); // the touch at node 1 does not count
    }
    SUBCASE("level must be positive") {
        t.values = {1, 1, 1, 1, 1};
        CHECK_THROWS_AS(count_crossings(t, 0.0), std::domain_error);
    }
}
