#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "expem/estimators.hpp"
#include "expem/paths.hpp"

using namespace expem;

namespace {

Trajectory constant_trajectory(double c, double T, int q) {
    Trajectory t;
    t.grid = make_grid(T, q);
    t.values.assign(t.grid.steps + 1, c);
    return t;
}

bool same_estimate(const ErrorEstimate& a, const ErrorEstimate& b) {
    return a.q == b.q && a.dt == b.dt && a.l2_sup == b.l2_sup && a.l2_terminal == b.l2_terminal &&
           a.l2_sup_stopped == b.l2_sup_stopped && a.variance == b.variance &&
           a.variance_stopped == b.variance_stopped && a.se_l2_sup == b.se_l2_sup &&
           a.se_l2_terminal == b.se_l2_terminal && a.se_l2_sup_stopped == b.se_l2_sup_stopped &&
           a.n_traj == b.n_traj && a.n_overflow == b.n_overflow && a.n_stopped == b.n_stopped;
}

} // namespace

TEST_CASE("degenerate self-comparison gives exactly zero error") {
    StrongErrorParams params;
    params.T = 1.0;
    params.q = 6;
    params.q_ref = 6;
    params.n_traj = 64;
    params.seed = 11;
    const ErrorEstimate est = strong_error(preset("case6"), params);
    CHECK(est.l2_sup == 0.0);
    CHECK(est.l2_terminal == 0.0);
    CHECK(est.l2_sup_stopped == 0.0);
    CHECK(est.variance == 0.0);
    CHECK(est.n_overflow == 0);
}

TEST_CASE("the scheme is exact on linear coefficients") {
    StrongErrorParams params;
    params.q = 5;
    params.q_ref = 10;
    params.n_traj = 100;
    params.seed = 3;
    const ErrorEstimate est = strong_error(preset("gbm"), params);
    CHECK(est.l2_sup <= 1e-10);
}

TEST_CASE("estimates are bit-identical across thread counts") {
    StrongErrorParams params;
    params.q = 5;
    params.q_ref = 9;
    params.n_traj = 257; // deliberately not a multiple of the worker count
    params.seed = 7;
    params.threads = 1;
    const ErrorEstimate one = strong_error(preset("case6"), params);
    params.threads = 4;
    const ErrorEstimate four = strong_error(preset("case6"), params);
    params.threads = 8;
    const ErrorEstimate eight = strong_error(preset("case6"), params);
    CHECK(same_estimate(one, four));
    CHECK(same_estimate(one, eight));
}

TEST_CASE("norm ordering across p and stopping") {
    StrongErrorParams params;
    params.q = 4;
    params.q_ref = 8;
    params.n_traj = 400;
    params.seed = 19;
    const ErrorEstimate p1 = strong_error(preset("case6"), params);
    params.p = 2;
    const ErrorEstimate p2 = strong_error(preset("case6"), params);
    CHECK(p2.l2_sup >= p1.l2_sup);          // power-mean inequality
    CHECK(p1.l2_sup >= p1.l2_terminal);     // sup dominates the endpoint
    CHECK(p1.l2_sup_stopped <= p1.l2_sup);  // stopping truncates the window
    CHECK(p1.n_stopped > 0);                // the coarse level does get stopped here
}

TEST_CASE("rate fitting") {
    SUBCASE("exact log-linear data") {
        ConvergenceTable t;
        for (int q = 4; q <= 10; ++q) {
            ErrorEstimate r;
            r.q = q;
            r.l2_sup = std::pow(2.0, -0.5 * q);
            t.rows.push_back(r);
        }
        const auto [slope, intercept] = fit_rate(t);
        CHECK(slope == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(intercept == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("flat data") {
        ConvergenceTable t;
        for (int q = 4; q <= 8; ++q) {
            ErrorEstimate r;
            r.q = q;
            r.l2_sup = 0.125;
            t.rows.push_back(r);
        }
        CHECK(fit_rate(t).first == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("published benchmark column") {
        // Strong errors of the B2 = 6.5 case at q = 10..20; the least-squares
        // slope of log2(err) against -q was frozen from an independent fit.
        const double errs[] = {7.04e-03, 5.02e-03, 3.58e-03, 2.55e-03, 1.81e-03, 1.28e-03,
                               9.02e-04, 6.29e-04, 4.30e-04, 2.82e-04, 1.63e-04};
        ConvergenceTable t;
        for (int i = 0; i < 11; ++i) {
            ErrorEstimate r;
            r.q = 10 + i;
            r.l2_sup = errs[i];
            t.rows.push_back(r);
        }
        CHECK(fit_rate(t).first == doctest::Approx(0.5272273914396433).epsilon(1e-9));
    }
    SUBCASE("zero rows are excluded, too few rows fail") {
        ConvergenceTable t;
        ErrorEstimate a;
        a.q = 4;
        a.l2_sup = 0.0;
        ErrorEstimate b = a;
        b.q = 5;
        b.l2_sup = 0.25;
        t.rows = {a, b};
        std::size_t excluded = 0;
        CHECK_THROWS_AS(fit_rate(t, &excluded), std::runtime_error);
        CHECK(excluded == 1);
    }
}

TEST_CASE("empirical moments") {
    const std::vector<Trajectory> constant = {constant_trajectory(2.0, 1.0, 3)};
    CHECK(empirical_moment(constant, 2.0, MomentSelector::terminal, false) == 4.0);
    CHECK(empirical_moment(constant, -3.0, MomentSelector::terminal, false) == 0.125);
    CHECK(empirical_moment(constant, 2.0, MomentSelector::sup_over_grid, false) == 4.0);
    CHECK(empirical_moment(constant, 2.0, MomentSelector::per_node_max, false) == 4.0);

    SUBCASE("stopped freezing") {
        Trajectory t = constant_trajectory(1.0, 1.0, 2); // nodes 0..4
        t.values = {1.0, 2.0, 5.0, 9.0, 9.0};
        t.stop_index = 2; // frozen at value 5 from node 2 on
        const std::vector<Trajectory> ts = {t};
        CHECK(empirical_moment(ts, 1.0, MomentSelector::terminal, true) == 5.0);
        CHECK(empirical_moment(ts, 1.0, MomentSelector::sup_over_grid, true) == 5.0);
        CHECK(empirical_moment(ts, 1.0, MomentSelector::terminal, false) == 9.0);
    }
    SUBCASE("negative power rejects zero values") {
        Trajectory t = constant_trajectory(0.0, 1.0, 1);
        const std::vector<Trajectory> ts = {t};
        CHECK_THROWS_AS(empirical_moment(ts, -2.0, MomentSelector::terminal, false),
                        std::domain_error);
    }
    SUBCASE("terminal second moment of geometric Brownian motion") {
        const ModelSpec gbm = preset("gbm");
        const TimeGrid grid = make_grid(1.0, 6);
        const std::size_t n = 100000;
        std::vector<Trajectory> trajs(n);
        parallel_for_indexed(n, 4, [&](std::size_t i) {
            trajs[i] = simulate(gbm, grid, sample_brownian(grid, {505, i}), SchemeTag::exp_em);
        });
        const double mean = empirical_moment(trajs, 2.0, MomentSelector::terminal, false);
        // closed form: x0^2 exp((2 B1 + Sigma^2) T)
        const double target = std::exp(2.0 * 0.05 + 0.2 * 0.2);
        double ss = 0.0;
        for (const Trajectory& t : trajs) {
            const double v = t.terminal() * t.terminal() - mean;
            ss += v * v;
        }
        const double se = std::sqrt(ss / (n - 1.0) / n);
        CHECK(std::fabs(mean - target) <= 3.0 * se);
    }
}

TEST_CASE("exponential moments") {
    Trajectory t = constant_trajectory(1.5, 2.0, 4);
    const std::vector<Trajectory> ts = {t};
    SUBCASE("mu = 0 gives exactly one") {
        CHECK(exponential_moment(ts, 0.0, 2.0) == 1.0);
    }
    SUBCASE("deterministic integrand") {
        // integral = T * c^2, no stop
        const double expected = std::exp(0.5 * 2.0 * 1.5 * 1.5);
        CHECK(exponential_moment(ts, 0.5, 2.0) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("stopping truncates the integral") {
        Trajectory s = constant_trajectory(1.5, 2.0, 4);
        s.stop_index = 8; // half the horizon
        const std::vector<Trajectory> ss = {s};
        const double expected = std::exp(0.5 * 1.0 * 1.5 * 1.5);
        CHECK(exponential_moment(ss, 0.5, 2.0) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("sojourn time") {
    Trajectory t = constant_trajectory(1.0, 1.0, 4);
    SUBCASE("never near the center") {
        CHECK(sojourn_time(t, 5.0, 0.5) == 0.0);
    }
    SUBCASE("constant at the center counts the whole horizon") {
        CHECK(sojourn_time(t, 1.0, 0.25) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("a step counts only when both endpoints are inside") {
        t.values[4] = 10.0; // knocks out steps 3 and 4
        CHECK(sojourn_time(t, 1.0, 0.25) == doctest::Approx(14.0 / 16.0).epsilon(1e-12));
    }
    SUBCASE("additivity over a split of the horizon") {
        const TimeGrid grid = make_grid(1.0, 5);
        Trajectory full;
        full.grid = grid;
        full.values.resize(grid.steps + 1);
        for (std::size_t n = 0; n <= grid.steps; ++n)
            full.values[n] = 1.0 + 0.4 * std::sin(0.7 * static_cast<double>(n));
        Trajectory first, second;
        first.grid = make_grid(0.5, 4);
        second.grid = make_grid(0.5, 4);
        first.values.assign(full.values.begin(), full.values.begin() + 17);
        second.values.assign(full.values.begin() + 16, full.values.end());
        const double whole = sojourn_time(full, 1.0, 0.3);
        const double parts = sojourn_time(first, 1.0, 0.3) + sojourn_time(second, 1.0, 0.3);
        CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
    }
    SUBCASE("radius must be positive") {
        CHECK_THROWS_AS(sojourn_time(t, 1.0, 0.0), std::domain_error);
    }
}

TEST_CASE("csv shape") {
    ConvergenceTable t;
    ErrorEstimate r;
    r.q = 6;
    r.dt = 0.015625;
    r.l2_sup = 7.04e-3;
    r.l2_terminal = 5e-3;
    r.l2_sup_stopped = 7.0e-3;
    r.variance = 1e-5;
    r.n_traj = 100;
    t.rows.push_back(r);
    std::ostringstream out;
    write_csv(t, out);
    CHECK(out.str() ==
          "q,dt,l2_sup,l2_terminal,l2_sup_stopped,variance,n_traj,n_overflow,n_stopped\n"
          "6,1.56e-02,7.04e-03,5.00e-03,7.00e-03,1.00e-05,100,0,0\n");
}

TEST_CASE("input validation") {
    StrongErrorParams params;
    params.n_traj = 0;
    CHECK_THROWS_AS(strong_error(preset("case6"), params), std::domain_error);
    params.n_traj = 10;
    params.q = 8;
    params.q_ref = 6;
    CHECK_THROWS_AS(strong_error(preset("case6"), params), std::domain_error);
}
