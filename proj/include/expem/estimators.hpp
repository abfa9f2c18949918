#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "expem/model.hpp"
#include "expem/scheme.hpp"

namespace expem {

struct ErrorEstimate {
    int q = 0;
    double dt = 0.0;
    double l2_sup = 0.0;         // (E[sup_n |X - Xbar|^{2p}])^{1/(2p)} over coarse nodes
    double l2_terminal = 0.0;
    double l2_sup_stopped = 0.0; // sup truncated at the coarse scheme's exit index
    double variance = 0.0;       // sample variance of the per-trajectory sup error
    double variance_stopped = 0.0; // same for the stopped sup error
    double se_l2_sup = 0.0;      // jackknife standard errors, 20 fixed batches
    double se_l2_terminal = 0.0;
    double se_l2_sup_stopped = 0.0;
    std::size_t n_traj = 0;
    std::size_t n_overflow = 0;  // pairs dropped because a clamp fired
    std::size_t n_stopped = 0;
};

struct ConvergenceTable {
    std::vector<ErrorEstimate> rows; // sorted by q ascending
    double fitted_rate = 0.0;
    double fitted_intercept = 0.0;
};

struct StrongErrorParams {
    double T = 1.0;
    int q = 6;
    int q_ref = 16;        // >= q; the reference runs at this finer level
    std::size_t n_traj = 10000;
    int p = 1;             // the error is measured in L^{2p}
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

// Coupled coarse/fine strong error of the exponential scheme: each
// trajectory samples one Brownian path at level q_ref, coarsens it to
// level q, runs the scheme on both, and compares at the coarse nodes with
// the fine run standing in for the exact solution. Fixed seed gives
// bit-identical output for any thread count.
ErrorEstimate strong_error(const ModelSpec& model, const StrongErrorParams& params);

// Ordinary least squares of log2(error) against -q, so the slope estimates
// the convergence order. Rows with zero or non-finite l2_sup are excluded;
// the count of exclusions lands in *excluded when given. Fewer than two
// usable rows is an error.
std::pair<double, double> fit_rate(const ConvergenceTable& table,
                                   std::size_t* excluded = nullptr);

enum class MomentSelector { terminal, sup_over_grid, per_node_max };

// Monte Carlo moment of X^power under the chosen time selector. With
// stopped = true, values past each trajectory's stop index are frozen at
// the stopping value.
double empirical_moment(std::span<const Trajectory> trajectories, double power,
                        MomentSelector selector, bool stopped);

// E[exp{mu * integral_0^{T ^ S} Xbar_{eta(s)}^exponent ds}], the integral
// taken as the left-endpoint sum over grid steps (exact for the frozen
// integrand).
double exponential_moment(std::span<const Trajectory> trajectories, double mu, double exponent);

// Total grid time the trajectory spends inside the ball B(center, radius),
// counting a step iff both endpoint values lie in the ball.
double sojourn_time(const Trajectory& trajectory, double center, double radius);

// CSV rows per refinement level; reals in scientific notation with three
// significant digits, full precision lives in the JSON twin.
void write_csv(const ConvergenceTable& table, std::ostream& out);

// Run fn(i) for i in [0, n) on up to `threads` workers with a static
// partition. fn must only touch slot i of shared state.
void parallel_for_indexed(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace expem
