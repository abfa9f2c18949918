#include "expem/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "expem/paths.hpp"

namespace expem {

void parallel_for_indexed(std::size_t n, unsigned threads,
                          const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers;
        const std::size_t hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

constexpr std::size_t kJackknifeBatches = 20;

// Fixed-shape reduction: pairwise sums inside 20 contiguous index batches,
// combined left to right. Independent of the thread count that filled the
// slots, and reused by the jackknife.
struct BatchedSum {
    std::array<double, kJackknifeBatches> batch{};
    double total = 0.0;
};

BatchedSum batched_sum(std::span<const double> values) {
    BatchedSum s;
    const std::size_t n = values.size();
    for (std::size_t j = 0; j < kJackknifeBatches; ++j) {
        const std::size_t lo = n * j / kJackknifeBatches;
        const std::size_t hi = n * (j + 1) / kJackknifeBatches;
        s.batch[j] = pairwise_sum(values.subspan(lo, hi - lo));
        s.total += s.batch[j];
    }
    return s;
}

std::array<std::size_t, kJackknifeBatches> batched_count(std::span<const std::uint8_t> valid) {
    std::array<std::size_t, kJackknifeBatches> counts{};
    const std::size_t n = valid.size();
    for (std::size_t j = 0; j < kJackknifeBatches; ++j) {
        const std::size_t lo = n * j / kJackknifeBatches;
        const std::size_t hi = n * (j + 1) / kJackknifeBatches;
        for (std::size_t i = lo; i < hi; ++i) counts[j] += valid[i];
    }
    return counts;
}

double lp_norm(double power_sum, std::size_t n, int p) {
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    return std::pow(power_sum / static_cast<double>(n), 1.0 / (2.0 * p));
}

// Leave-one-batch-out standard error of the L^{2p} norm estimate.
double jackknife_se(const BatchedSum& sums, const std::array<std::size_t, kJackknifeBatches>& counts,
                    std::size_t n_valid, int p) {
    if (n_valid < 2 * kJackknifeBatches) return 0.0;
    std::array<double, kJackknifeBatches> theta;
    for (std::size_t j = 0; j < kJackknifeBatches; ++j) {
        const std::size_t n_out = n_valid - counts[j];
        if (n_out == 0) return 0.0;
        theta[j] = lp_norm(sums.total - sums.batch[j], n_out, p);
    }
    double mean = 0.0;
    for (double t : theta) mean += t;
    mean /= kJackknifeBatches;
    double ss = 0.0;
    for (double t : theta) ss += (t - mean) * (t - mean);
    const double b = static_cast<double>(kJackknifeBatches);
    return std::sqrt((b - 1.0) / b * ss);
}

} // namespace

ErrorEstimate strong_error(const ModelSpec& model, const StrongErrorParams& params) {
    if (params.n_traj == 0) throw std::domain_error("strong_error: n_traj must be >= 1");
    if (params.q_ref < params.q) throw std::domain_error("strong_error: q_ref must be >= q");
    if (params.p < 1) throw std::domain_error("strong_error: p must be >= 1");
    model.validate();

    const int levels = params.q_ref - params.q;
    const std::size_t stride = std::size_t{1} << levels;
    const TimeGrid grid_ref = make_grid(params.T, params.q_ref);
    const TimeGrid grid_coarse = make_grid(params.T, params.q);
    const std::size_t n = params.n_traj;
    const std::size_t coarse_steps = grid_coarse.steps;
    const double two_p = 2.0 * params.p;

    std::vector<double> sup_pow(n), term_pow(n), stop_pow(n);
    std::vector<double> sup_abs(n), sup_sq(n), stop_abs(n), stop_sq(n);
    std::vector<std::uint8_t> valid(n, 0), stopped_flag(n, 0);

    parallel_for_indexed(n, params.threads, [&](std::size_t i) {
        // Scratch buffers survive across trajectories on the same worker.
        thread_local std::vector<double> fine;
        thread_local BrownianPath coarse_path;
        thread_local std::vector<double> ref_nodes;
        fine.resize(grid_ref.steps);
        sample_brownian_into(grid_ref, {params.seed, i}, fine);
        coarsen_into(fine, levels, coarse_path.increments);
        coarse_path.grid = grid_coarse;
        coarse_path.stream = {params.seed, i};
        ref_nodes.resize(coarse_steps + 1);
        const bool ref_overflow =
            simulate_exp_em_strided(model, grid_ref, fine, stride, ref_nodes);
        const Trajectory coarse = simulate(model, grid_coarse, coarse_path, SchemeTag::exp_em);

        double sup = 0.0, sup_stopped = 0.0;
        const std::size_t stop_node =
            coarse.stop_index ? std::min(*coarse.stop_index, coarse_steps) : coarse_steps;
        for (std::size_t m = 0; m <= coarse_steps; ++m) {
            const double d = std::fabs(ref_nodes[m] - coarse.values[m]);
            sup = std::max(sup, d);
            if (m <= stop_node) sup_stopped = std::max(sup_stopped, d);
        }
        const double term = std::fabs(ref_nodes.back() - coarse.values.back());

        const bool ok = !(ref_overflow || coarse.overflow);
        valid[i] = ok;
        stopped_flag[i] = ok && coarse.stop_index.has_value();
        sup_pow[i] = ok ? std::pow(sup, two_p) : 0.0;
        term_pow[i] = ok ? std::pow(term, two_p) : 0.0;
        stop_pow[i] = ok ? std::pow(sup_stopped, two_p) : 0.0;
        sup_abs[i] = ok ? sup : 0.0;
        sup_sq[i] = ok ? sup * sup : 0.0;
        stop_abs[i] = ok ? sup_stopped : 0.0;
        stop_sq[i] = ok ? sup_stopped * sup_stopped : 0.0;
    });

    const auto counts = batched_count(valid);
    std::size_t n_valid = 0;
    for (std::size_t c : counts) n_valid += c;

    ErrorEstimate est;
    est.q = params.q;
    est.dt = grid_coarse.dt;
    est.n_traj = n;
    est.n_overflow = n - n_valid;
    for (std::uint8_t s : stopped_flag) est.n_stopped += s;

    const BatchedSum s_sup = batched_sum(sup_pow);
    const BatchedSum s_term = batched_sum(term_pow);
    const BatchedSum s_stop = batched_sum(stop_pow);
    est.l2_sup = lp_norm(s_sup.total, n_valid, params.p);
    est.l2_terminal = lp_norm(s_term.total, n_valid, params.p);
    est.l2_sup_stopped = lp_norm(s_stop.total, n_valid, params.p);
    est.se_l2_sup = jackknife_se(s_sup, counts, n_valid, params.p);
    est.se_l2_terminal = jackknife_se(s_term, counts, n_valid, params.p);
    est.se_l2_sup_stopped = jackknife_se(s_stop, counts, n_valid, params.p);

    if (n_valid > 1) {
        const auto sample_variance = [n_valid](std::span<const double> abs,
                                               std::span<const double> sq) {
            const double mean = batched_sum(abs).total / static_cast<double>(n_valid);
            const double ss = batched_sum(sq).total;
            return std::max(0.0, (ss - static_cast<double>(n_valid) * mean * mean) /
                                     static_cast<double>(n_valid - 1));
        };
        est.variance = sample_variance(sup_abs, sup_sq);
        est.variance_stopped = sample_variance(stop_abs, stop_sq);
    }
    return est;
}

std::pair<double, double> fit_rate(const ConvergenceTable& table, std::size_t* excluded) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t used = 0, dropped = 0;
    for (const ErrorEstimate& row : table.rows) {
        if (!(row.l2_sup > 0.0) || !std::isfinite(row.l2_sup)) {
            ++dropped;
            continue;
        }
        const double x = -static_cast<double>(row.q);
        const double y = std::log2(row.l2_sup);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++used;
    }
    if (excluded) *excluded = dropped;
    if (used < 2) throw std::runtime_error("fit_rate: need at least two usable rows");
    const double denom = used * sxx - sx * sx;
    const double slope = (used * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / used;
    return {slope, intercept};
}

namespace {

double frozen_value(const Trajectory& t, std::size_t n, bool stopped) {
    if (stopped && t.stop_index && n > *t.stop_index) n = *t.stop_index;
    return t.values[n];
}

} // namespace

double empirical_moment(std::span<const Trajectory> trajectories, double power,
                        MomentSelector selector, bool stopped) {
    if (trajectories.empty()) throw std::domain_error("empirical_moment: no trajectories");
    const std::size_t n_nodes = trajectories.front().values.size();
    for (const Trajectory& t : trajectories)
        if (t.values.size() != n_nodes)
            throw std::invalid_argument("empirical_moment: trajectories on different grids");
    const double n_traj = static_cast<double>(trajectories.size());
    const auto powed = [&](double v) {
        if (power < 0.0 && v <= 0.0)
            throw std::domain_error("empirical_moment: negative power with non-positive value");
        return std::pow(v, power);
    };

    if (selector == MomentSelector::per_node_max) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < n_nodes; ++m) {
            double sum = 0.0;
            for (const Trajectory& t : trajectories) sum += powed(frozen_value(t, m, stopped));
            best = std::max(best, sum / n_traj);
        }
        return best;
    }

    std::vector<double> per_traj(trajectories.size());
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const Trajectory& t = trajectories[i];
        if (selector == MomentSelector::terminal) {
            per_traj[i] = powed(frozen_value(t, n_nodes - 1, stopped));
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < n_nodes; ++m)
                best = std::max(best, powed(frozen_value(t, m, stopped)));
            per_traj[i] = best;
        }
    }
    return pairwise_sum(per_traj) / n_traj;
}

double exponential_moment(std::span<const Trajectory> trajectories, double mu, double exponent) {
    if (trajectories.empty()) throw std::domain_error("exponential_moment: no trajectories");
    std::vector<double> per_traj(trajectories.size());
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const Trajectory& t = trajectories[i];
        const std::size_t steps = t.grid.steps;
        const std::size_t end = t.stop_index ? std::min(*t.stop_index, steps) : steps;
        double integral = 0.0;
        for (std::size_t m = 0; m < end; ++m)
            integral += std::pow(t.values[m], exponent);
        integral *= t.grid.dt;
        per_traj[i] = std::exp(mu * integral);
    }
    return pairwise_sum(per_traj) / static_cast<double>(trajectories.size());
}

double sojourn_time(const Trajectory& trajectory, double center, double radius) {
    if (!(radius > 0.0)) throw std::domain_error("sojourn_time: radius must be > 0");
    double total = 0.0;
    for (std::size_t n = 0; n + 1 < trajectory.values.size(); ++n) {
        if (std::fabs(trajectory.values[n] - center) <= radius &&
            std::fabs(trajectory.values[n + 1] - center) <= radius)
            total += trajectory.grid.dt;
    }
    return total;
}

void write_csv(const ConvergenceTable& table, std::ostream& out) {
    out << "q,dt,l2_sup,l2_terminal,l2_sup_stopped,variance,n_traj,n_overflow,n_stopped\n";
    char buf[256];
    for (const ErrorEstimate& r : table.rows) {
        std::snprintf(buf, sizeof buf, "%d,%.2e,%.2e,%.2e,%.2e,%.2e,%zu,%zu,%zu\n", r.q, r.dt,
                      r.l2_sup, r.l2_terminal, r.l2_sup_stopped, r.variance, r.n_traj,
                      r.n_overflow, r.n_stopped);
        out << buf;
    }
}

} // namespace expem
