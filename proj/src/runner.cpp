#include "expem/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "expem/paths.hpp"

namespace expem {

namespace {

using nlohmann::json;

// JSON cannot carry non-finite reals; nlohmann would emit a literal that
// does not round-trip, so map them to null explicitly.
json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

json to_json(const ErrorEstimate& r) {
    return json{{"q", r.q},
                {"dt", r.dt},
                {"l2_sup", finite_or_null(r.l2_sup)},
                {"l2_terminal", finite_or_null(r.l2_terminal)},
                {"l2_sup_stopped", finite_or_null(r.l2_sup_stopped)},
                {"variance", finite_or_null(r.variance)},
                {"variance_stopped", finite_or_null(r.variance_stopped)},
                {"se_l2_sup", finite_or_null(r.se_l2_sup)},
                {"se_l2_terminal", finite_or_null(r.se_l2_terminal)},
                {"se_l2_sup_stopped", finite_or_null(r.se_l2_sup_stopped)},
                {"n_traj", r.n_traj},
                {"n_overflow", r.n_overflow},
                {"n_stopped", r.n_stopped}};
}

std::vector<Trajectory> simulate_batch(const ModelSpec& model, const TimeGrid& grid,
                                       std::uint64_t seed, std::size_t n_traj, unsigned threads) {
    std::vector<Trajectory> trajs(n_traj);
    parallel_for_indexed(n_traj, threads, [&](std::size_t i) {
        const BrownianPath path = sample_brownian(grid, {seed, i});
        trajs[i] = simulate(model, grid, path, SchemeTag::exp_em);
    });
    return trajs;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << body;
    if (!out) throw std::runtime_error("write failed on " + path);
}

constexpr double kExactSchemeFloor = 1e-10;
constexpr double kOverflowValidityShare = 0.01;

} // namespace

ConvergenceTable run_convergence(const ExperimentConfig& cfg, std::ostream& log) {
    ConvergenceTable table;
    table.fitted_rate = std::numeric_limits<double>::quiet_NaN();
    table.fitted_intercept = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> qs = cfg.q_list;
    std::sort(qs.begin(), qs.end());
    for (int q : qs) {
        StrongErrorParams params;
        params.T = cfg.T;
        params.q = q;
        params.q_ref = cfg.q_ref;
        params.n_traj = cfg.n_traj;
        params.p = cfg.p;
        params.seed = cfg.seed;
        params.threads = cfg.threads;
        table.rows.push_back(strong_error(cfg.model, params));
        const ErrorEstimate& r = table.rows.back();
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "q=%2d dt=%.2e l2_sup=%.3e l2_term=%.3e l2_sup_stopped=%.3e stopped=%zu "
                      "overflow=%zu\n",
                      r.q, r.dt, r.l2_sup, r.l2_terminal, r.l2_sup_stopped, r.n_stopped,
                      r.n_overflow);
        log << buf;
    }

    const bool exact = std::all_of(table.rows.begin(), table.rows.end(), [](const ErrorEstimate& r) {
        return r.l2_sup <= kExactSchemeFloor;
    });
    if (exact) {
        log << "exact scheme: errors at floating noise level, rate fit skipped\n";
    } else if (table.rows.size() < 2) {
        log << "single-row table: rate fit skipped\n";
    } else {
        std::size_t excluded = 0;
        const auto [slope, intercept] = fit_rate(table, &excluded);
        table.fitted_rate = slope;
        table.fitted_intercept = intercept;
        if (excluded > 0)
            log << "warning: " << excluded << " rows with zero/non-finite error excluded from the fit\n";
        char buf[96];
        std::snprintf(buf, sizeof buf, "fitted rate = %.4f (intercept %.4f)\n", slope, intercept);
        log << buf;
    }
    return table;
}

StabilityReport run_stability(const ExperimentConfig& cfg, std::ostream& log) {
    StabilityReport report;
    report.dt = cfg.dt;
    report.T_long = cfg.T;
    report.band_radius = cfg.band_radius;
    report.xi_star = stationary_point(cfg.model);
    const auto [lo, hi] = scheme_stationary_bounds(cfg.model, cfg.dt);
    report.xi_lower_root = lo;
    report.xi_upper_root = hi;

    const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
    if (cfg.T <= 0.0 || steps == 0) {
        report.empty_run = true;
        log << "empty run (T = 0): crossings and occupancy reported as 0\n";
        return report;
    }

    const TimeGrid grid = make_grid_steps(cfg.T, steps);
    const BrownianPath path = sample_brownian(grid, {cfg.seed, 0});
    const Trajectory traj = simulate(cfg.model, grid, path, SchemeTag::exp_em);
    report.crossings = count_crossings(traj, report.xi_star);

    std::size_t in_band = 0, window = 0;
    for (std::size_t n = 0; n < traj.values.size(); ++n) {
        if (grid.node(n) < cfg.T / 2.0) continue;
        ++window;
        if (std::fabs(traj.values[n] - report.xi_star) <= cfg.band_radius) ++in_band;
    }
    report.band_occupancy = window > 0 ? static_cast<double>(in_band) / window : 0.0;

    if (cfg.emit_trajectories) {
        ensure_out_dir(cfg.out_dir);
        write_trajectory_csv(traj, cfg.out_dir + "/traj_0.csv");
    }
    write_report(report, log);
    return report;
}

HypothesisReport run_check(const ExperimentConfig& cfg, std::ostream& log) {
    const HypothesisReport report = check_hypotheses(cfg.model, cfg.p, cfg.eps);
    write_report(report, log);
    if (report.kappa_strong < 0.0)
        log << "warning: kappa_strong < 0, the sufficient condition for the 1/2 strong rate "
               "is not met\n";
    if (report.kappa_weak < 0.0)
        log << "note: kappa_weak < 0, the weak-rate sufficient condition is not met\n";
    return report;
}

MomentsTable run_moments(const ExperimentConfig& cfg, std::ostream& log) {
    MomentsTable table;
    table.p = cfg.p;
    table.neg_power = cfg.neg_power;
    table.mu = cfg.mu;
    if (cfg.mu >= cfg.model.B2)
        log << "warning: mu >= B2, the exponential-moment bound is not guaranteed; "
               "computing anyway\n";
    std::vector<int> qs = cfg.q_list;
    std::sort(qs.begin(), qs.end());
    bool dumped = false;
    for (int q : qs) {
        const TimeGrid grid = make_grid(cfg.T, q);
        const std::vector<Trajectory> trajs =
            simulate_batch(cfg.model, grid, cfg.seed, cfg.n_traj, cfg.threads);
        MomentRow row;
        row.q = q;
        row.dt = grid.dt;
        row.n_traj = cfg.n_traj;
        row.moment_2p = empirical_moment(trajs, 2.0 * cfg.p, MomentSelector::terminal, false);
        row.neg_moment_stopped =
            empirical_moment(trajs, -cfg.neg_power, MomentSelector::per_node_max, true);
        row.exp_moment_stopped = exponential_moment(trajs, cfg.mu, cfg.model.beta - 1.0);
        for (const Trajectory& t : trajs) row.n_stopped += t.stopped();
        table.rows.push_back(row);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "q=%2d E[X_T^%d]=%.4e  stopped E[X^-%g]=%.4e  stopped expmom(mu=%g)=%.4e\n",
                      q, 2 * cfg.p, row.moment_2p, cfg.neg_power, row.neg_moment_stopped, cfg.mu,
                      row.exp_moment_stopped);
        log << buf;

        if (cfg.emit_trajectories && !dumped) {
            ensure_out_dir(cfg.out_dir);
            for (std::size_t i = 0; i < std::min<std::size_t>(trajs.size(), 4); ++i)
                write_trajectory_csv(trajs[i], cfg.out_dir + "/traj_" + std::to_string(i) + ".csv");
            dumped = true;
        }
    }
    return table;
}

void write_csv(const MomentsTable& table, std::ostream& out) {
    out << "q,dt,moment_2p,neg_moment_stopped,exp_moment_stopped,n_traj,n_stopped\n";
    char buf[192];
    for (const MomentRow& r : table.rows) {
        std::snprintf(buf, sizeof buf, "%d,%.2e,%.2e,%.2e,%.2e,%zu,%zu\n", r.q, r.dt, r.moment_2p,
                      r.neg_moment_stopped, r.exp_moment_stopped, r.n_traj, r.n_stopped);
        out << buf;
    }
}

std::string to_json_text(const ConvergenceTable& table) {
    json rows = json::array();
    for (const ErrorEstimate& r : table.rows) rows.push_back(to_json(r));
    const json doc{{"rows", rows},
                   {"fitted_rate", finite_or_null(table.fitted_rate)},
                   {"fitted_intercept", finite_or_null(table.fitted_intercept)}};
    return doc.dump(2) + "\n";
}

std::string to_json_text(const MomentsTable& table) {
    json rows = json::array();
    for (const MomentRow& r : table.rows)
        rows.push_back(json{{"q", r.q},
                            {"dt", r.dt},
                            {"moment_2p", finite_or_null(r.moment_2p)},
                            {"neg_moment_stopped", finite_or_null(r.neg_moment_stopped)},
                            {"exp_moment_stopped", finite_or_null(r.exp_moment_stopped)},
                            {"n_traj", r.n_traj},
                            {"n_stopped", r.n_stopped}});
    const json doc{{"rows", rows}, {"p", table.p}, {"neg_power", table.neg_power}, {"mu", table.mu}};
    return doc.dump(2) + "\n";
}

std::string to_json_text(const StabilityReport& r) {
    const json doc{{"xi_star", r.xi_star},
                   {"xi_star_squared", r.xi_star * r.xi_star},
                   {"xi_lower_root", r.xi_lower_root},
                   {"xi_upper_root", r.xi_upper_root},
                   {"crossings", r.crossings},
                   {"band_occupancy", r.band_occupancy},
                   {"band_radius", r.band_radius},
                   {"T", r.T_long},
                   {"dt", r.dt},
                   {"empty_run", r.empty_run}};
    return doc.dump(2) + "\n";
}

std::string to_json_text(const HypothesisReport& r) {
    const json doc{{"h_poly_growth", r.h_poly_growth},
                   {"h_piecewise_locally_lipschitz", r.h_piecewise_locally_lipschitz},
                   {"h_control", r.h_control},
                   {"h_control_b_prime", r.h_control_b_prime},
                   {"h_control_sigma_prime", r.h_control_sigma_prime},
                   {"feller_nonexplosion", r.feller_nonexplosion},
                   {"moment_bound_max_p", finite_or_null(r.moment_bound_max_p)},
                   {"kappa_strong", r.kappa_strong},
                   {"kappa_weak", r.kappa_weak},
                   {"p", r.p},
                   {"eps", r.eps},
                   {"delta_eps", finite_or_null(r.delta_eps)},
                   {"delta_chi_min", finite_or_null(r.delta_chi_min)}};
    return doc.dump(2) + "\n";
}

void write_report(const HypothesisReport& r, std::ostream& out) {
    const auto flag = [](bool b) { return b ? "true" : "false"; };
    out << "h_poly_growth = " << flag(r.h_poly_growth) << " (sampled-check)\n"
        << "h_piecewise_locally_lipschitz = " << flag(r.h_piecewise_locally_lipschitz)
        << " (sampled-check)\n"
        << "h_control = " << flag(r.h_control) << " (sampled-check)\n"
        << "h_control_b_prime = " << flag(r.h_control_b_prime) << " (sampled-check)\n"
        << "h_control_sigma_prime = " << flag(r.h_control_sigma_prime) << "\n"
        << "feller_nonexplosion = " << flag(r.feller_nonexplosion) << "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "moment_bound_max_p = %g\nkappa_strong = %.12g\nkappa_weak = %.12g\n"
                  "p = %d\neps = %g\ndelta_eps = %.12g\ndelta_chi_min = %g\n",
                  r.moment_bound_max_p, r.kappa_strong, r.kappa_weak, r.p, r.eps, r.delta_eps,
                  r.delta_chi_min);
    out << buf;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    ensure_out_dir(cfg.out_dir);
    int exit_code = 0;
    switch (cfg.kind) {
        case ExperimentKind::converge: {
            const ConvergenceTable table = run_convergence(cfg, log);
            if (cfg.emit_csv) {
                std::ostringstream csv;
                write_csv(table, csv);
                write_text_file(cfg.out_dir + "/table.csv", csv.str());
            }
            if (cfg.emit_json) write_text_file(cfg.out_dir + "/table.json", to_json_text(table));
            for (const ErrorEstimate& r : table.rows) {
                if (static_cast<double>(r.n_overflow) >
                    kOverflowValidityShare * static_cast<double>(r.n_traj)) {
                    log << "validity failure: more than 1% of trajectory pairs overflowed at q="
                        << r.q << "\n";
                    exit_code = 3;
                }
            }
            break;
        }
        case ExperimentKind::stability: {
            const StabilityReport report = run_stability(cfg, log);
            std::ostringstream txt;
            write_report(report, txt);
            write_text_file(cfg.out_dir + "/table.txt", txt.str());
            if (cfg.emit_json) write_text_file(cfg.out_dir + "/table.json", to_json_text(report));
            break;
        }
        case ExperimentKind::moments: {
            const MomentsTable table = run_moments(cfg, log);
            if (cfg.emit_csv) {
                std::ostringstream csv;
                write_csv(table, csv);
                write_text_file(cfg.out_dir + "/table.csv", csv.str());
            }
            if (cfg.emit_json) write_text_file(cfg.out_dir + "/table.json", to_json_text(table));
            break;
        }
        case ExperimentKind::check: {
            const HypothesisReport report = run_check(cfg, log);
            std::ostringstream txt;
            write_report(report, txt);
            write_text_file(cfg.out_dir + "/table.txt", txt.str());
            if (cfg.emit_json) write_text_file(cfg.out_dir + "/table.json", to_json_text(report));
            break;
        }
    }
    return exit_code;
}

} // namespace expem
