#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "expem/config.hpp"
#include "expem/estimators.hpp"
#include "expem/stability.hpp"

namespace expem {

struct MomentRow {
    int q = 0;
    double dt = 0.0;
    double moment_2p = 0.0;          // E[Xbar_T^{2p}]
    double neg_moment_stopped = 0.0; // sup_n E[Xbar^{-kappa}], stopped
    double exp_moment_stopped = 0.0; // E[exp(mu * stopped integral of Xbar^{beta-1})]
    std::size_t n_stopped = 0;
    std::size_t n_traj = 0;
};

struct MomentsTable {
    std::vector<MomentRow> rows;
    int p = 1;
    double neg_power = 2.0;
    double mu = 0.5;
};

ConvergenceTable run_convergence(const ExperimentConfig& config, std::ostream& log);
StabilityReport run_stability(const ExperimentConfig& config, std::ostream& log);
HypothesisReport run_check(const ExperimentConfig& config, std::ostream& log);
MomentsTable run_moments(const ExperimentConfig& config, std::ostream& log);

void write_csv(const MomentsTable& table, std::ostream& out);
std::string to_json_text(const ConvergenceTable& table);
std::string to_json_text(const MomentsTable& table);
std::string to_json_text(const StabilityReport& report);
std::string to_json_text(const HypothesisReport& report);
void write_report(const HypothesisReport& report, std::ostream& out);

// Runs the configured experiment and writes table.csv / table.json /
// table.txt (as applicable) under config.out_dir. Returns the process exit
// code: 0 on success, 3 when a validity guard tripped (more than 1% of the
// trajectory pairs overflowed).
int run_experiment(const ExperimentConfig& config, std::ostream& log);

} // namespace expem
