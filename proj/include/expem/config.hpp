#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "expem/model.hpp"

namespace expem {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { converge, stability, moments, check };

const char* to_string(ExperimentKind kind);

// Flat INI-style experiment description; every model key maps 1:1 to a
// coefficient parameter. Desk-scale defaults: the full-scale study
// (n_traj = 1e6, q_ref = 21, q up to 20) is a config edit away.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::converge;
    ModelSpec model = preset("case1");
    std::string model_preset = "case1";

    // grid
    double T = 1.0;
    std::vector<int> q_list = {6, 7, 8, 9, 10, 11, 12};
    int q_ref = 16;
    double dt = 1e-3; // stability stepping, not dyadic

    // mc
    std::size_t n_traj = 10000;
    std::uint64_t seed = 42;
    unsigned threads = 1;
    int p = 1;
    double eps = 0.1;        // check: penalty parameter for the max time step
    double mu = 0.5;         // moments: exponential-moment coefficient
    double neg_power = 2.0;  // moments: order of the stopped negative moment
    double band_radius = 0.15;

    // output
    std::string out_dir = "out";
    bool emit_csv = true;
    bool emit_json = true;
    bool emit_trajectories = false;
};

ExperimentConfig parse_config(std::istream& in, const std::string& source_name);
ExperimentConfig parse_config_file(const std::string& path);

// Cross-field preconditions (q_ref above every q, positive sizes, ...).
void validate_config(const ExperimentConfig& config);

} // namespace expem
