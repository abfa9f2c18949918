#pragma once

#include <iosfwd>
#include <utility>

#include "expem/model.hpp"
#include "expem/scheme.hpp"

namespace expem {

struct StabilityReport {
    double xi_star = 0.0;       // stationary level of the SDE
    double xi_lower_root = 0.0; // scheme band, lower root (depends on dt)
    double xi_upper_root = 0.0; // scheme band, upper root
    long crossings = 0;         // sign changes of Xbar - xi_star on the run
    double band_occupancy = 0.0; // fraction of t in [T/2, T] with |Xbar - xi_star| <= band_radius
    double band_radius = 0.0;
    double T_long = 0.0;
    double dt = 0.0;
    bool empty_run = false;     // T == 0 or no steps; occupancy reported as 0
};

// Unique positive root of phi(x) = b(0)/x + B1 - (B2 + Sigma^2/2) x^{2(alpha-1)}
// for the polynomial family with beta = 2 alpha - 1. Bisection to absolute
// tolerance 1e-12.
double stationary_point(const ModelSpec& model);

// Roots (xi_lower, xi_upper) of the dt-perturbed functions
//   phi_lower(x) = phi(x) - (b(0)/x) B1 dt
//   phi_upper(x) = phi(x) + b(0)(Sigma^2 + B2) x^{2 alpha - 3} dt,
// bracketing the stationary level: xi_lower <= xi_star <= xi_upper, with
// equality when b(0) = 0. Requires dt <= 1/B1.
std::pair<double, double> scheme_stationary_bounds(const ModelSpec& model, double dt);

// Number of strict sign changes of values[n] - level along the trajectory.
long count_crossings(const Trajectory& trajectory, double level);

// Flat key = value text block.
void write_report(const StabilityReport& report, std::ostream& out);

} // namespace expem
