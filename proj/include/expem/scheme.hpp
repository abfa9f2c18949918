#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "expem/model.hpp"
#include "expem/paths.hpp"

namespace expem {

enum class SchemeTag { exp_em, euler, tamed, exact_gbm, exact_lv };

const char* to_string(SchemeTag tag);

struct Trajectory {
    TimeGrid grid;
    SchemeTag scheme = SchemeTag::exp_em;
    std::vector<double> values;             // steps + 1 node values, values[0] = x0
    std::optional<std::size_t> stop_index;  // first node n with values[n] > threshold
    bool overflow = false;                  // a step exponent hit the clamp
    std::size_t positivity_breaches = 0;    // euler/tamed only

    double terminal() const { return values.back(); }
    bool stopped() const { return stop_index.has_value(); }
};

// Exit threshold dt^{-1/(beta-1)}; grows without bound as dt -> 0.
double stopping_threshold(double dt, double beta);

// One step of the exponential scheme from x over step width h with Brownian
// increment dW:
//   x' = x exp{ (sigma(x)/x) dW + ((b(x)-b(0))/x - sigma^2(x)/(2 x^2)) h } + b(0) h.
// Strictly positive by construction; x' >= b(0) h.
double exp_em_step(const ModelSpec& model, double x, double h, double dW);

// Value of the continuous version at eta(t)+s, 0 < s <= h, given the left
// node value and the partial Brownian increment W_t - W_{eta(t)}. At s = h
// this is exp_em_step bit-exactly (same expression).
double interpolate_exp_em(const ModelSpec& model, double x_eta, double s, double dW_partial);

// Run a full trajectory of the chosen scheme over the path's grid. The
// trajectory continues past the exit threshold; stop_index only records
// where the first exceedance happened, so stopped and unstopped statistics
// come from one run.
Trajectory simulate(const ModelSpec& model, const TimeGrid& grid, const BrownianPath& path,
                    SchemeTag tag);

// Reference-run helper for coupled estimators: steps the exponential scheme
// across the whole grid but records only every stride-th node into
// node_values (size grid.steps/stride + 1). Returns the overflow flag.
// Bit-identical to the values a full simulate() would produce.
bool simulate_exp_em_strided(const ModelSpec& model, const TimeGrid& grid,
                             std::span<const double> increments, std::size_t stride,
                             std::span<double> node_values);

// Closed-form logistic diffusion dX = X(B1 - B2 X)dt + Sigma X dW, X_0 = 1,
// with the time integral in the denominator accumulated by the trapezoid
// rule over the path's grid.
Trajectory exact_lotka_volterra(double B1, double B2, double Sigma, const BrownianPath& path);

// Two-column "t,x" text dump for plotting.
void write_trajectory_csv(const Trajectory& traj, const std::string& filename);

} // namespace expem
