#include "expem/scheme.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace expem {

namespace {

// Near the double-precision exp overflow; a clamped step marks the
// trajectory so estimators can drop it from unstopped statistics.
constexpr double kExponentClamp = 700.0;
constexpr double kValueClamp = 1e150;

struct StepOutcome {
    double value;
    bool clamped;
};

StepOutcome exp_em_step_core(const ModelSpec& model, double x, double s, double dW) {
    const auto [b, sigma] = eval_coefficients(model, x);
    const double sigma_over_x = sigma / x;
    double exponent =
        sigma_over_x * dW + ((b - model.b0) / x - 0.5 * sigma_over_x * sigma_over_x) * s;
    bool clamped = false;
    if (exponent > kExponentClamp) {
        exponent = kExponentClamp;
        clamped = true;
    }
    return {x * std::exp(exponent) + model.b0 * s, clamped};
}

} // namespace

const char* to_string(SchemeTag tag) {
    switch (tag) {
        case SchemeTag::exp_em: return "exp-em";
        case SchemeTag::euler: return "euler";
        case SchemeTag::tamed: return "tamed";
        case SchemeTag::exact_gbm: return "exact-gbm";
        case SchemeTag::exact_lv: return "exact-lv";
    }
    return "unknown";
}

double stopping_threshold(double dt, double beta) {
    if (!(beta > 1.0)) throw std::domain_error("stopping_threshold: beta must be > 1");
    if (!(dt > 0.0 && dt <= 1.0)) throw std::domain_error("stopping_threshold: dt must be in (0,1]");
    return std::pow(dt, -1.0 / (beta - 1.0));
}

double interpolate_exp_em(const ModelSpec& model, double x_eta, double s, double dW_partial) {
    if (!(x_eta > 0.0)) throw std::domain_error("exp-em: state must be strictly positive");
    if (!(s > 0.0)) throw std::domain_error("exp-em: step width must be > 0");
    return exp_em_step_core(model, x_eta, s, dW_partial).value;
}

double exp_em_step(const ModelSpec& model, double x, double h, double dW) {
    return interpolate_exp_em(model, x, h, dW);
}

namespace {

Trajectory simulate_exp_em(const ModelSpec& model, const TimeGrid& grid,
                           const BrownianPath& path) {
    Trajectory traj;
    traj.grid = grid;
    traj.scheme = SchemeTag::exp_em;
    traj.values.resize(grid.steps + 1);
    traj.values[0] = model.x0;
    double x = model.x0;
    for (std::size_t n = 0; n < grid.steps; ++n) {
        const auto out = exp_em_step_core(model, x, grid.dt, path.increments[n]);
        traj.overflow |= out.clamped;
        x = out.value;
        traj.values[n + 1] = x;
    }
    return traj;
}

Trajectory simulate_euler_like(const ModelSpec& model, const TimeGrid& grid,
                               const BrownianPath& path, SchemeTag tag) {
    Trajectory traj;
    traj.grid = grid;
    traj.scheme = tag;
    traj.values.resize(grid.steps + 1);
    traj.values[0] = model.x0;
    double x = model.x0;
    bool frozen = false;
    for (std::size_t n = 0; n < grid.steps; ++n) {
        if (!frozen) {
            const auto [b, sigma] = eval_coefficients(model, x);
            double drift_term = b * grid.dt;
            if (tag == SchemeTag::tamed) drift_term /= 1.0 + grid.dt * std::fabs(b);
            x += drift_term + sigma * path.increments[n];
            if (!(x > 0.0)) {
                // The classical increments can leave the domain where the
                // coefficients are defined; record and absorb.
                ++traj.positivity_breaches;
                frozen = true;
            } else if (x > kValueClamp) {
                x = kValueClamp;
                traj.overflow = true;
                frozen = true;
            }
        }
        traj.values[n + 1] = x;
    }
    return traj;
}

Trajectory simulate_exact_gbm(const ModelSpec& model, const TimeGrid& grid,
                              const BrownianPath& path) {
    if (model.kind != ModelKind::gbm)
        throw std::invalid_argument("exact-gbm requires a gbm model");
    Trajectory traj;
    traj.grid = grid;
    traj.scheme = SchemeTag::exact_gbm;
    traj.values.resize(grid.steps + 1);
    const double mu = model.B1 - 0.5 * model.Sigma * model.Sigma;
    double w = 0.0;
    traj.values[0] = model.x0;
    for (std::size_t n = 1; n <= grid.steps; ++n) {
        w += path.increments[n - 1];
        traj.values[n] = model.x0 * std::exp(mu * grid.node(n) + model.Sigma * w);
    }
    return traj;
}

void record_stop(const ModelSpec& model, Trajectory& traj) {
    if (!(traj.grid.dt <= 1.0)) return; // threshold defined for dt <= 1 only
    const double threshold = stopping_threshold(traj.grid.dt, model.beta);
    for (std::size_t n = 0; n < traj.values.size(); ++n) {
        if (traj.values[n] > threshold) {
            traj.stop_index = n;
            break;
        }
    }
}

} // namespace

bool simulate_exp_em_strided(const ModelSpec& model, const TimeGrid& grid,
                             std::span<const double> increments, std::size_t stride,
                             std::span<double> node_values) {
    if (stride == 0 || grid.steps % stride != 0)
        throw std::invalid_argument("simulate_exp_em_strided: stride must divide the step count");
    if (increments.size() != grid.steps || node_values.size() != grid.steps / stride + 1)
        throw std::invalid_argument("simulate_exp_em_strided: buffer size mismatch");
    bool overflow = false;
    double x = model.x0;
    node_values[0] = x;
    for (std::size_t n = 0; n < grid.steps; ++n) {
        const auto out = exp_em_step_core(model, x, grid.dt, increments[n]);
        overflow |= out.clamped;
        x = out.value;
        if ((n + 1) % stride == 0) node_values[(n + 1) / stride] = x;
    }
    return overflow;
}

Trajectory simulate(const ModelSpec& model, const TimeGrid& grid, const BrownianPath& path,
                    SchemeTag tag) {
    if (path.grid != grid) throw std::invalid_argument("simulate: path and grid disagree");
    if (path.increments.size() != grid.steps)
        throw std::invalid_argument("simulate: increment count mismatch");
    Trajectory traj;
    switch (tag) {
        case SchemeTag::exp_em:
            traj = simulate_exp_em(model, grid, path);
            break;
        case SchemeTag::euler:
        case SchemeTag::tamed:
            traj = simulate_euler_like(model, grid, path, tag);
            break;
        case SchemeTag::exact_gbm:
            traj = simulate_exact_gbm(model, grid, path);
            break;
        case SchemeTag::exact_lv:
            traj = exact_lotka_volterra(model.B1, model.B2, model.Sigma, path);
            break;
    }
    record_stop(model, traj);
    return traj;
}

Trajectory exact_lotka_volterra(double B1, double B2, double Sigma, const BrownianPath& path) {
    if (!(B2 >= 0.0)) throw std::domain_error("exact_lotka_volterra: B2 must be >= 0");
    const TimeGrid& grid = path.grid;
    Trajectory traj;
    traj.grid = grid;
    traj.scheme = SchemeTag::exact_lv;
    traj.values.resize(grid.steps + 1);
    const double mu = B1 - 0.5 * Sigma * Sigma;
    double w = 0.0;
    double numerator_prev = 1.0; // exp at t = 0
    double integral = 0.0;
    traj.values[0] = 1.0;
    for (std::size_t n = 1; n <= grid.steps; ++n) {
        w += path.increments[n - 1];
        const double numerator = std::exp(mu * grid.node(n) + Sigma * w);
        integral += 0.5 * grid.dt * (numerator_prev + numerator);
        traj.values[n] = numerator / (1.0 + B2 * integral);
        numerator_prev = numerator;
    }
    return traj;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& filename) {
    std::ofstream out(filename);
    if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + filename);
    out << "t,x\n";
    char buf[64];
    for (std::size_t n = 0; n < traj.values.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", traj.grid.node(n), traj.values[n]);
        out << buf;
    }
    if (!out) throw std::runtime_error("write_trajectory_csv: write failed on " + filename);
}

} // namespace expem
