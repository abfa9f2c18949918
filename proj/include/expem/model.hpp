#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace expem {

// Coefficient families for the SDE dX = b(X)dt + sigma(X)dW on (0, inf).
//
//   polynomial            b(x) = b0 + B1 x - B2 x^beta,          sigma(x) = Sigma x^alpha
//   piecewise_polynomial  same, with B2 switching value at the discontinuity
//                         points chi_1 < ... < chi_m (interval k of
//                         [chi_k, chi_{k+1}) uses interval_B2[k], chi_0 = 0)
//   modulated_polynomial  b(x) = b0 + B1 x - (cos x + 2)^2 x^beta, sigma(x) = Sigma x^alpha
//   gbm                   b(x) = B1 x,                            sigma(x) = Sigma x
//   lotka_volterra        b(x) = B1 x - B2 x^2,                   sigma(x) = Sigma x
enum class ModelKind {
    polynomial,
    piecewise_polynomial,
    modulated_polynomial,
    gbm,
    lotka_volterra,
};

const char* to_string(ModelKind kind);

struct ModelSpec {
    ModelKind kind = ModelKind::polynomial;
    double b0 = 0.0;            // drift intercept b(0), >= 0
    double B1 = 0.0;            // linear outward push, >= 0
    double B2 = 0.0;            // superlinear mean reversion
    double beta = 3.0;          // drift power, > 1
    double alpha = 2.0;         // diffusion power, >= 1
    double Sigma = 1.0;         // diffusion scale, > 0
    double SigmaPrime = 0.0;    // bound scale for sigma', >= 0 (0 means "use Sigma")
    double growth_const = 0.0;  // L_G in |b(x)-b(0)| <= L_G (x^beta v x)
    double onesided_const = 0.0; // L_b_loc in the one-sided Lipschitz bound
    std::vector<double> discontinuities; // chi_1 < ... < chi_m, all > 0
    std::vector<double> interval_B2;     // size m+1 for piecewise kind
    std::optional<double> zeta;          // threshold for the drift-derivative bound
    std::optional<double> B1prime;       // constant term of the drift-derivative bound
    double x0 = 1.0;            // initial condition, > 0

    double sigma_prime_bound() const { return SigmaPrime > 0.0 ? SigmaPrime : Sigma; }
    void validate() const; // throws std::invalid_argument
};

struct Coefficients {
    double drift;
    double diffusion;
};

// b(x) and sigma(x). x must be >= 0; piecewise kinds resolve x against the
// half-open intervals [chi_k, chi_{k+1}), so the value at chi_k belongs to
// the interval on its right.
Coefficients eval_coefficients(const ModelSpec& model, double x);

// b'(x), analytic per kind (used by the hypothesis checker).
double drift_derivative(const ModelSpec& model, double x);

// Scalar margin whose non-negativity is the sufficient parameter condition
// for the 1/2 strong rate of the L^{2p} error:
//   2 B2 + 1 - max( 2p max(4 alpha - 3, 2 alpha), 4 (2p - 3/4) ).
double kappa_strong(int p, double alpha, double B2);

// The analogue for the weak-rate condition of the predecessor scheme
// analysis: 2 B2 - 6 alpha - max(alpha^2, 12 alpha - 19, 8 alpha - 10,
// 5 alpha^2 / (2 alpha - 1)).
double kappa_weak(double alpha, double B2);

// Moment-bound condition: 1_{beta = 2 alpha - 1} * p <= 1/2 + B2/Sigma^2.
// Vacuous (always true) when beta > 2 alpha - 1.
bool check_moment_condition(double p, const ModelSpec& model);

// Largest p for which check_moment_condition holds (+inf when the
// indicator vanishes).
double moment_bound_max_p(const ModelSpec& model);

// min{ chi_{k+1} - chi_k : k = 0..m-1 } with chi_0 = 0; +inf when there are
// no discontinuities. The gap above chi_m does not enter.
double min_discontinuity_gap(const ModelSpec& model);

// The four terms of the admissible-time-step bound Delta(eps) for a drift
// with discontinuities; terms that do not apply are +inf.
std::array<double, 4> delta_epsilon_terms(double eps, const ModelSpec& model);

// Largest admissible time step for the eps-penalised convergence rate:
// min of the four terms, capped at 1. A continuous drift (no
// discontinuities) admits every dt <= 1, so the result is then 1.
double delta_epsilon(double eps, const ModelSpec& model);

struct HypothesisReport {
    // Sampled-grid checks, not proofs: each flag means "no violation found
    // on the sampling grid with the model's declared constants".
    bool h_poly_growth = false;
    bool h_piecewise_locally_lipschitz = false;
    bool h_control = false;
    bool h_control_b_prime = false;
    bool h_control_sigma_prime = false;
    bool feller_nonexplosion = false; // 2 B2 >= -(2 alpha - 1) Sigma^2
    double moment_bound_max_p = 0.0;
    double kappa_strong = 0.0;
    double kappa_weak = 0.0;
    int p = 1;
    double eps = 0.0;
    double delta_eps = 0.0;
    double delta_chi_min = 0.0;
};

HypothesisReport check_hypotheses(const ModelSpec& model, int p, double eps);

// Named parameter sets of the benchmark suite: "case1".."case9", "gbm",
// and "stability" (the zero-intercept long-run configuration).
ModelSpec preset(const std::string& name);
bool is_preset_name(const std::string& name);

} // namespace expem
