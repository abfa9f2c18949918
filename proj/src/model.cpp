#include "expem/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace expem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Powers of positive reals; exact repeated multiplication for small
// integer exponents, exp/log otherwise. 0^p = 0 for p > 0.
double upow(double x, double p) {
    const int ip = static_cast<int>(p);
    if (p == static_cast<double>(ip) && ip >= 0 && ip <= 8) {
        double r = 1.0;
        for (int i = 0; i < ip; ++i) r *= x;
        return r;
    }
    return std::pow(x, p);
}

std::size_t interval_index(const ModelSpec& m, double x) {
    return static_cast<std::size_t>(
        std::upper_bound(m.discontinuities.begin(), m.discontinuities.end(), x) -
        m.discontinuities.begin());
}

double piecewise_b2(const ModelSpec& m, double x) {
    if (m.interval_B2.empty()) return m.B2;
    return m.interval_B2[interval_index(m, x)];
}

double cosine_factor(double x) {
    const double c = std::cos(x) + 2.0;
    return c * c;
}

} // namespace

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::polynomial: return "polynomial";
        case ModelKind::piecewise_polynomial: return "piecewise-polynomial";
        case ModelKind::modulated_polynomial: return "modulated-polynomial";
        case ModelKind::gbm: return "gbm";
        case ModelKind::lotka_volterra: return "lotka-volterra";
    }
    return "unknown";
}

void ModelSpec::validate() const {
    if (!(b0 >= 0.0)) throw std::invalid_argument("model: b0 must be >= 0");
    if (!(B1 >= 0.0)) throw std::invalid_argument("model: B1 must be >= 0");
    if (!(beta > 1.0)) throw std::invalid_argument("model: beta must be > 1");
    if (!(alpha >= 1.0)) throw std::invalid_argument("model: alpha must be >= 1");
    if (!(Sigma > 0.0)) throw std::invalid_argument("model: Sigma must be > 0");
    if (!(SigmaPrime >= 0.0)) throw std::invalid_argument("model: SigmaPrime must be >= 0");
    if (!(x0 > 0.0)) throw std::invalid_argument("model: x0 must be > 0");
    double prev = 0.0;
    for (double chi : discontinuities) {
        if (!(chi > prev))
            throw std::invalid_argument("model: discontinuities must be strictly increasing and > 0");
        prev = chi;
    }
    if (kind == ModelKind::piecewise_polynomial) {
        if (interval_B2.size() != discontinuities.size() + 1)
            throw std::invalid_argument("model: piecewise kind needs one B2 per interval");
    } else if (!interval_B2.empty()) {
        throw std::invalid_argument("model: interval_B2 only applies to the piecewise kind");
    }
}

Coefficients eval_coefficients(const ModelSpec& model, double x) {
    if (x < 0.0) throw std::domain_error("eval_coefficients: x must be >= 0");
    switch (model.kind) {
        case ModelKind::polynomial:
            return {model.b0 + model.B1 * x - model.B2 * upow(x, model.beta),
                    model.Sigma * upow(x, model.alpha)};
        case ModelKind::piecewise_polynomial:
            return {model.b0 + model.B1 * x - piecewise_b2(model, x) * upow(x, model.beta),
                    model.Sigma * upow(x, model.alpha)};
        case ModelKind::modulated_polynomial:
            return {model.b0 + model.B1 * x - cosine_factor(x) * upow(x, model.beta),
                    model.Sigma * upow(x, model.alpha)};
        case ModelKind::gbm:
            return {model.B1 * x, model.Sigma * x};
        case ModelKind::lotka_volterra:
            return {model.B1 * x - model.B2 * x * x, model.Sigma * x};
    }
    throw std::logic_error("eval_coefficients: unhandled kind");
}

double drift_derivative(const ModelSpec& model, double x) {
    if (x < 0.0) throw std::domain_error("drift_derivative: x must be >= 0");
    switch (model.kind) {
        case ModelKind::polynomial:
            return model.B1 - model.beta * model.B2 * upow(x, model.beta - 1.0);
        case ModelKind::piecewise_polynomial:
            return model.B1 - model.beta * piecewise_b2(model, x) * upow(x, model.beta - 1.0);
        case ModelKind::modulated_polynomial: {
            const double c = std::cos(x) + 2.0;
            return model.B1 + 2.0 * std::sin(x) * c * upow(x, model.beta) -
                   model.beta * c * c * upow(x, model.beta - 1.0);
        }
        case ModelKind::gbm:
            return model.B1;
        case ModelKind::lotka_volterra:
            return model.B1 - 2.0 * model.B2 * x;
    }
    throw std::logic_error("drift_derivative: unhandled kind");
}

double kappa_strong(int p, double alpha, double B2) {
    const double dp = static_cast<double>(p);
    const double penalty =
        std::max(2.0 * dp * std::max(4.0 * alpha - 3.0, 2.0 * alpha), 4.0 * (2.0 * dp - 0.75));
    return 2.0 * B2 + 1.0 - penalty;
}

double kappa_weak(double alpha, double B2) {
    const double penalty = std::max({alpha * alpha, 12.0 * alpha - 19.0, 8.0 * alpha - 10.0,
                                     5.0 * alpha * alpha / (2.0 * alpha - 1.0)});
    return 2.0 * B2 - 6.0 * alpha - penalty;
}

namespace {
bool beta_is_critical(const ModelSpec& m) {
    return std::fabs(m.beta - (2.0 * m.alpha - 1.0)) <= 1e-12;
}
} // namespace

bool check_moment_condition(double p, const ModelSpec& model) {
    if (!(p > 0.0)) throw std::domain_error("check_moment_condition: p must be > 0");
    if (!beta_is_critical(model)) return true;
    return p <= 0.5 + model.B2 / (model.Sigma * model.Sigma);
}

double moment_bound_max_p(const ModelSpec& model) {
    if (!beta_is_critical(model)) return kInf;
    return 0.5 + model.B2 / (model.Sigma * model.Sigma);
}

double min_discontinuity_gap(const ModelSpec& model) {
    if (model.discontinuities.empty()) return kInf;
    double gap = model.discontinuities.front(); // chi_1 - chi_0 with chi_0 = 0
    for (std::size_t k = 1; k < model.discontinuities.size(); ++k)
        gap = std::min(gap, model.discontinuities[k] - model.discontinuities[k - 1]);
    return gap;
}

std::array<double, 4> delta_epsilon_terms(double eps, const ModelSpec& model) {
    if (!(eps > 0.0 && eps < 0.5))
        throw std::domain_error("delta_epsilon: eps must lie in (0, 1/2)");
    const double t1 = std::exp(-(1.0 / (2.0 * eps)) * std::log(std::log(1.0 / (2.0 * eps))));
    std::array<double, 4> terms = {t1, kInf, kInf, kInf};
    const double gap = min_discontinuity_gap(model);
    if (!std::isfinite(gap)) return terms;
    const double sig = model.Sigma;
    terms[1] = std::pow((1.0 / (16.0 * sig)) * std::pow(2.0 / 3.0, model.alpha) *
                            std::pow(gap, 1.0 - model.alpha),
                        2.0 / (1.0 - 2.0 * eps));
    terms[2] = std::pow((8.0 / 3.0) * (sig / model.growth_const) *
                            std::pow(1.5 * gap, model.alpha - model.beta),
                        2.0 / (1.0 + 2.0 * eps));
    terms[3] = model.b0 > 0.0 ? gap / (4.0 * model.b0) : kInf;
    return terms;
}

double delta_epsilon(double eps, const ModelSpec& model) {
    const auto terms = delta_epsilon_terms(eps, model);
    if (model.discontinuities.empty()) return 1.0;
    return std::min({terms[0], terms[1], terms[2], terms[3], 1.0});
}

// ---------------------------------------------------------------------------
// Hypothesis checks (sampled, not proofs)
// ---------------------------------------------------------------------------

namespace {

std::vector<double> sampling_grid(const ModelSpec& m) {
    std::vector<double> xs;
    xs.reserve(1700);
    for (int i = 0; i < 400; ++i)
        xs.push_back(std::pow(10.0, -6.0 + 9.0 * i / 399.0));
    for (int i = 0; i <= 1200; ++i)
        xs.push_back(0.01 + (40.0 - 0.01) * i / 1200.0);
    for (double chi : m.discontinuities) {
        xs.push_back(chi * (1.0 - 1e-9));
        xs.push_back(chi);
        xs.push_back(chi * (1.0 + 1e-9));
    }
    xs.push_back(m.x0);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

// Largest per-interval two-sided Lipschitz scale the kind can need.
double derived_c_max(const ModelSpec& m) {
    switch (m.kind) {
        case ModelKind::polynomial:
            return m.B1 + m.beta * std::fabs(m.B2);
        case ModelKind::piecewise_polynomial: {
            double worst = std::fabs(m.B2);
            for (double b2 : m.interval_B2) worst = std::max(worst, std::fabs(b2));
            return m.B1 + m.beta * worst;
        }
        case ModelKind::modulated_polynomial:
            return m.B1 + m.beta * 9.0;
        case ModelKind::gbm:
            return m.B1;
        case ModelKind::lotka_volterra:
            return m.B1 + 2.0 * m.B2;
    }
    return 0.0;
}

bool same_interval(const ModelSpec& m, double x, double y) {
    return interval_index(m, x) == interval_index(m, y);
}

constexpr double kRelTol = 1e-9;
constexpr double kAbsTol = 1e-12;

bool check_poly_growth(const ModelSpec& m, const std::vector<double>& xs) {
    if (!(m.b0 >= 0.0) || !(m.growth_const > 0.0)) return false;
    for (double x : xs) {
        const auto [b, s] = eval_coefficients(m, x);
        const double envelope = m.growth_const * std::max(upow(x, m.beta), x);
        if (std::fabs(b - m.b0) > envelope * (1.0 + kRelTol) + kAbsTol) return false;
        const double s_envelope = m.Sigma * m.Sigma * upow(x, 2.0 * m.alpha);
        if (s * s > s_envelope * (1.0 + kRelTol) + kAbsTol) return false;
    }
    return true;
}

bool check_piecewise_loclip(const ModelSpec& m, const std::vector<double>& xs) {
    // (ii) jumps must decrease: b(chi+) - b(chi-) < 0.
    for (std::size_t k = 0; k < m.discontinuities.size(); ++k) {
        const double chi = m.discontinuities[k];
        double left, right;
        if (m.kind == ModelKind::piecewise_polynomial) {
            left = m.b0 + m.B1 * chi - m.interval_B2[k] * upow(chi, m.beta);
            right = m.b0 + m.B1 * chi - m.interval_B2[k + 1] * upow(chi, m.beta);
        } else {
            left = right = eval_coefficients(m, chi).drift;
        }
        if (!(right - left < 0.0)) return false;
    }
    // (i) sampled two-sided Lipschitz bound within each interval. The noise
    // term covers the rounding of the finite difference itself.
    const double c_max = derived_c_max(m);
    for (std::size_t stride : {std::size_t{1}, std::size_t{13}, std::size_t{101}}) {
        for (std::size_t i = 0; i + stride < xs.size(); ++i) {
            const double x = xs[i], y = xs[i + stride];
            if (!same_interval(m, x, y)) continue;
            const double bx = eval_coefficients(m, x).drift;
            const double by = eval_coefficients(m, y).drift;
            const double envelope =
                c_max * (1.0 + upow(std::max(x, y), m.beta - 1.0)) * (y - x);
            const double noise =
                8.0 * std::numeric_limits<double>::epsilon() * (std::fabs(bx) + std::fabs(by));
            if (std::fabs(by - bx) > envelope * (1.0 + kRelTol) + noise + kAbsTol) return false;
        }
    }
    return true;
}

bool check_control(const ModelSpec& m, const std::vector<double>& xs) {
    if (!(m.b0 >= 0.0 && m.B1 >= 0.0 && m.B2 >= 0.0)) return false;
    if (m.beta < 2.0 * m.alpha - 1.0 - 1e-12) return false;
    for (double x : xs) {
        const double b = eval_coefficients(m, x).drift;
        const double bound = m.b0 + m.B1 * x - m.B2 * upow(x, m.beta);
        const double scale = std::fabs(m.b0) + m.B1 * x + std::fabs(m.B2) * upow(x, m.beta);
        if (b > bound + scale * kRelTol + kAbsTol) return false;
    }
    // One-sided locally Lipschitz, all sampled pairs (jumps included). The
    // noise term covers the rounding of the finite difference itself.
    for (std::size_t stride : {std::size_t{1}, std::size_t{13}, std::size_t{101}}) {
        for (std::size_t i = 0; i + stride < xs.size(); ++i) {
            const double x = xs[i], y = xs[i + stride];
            if (!(y > x)) continue;
            const double bx = eval_coefficients(m, x).drift;
            const double by = eval_coefficients(m, y).drift;
            const double slope = (by - bx) / (y - x);
            const double envelope = m.onesided_const * (1.0 + upow(y, m.beta - 1.0));
            const double noise = 8.0 * std::numeric_limits<double>::epsilon() *
                                 (std::fabs(bx) + std::fabs(by)) / (y - x);
            if (slope > envelope * (1.0 + kRelTol) + noise + kAbsTol) return false;
        }
    }
    return true;
}

bool check_control_b_prime(const ModelSpec& m) {
    if (!m.zeta || !m.B1prime) return false;
    const double chi_m = m.discontinuities.empty() ? 0.0 : m.discontinuities.back();
    if (!(*m.zeta > chi_m)) return false;
    const double lo = *m.zeta, hi = *m.zeta + 120.0;
    for (int i = 0; i <= 6000; ++i) {
        const double x = lo + (hi - lo) * i / 6000.0;
        const double bound = *m.B1prime - m.beta * m.growth_const * upow(x, m.beta - 1.0);
        const double scale =
            std::fabs(*m.B1prime) + m.beta * m.growth_const * upow(x, m.beta - 1.0);
        if (drift_derivative(m, x) > bound + scale * kRelTol + kAbsTol) return false;
    }
    return true;
}

} // namespace

HypothesisReport check_hypotheses(const ModelSpec& model, int p, double eps) {
    model.validate();
    const auto xs = sampling_grid(model);
    HypothesisReport r;
    r.p = p;
    r.eps = eps;
    r.h_poly_growth = check_poly_growth(model, xs);
    r.h_piecewise_locally_lipschitz = check_piecewise_loclip(model, xs);
    r.h_control = check_control(model, xs);
    r.h_control_b_prime = check_control_b_prime(model);
    r.h_control_sigma_prime = model.sigma_prime_bound() >= model.Sigma * (1.0 - 1e-12);
    r.feller_nonexplosion =
        2.0 * model.B2 >= -(2.0 * model.alpha - 1.0) * model.Sigma * model.Sigma;
    r.moment_bound_max_p = moment_bound_max_p(model);
    r.kappa_strong = kappa_strong(p, model.alpha, model.B2);
    r.kappa_weak = kappa_weak(model.alpha, model.B2);
    r.delta_eps = delta_epsilon(eps, model);
    r.delta_chi_min = min_discontinuity_gap(model);
    return r;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

ModelSpec proto_case(double B2) {
    ModelSpec m;
    m.kind = ModelKind::polynomial;
    m.b0 = 1.0;
    m.B1 = 1.0;
    m.B2 = B2;
    m.beta = 3.0;
    m.alpha = 2.0;
    m.Sigma = 1.0;
    m.SigmaPrime = 1.0;
    m.growth_const = std::max(m.B1, B2);
    m.onesided_const = m.B1;
    m.zeta = 1.0;
    m.B1prime = m.B1;
    m.x0 = 1.0;
    return m;
}

} // namespace

ModelSpec preset(const std::string& name) {
    if (name == "case1") return proto_case(6.5);
    if (name == "case2") return proto_case(5.5);
    if (name == "case3") return proto_case(4.5);
    if (name == "case4") return proto_case(3.5);
    if (name == "case5") return proto_case(2.5);
    if (name == "case6") return proto_case(1.0);
    if (name == "case7") {
        ModelSpec m = proto_case(1.0);
        m.kind = ModelKind::modulated_polynomial;
        m.growth_const = 10.0;
        m.onesided_const = 10.0;
        return m;
    }
    if (name == "case8") {
        ModelSpec m;
        m.kind = ModelKind::piecewise_polynomial;
        m.b0 = 1.0;
        m.B1 = 1.0;
        m.B2 = -0.6; // the sign-changing band value; the tail reverts with 6
        m.beta = 3.0;
        m.alpha = 2.0;
        m.Sigma = 1.0;
        m.SigmaPrime = 1.0;
        m.discontinuities = {1.5, 6.0};
        m.interval_B2 = {6.0, -0.6, 6.0};
        m.growth_const = 6.0;
        m.onesided_const = 1.0;
        m.zeta = 6.5;
        m.B1prime = 1.0;
        m.x0 = 3.0;
        return m;
    }
    if (name == "case9") {
        ModelSpec m;
        m.kind = ModelKind::lotka_volterra;
        m.b0 = 0.0;
        m.B1 = 1.0;
        m.B2 = 2.0;
        m.beta = 2.0;
        m.alpha = 1.0;
        m.Sigma = 1.0;
        m.SigmaPrime = 1.0;
        m.growth_const = 2.0;
        m.onesided_const = 1.0;
        m.zeta = 1.0;
        m.B1prime = 1.0;
        m.x0 = 1.0;
        return m;
    }
    if (name == "gbm") {
        ModelSpec m;
        m.kind = ModelKind::gbm;
        m.b0 = 0.0;
        m.B1 = 0.05;
        m.B2 = 0.0;
        m.beta = 2.0;
        m.alpha = 1.0;
        m.Sigma = 0.2;
        m.SigmaPrime = 0.2;
        m.growth_const = 0.05;
        m.onesided_const = 0.05;
        m.x0 = 1.0;
        return m;
    }
    if (name == "stability") {
        ModelSpec m = proto_case(6.0);
        m.b0 = 0.0;
        return m;
    }
    throw std::invalid_argument("unknown model preset: " + name);
}

bool is_preset_name(const std::string& name) {
    static const char* names[] = {"case1", "case2", "case3", "case4", "case5", "case6",
                                  "case7", "case8", "case9", "gbm", "stability"};
    for (const char* n : names)
        if (name == n) return true;
    return false;
}

} // namespace expem
