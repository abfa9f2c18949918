#include "expem/stability.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace expem {

namespace {

constexpr double kRootTol = 1e-12;

void require_prototype(const ModelSpec& model) {
    if (model.kind != ModelKind::polynomial)
        throw std::invalid_argument("stability: model must be of the polynomial kind");
    if (std::fabs(model.beta - (2.0 * model.alpha - 1.0)) > 1e-12)
        throw std::invalid_argument("stability: model needs beta = 2 alpha - 1");
    if (!(model.B2 > 0.0)) throw std::invalid_argument("stability: B2 must be > 0");
}

// phi and its dt-perturbations share the shape
//   b0/x + B1 - (B2 + Sigma^2/2) x^{2(alpha-1)} + correction(x).
double phi(const ModelSpec& m, double x) {
    return m.b0 / x + m.B1 - (m.B2 + 0.5 * m.Sigma * m.Sigma) * std::pow(x, 2.0 * (m.alpha - 1.0));
}

template <class F>
double bisect(F f, double lo, double hi) {
    if (!(f(lo) > 0.0 && f(hi) < 0.0))
        throw std::runtime_error("bisect: bracket does not change sign");
    while (hi - lo > kRootTol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // interval at floating resolution
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// phi(0+) = +inf and phi(inf) = -inf for prototype parameters; double the
// upper end until a sign change appears.
template <class F>
double find_decreasing_root(F f, double lo_init) {
    double lo = lo_init;
    while (!(f(lo) > 0.0)) {
        lo *= 0.5;
        if (lo < 1e-300) throw std::runtime_error("stability: no positive bracket end found");
    }
    double hi = 1.0;
    while (!(f(hi) < 0.0)) {
        hi *= 2.0;
        if (hi > 1e150) throw std::runtime_error("stability: no negative bracket end found");
    }
    return bisect(f, lo, hi);
}

} // namespace

double stationary_point(const ModelSpec& model) {
    require_prototype(model);
    return find_decreasing_root([&](double x) { return phi(model, x); }, 1e-8);
}

std::pair<double, double> scheme_stationary_bounds(const ModelSpec& model, double dt) {
    require_prototype(model);
    if (!(dt > 0.0)) throw std::invalid_argument("scheme_stationary_bounds: dt must be > 0");
    if (model.B1 > 0.0 && dt > 1.0 / model.B1)
        throw std::invalid_argument("scheme_stationary_bounds: requires dt <= 1/B1");

    const double xi_star = stationary_point(model);
    if (model.b0 == 0.0) return {xi_star, xi_star}; // both perturbations vanish

    const auto phi_lower = [&](double x) { return phi(model, x) - (model.b0 / x) * model.B1 * dt; };
    const auto phi_upper = [&](double x) {
        return phi(model, x) + model.b0 * (model.Sigma * model.Sigma + model.B2) *
                                   std::pow(x, 2.0 * model.alpha - 3.0) * dt;
    };

    // phi_lower is strictly decreasing and negative at xi_star: root below.
    const double xi_lower = bisect(phi_lower, 1e-300, xi_star);
    // phi_upper is positive at xi_star and eventually negative; it is either
    // decreasing past xi_star or has a positive minimum, so the root above
    // xi_star is unique. Grow the upper bracket end as needed.
    double hi = std::max(1.0, 2.0 * xi_star);
    while (!(phi_upper(hi) < 0.0)) {
        hi *= 2.0;
        if (hi > 1e150)
            throw std::runtime_error("scheme_stationary_bounds: no upper bracket end found");
    }
    const double xi_upper = bisect(phi_upper, xi_star, hi);
    return {xi_lower, xi_upper};
}

long count_crossings(const Trajectory& trajectory, double level) {
    if (!(level > 0.0)) throw std::domain_error("count_crossings: level must be > 0");
    long crossings = 0;
    for (std::size_t n = 0; n + 1 < trajectory.values.size(); ++n) {
        if ((trajectory.values[n] - level) * (trajectory.values[n + 1] - level) < 0.0) ++crossings;
    }
    return crossings;
}

void write_report(const StabilityReport& r, std::ostream& out) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "xi_star = %.12g\n"
                  "xi_star_squared = %.12g\n"
                  "xi_lower_root = %.12g\n"
                  "xi_upper_root = %.12g\n"
                  "crossings = %ld\n"
                  "band_occupancy = %.12g\n"
                  "band_radius = %.12g\n"
                  "T = %.12g\n"
                  "dt = %.12g\n"
                  "empty_run = %d\n",
                  r.xi_star, r.xi_star * r.xi_star, r.xi_lower_root, r.xi_upper_root, r.crossings,
                  r.band_occupancy, r.band_radius, r.T_long, r.dt, r.empty_run ? 1 : 0);
    out << buf;
}

} // namespace expem
