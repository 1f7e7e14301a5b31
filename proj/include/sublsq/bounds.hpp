#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "sublsq/types.hpp"

namespace sublsq::bounds {

/// Evaluated closed-form bound. `valid` is false exactly when a hypothesis
/// of the underlying statement fails; `value` is then meaningless.
struct BoundReport {
    std::string name;
    double value = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
    std::string hypothesis_notes;
};

struct BoundInputs {
    int n = 0;
    int m = 0;
    double q = 2.0;
    double p = std::numeric_limits<double>::infinity();
    double epsilon = 1e-2;          // target precision of the Monte Carlo mean
    double eta = 0.05;              // confidence level
    double rho_norm = 1.0;          // residue-norm estimate ||rho||_{L^p}
    double sigma = 0.0;             // threshold on the smallest Gram eigenvalue
    double subg_A = 1.0;            // sub-Gaussian tail constants (defaults;
    double subg_B = 0.5;            //   the theory only asserts existence)
    double subg_R = std::numbers::sqrt2;
    double k_q_estimate = std::numeric_limits<double>::quiet_NaN();  // measured K_q
    double accept_prob = 1.0;       // empirical P(s1 > sigma)

    int k() const { return m - n + 1; }
};

/// P(s1 <= eps) <= min(1, (delta * eps)^gamma) with gamma = k/2 and
/// delta = e^2 m / k^2, for Gaussian m x n designs.
inline BoundReport wishart_tail_bound(int n, int m, double eps) {
    if (n < 2) throw ConfigError("bounds: Wishart tail bound requires n >= 2");
    if (m < n) throw ConfigError("bounds: Wishart tail bound requires m >= n");
    if (eps < 0.0) throw ConfigError("bounds: tail abscissa must be >= 0");
    const double k = static_cast<double>(m - n + 1);
    const double gamma = 0.5 * k;
    const double delta = std::exp(2.0) * static_cast<double>(m) / (k * k);
    return {"wishart_tail", std::min(1.0, std::pow(delta * eps, gamma)), true, ""};
}

/// log of L_{n,m} = 2^{k/2-1} Gamma((m+1)/2) / (Gamma(n/2) Gamma(k)),
/// evaluated in log space to survive large arguments.
inline double log_wishart_density_constant(int n, int m) {
    const double k = static_cast<double>(m - n + 1);
    return (0.5 * k - 1.0) * std::numbers::ln2 + std::lgamma(0.5 * (m + 1)) -
           std::lgamma(0.5 * n) - std::lgamma(k);
}

/// Sandwich on the density of the smallest Gram eigenvalue at x > 0:
/// L e^{-nx/2} x^{k/2-1} <= p(x) <= L e^{-x/2} x^{k/2-1}.
inline std::pair<double, double> wishart_density_bounds(int n, int m, double x) {
    if (n < 2 || m < n) throw ConfigError("bounds: density sandwich requires m >= n >= 2");
    if (!(x > 0.0)) throw ConfigError("bounds: density sandwich requires x > 0");
    const double k = static_cast<double>(m - n + 1);
    const double log_l = log_wishart_density_constant(n, m);
    const double shape = (0.5 * k - 1.0) * std::log(x);
    const double lower = std::exp(log_l + shape - 0.5 * n * x);
    const double upper = std::exp(log_l + shape - 0.5 * x);
    return {lower, upper};
}

/// K_q(Gamma) <= (e^2 m / k^2)(1 - q/k)^{-2/q}, valid for 1 <= q < k.
/// At q >= k the moment is infinite and the report is flagged invalid.
inline BoundReport k_q_wishart_bound(int n, int m, double q) {
    BoundReport report{"k_q_wishart", std::numeric_limits<double>::quiet_NaN(), false, ""};
    if (n < 2 || m < n) {
        report.hypothesis_notes = "requires m >= n >= 2";
        return report;
    }
    const double k = static_cast<double>(m - n + 1);
    if (!(q >= 1.0) || !(q < k)) {
        report.hypothesis_notes = "requires 1 <= q < k = m - n + 1; moment infinite otherwise";
        return report;
    }
    const double delta = std::exp(2.0) * static_cast<double>(m) / (k * k);
    report.value = delta * std::pow(1.0 - q / k, -2.0 / q);
    report.valid = true;
    return report;
}

/// E[Y^{-r}] <= delta^r / (1 - r/gamma) under the tail hypothesis
/// P(Y <= eps) <= (delta eps)^gamma, for 0 < r < gamma.
inline BoundReport negative_moment_bound(double delta, double gamma, double r) {
    BoundReport report{"negative_moment", std::numeric_limits<double>::quiet_NaN(), false, ""};
    if (!(delta > 0.0) || !(gamma > 0.0)) {
        report.hypothesis_notes = "requires delta > 0 and gamma > 0";
        return report;
    }
    if (!(r > 0.0 && r < gamma)) {
        report.hypothesis_notes = "requires 0 < r < gamma";
        return report;
    }
    report.value = std::pow(delta, r) / (1.0 - r / gamma);
    report.valid = true;
    return report;
}

/// Conditional version: E[Y^{-r} | Y >= sigma] for r != gamma and
/// 0 < sigma < 1/delta.
inline BoundReport conditional_negative_moment_bound(double delta, double gamma, double r,
                                                     double sigma) {
    BoundReport report{"conditional_negative_moment", std::numeric_limits<double>::quiet_NaN(),
                       false, ""};
    if (!(delta > 0.0) || !(gamma > 0.0) || !(r > 0.0)) {
        report.hypothesis_notes = "requires delta, gamma, r > 0";
        return report;
    }
    if (r == gamma) {
        report.hypothesis_notes = "requires r != gamma";
        return report;
    }
    if (!(sigma > 0.0 && sigma < 1.0 / delta)) {
        report.hypothesis_notes = "requires 0 < sigma < 1/delta";
        return report;
    }
    const double ds = delta * sigma;
    report.value = std::pow(delta, r) / (1.0 - std::pow(ds, gamma)) *
                   (1.0 / (1.0 - r / gamma) + std::pow(ds, gamma - r) / (1.0 - gamma / r));
    report.valid = true;
    return report;
}

struct WishartOptimal {
    double gamma_star = 0.0;
    int m_star = 0;
};

/// Cost-optimal Wishart parameters: gamma* = (n + 2 + sqrt(n^2 + 8))/4 and
/// m* = round(2 gamma* + n - 1); m* ~ 2n for large n.
inline WishartOptimal optimal_wishart_parameters(int n) {
    if (n < 2) throw ConfigError("bounds: optimal Wishart parameters require n >= 2");
    WishartOptimal optimal;
    const double nd = static_cast<double>(n);
    optimal.gamma_star = (nd + 2.0 + std::sqrt(nd * nd + 8.0)) / 4.0;
    optimal.m_star = static_cast<int>(std::llround(2.0 * optimal.gamma_star + nd - 1.0));
    return optimal;
}

struct SubgaussianPlan {
    double sigma0 = 0.0;  // smallest admissible threshold
    double delta = 0.0;   // tail constant of P(s1 <= eps) <= (delta eps)^gamma
    double gamma = 0.0;   // k/2
    double delta_sigma0 = 0.0;  // sanity value, < 1 by construction
};

/// Threshold planner for designs with independent sub-Gaussian entries,
/// driven by the tail estimate
/// P(s1 <= eps (sqrt(m) - sqrt(n-1))^2) <= (A eps)^{k/2} + e^{-Bm}.
inline SubgaussianPlan subgaussian_plan(int n, int m, double A, double B) {
    if (n < 2 || m < n) throw ConfigError("bounds: sub-Gaussian plan requires m >= n >= 2");
    if (!(A > 0.0) || !(B > 0.0)) throw ConfigError("bounds: tail constants must be positive");
    const double k = static_cast<double>(m - n + 1);
    const double md = static_cast<double>(m);
    const double gap = std::sqrt(md) - std::sqrt(static_cast<double>(n - 1));
    SubgaussianPlan plan;
    plan.gamma = 0.5 * k;
    plan.sigma0 = B * B * md * md * gap * gap / (k * k * A) * std::exp(-2.0 * B * md / k);
    plan.delta = (1.0 + k / (B * md)) * (1.0 + k / (B * md)) * A / (gap * gap);
    plan.delta_sigma0 = (1.0 + B * md / k) * (1.0 + B * md / k) * std::exp(-2.0 * B * md / k);
    return plan;
}

enum class CostRegime { Invertible, Thresholded, Wishart, Subgaussian };

namespace detail {

inline bool variance_conjugate(double p, double q) {
    if (std::isinf(p)) return std::abs(q - 2.0) < 1e-9;
    if (std::isinf(q)) return std::abs(p - 2.0) < 1e-9;
    return std::abs(2.0 / p + 2.0 / q - 1.0) < 1e-9;
}

}  // namespace detail

/// Monte Carlo cost of reaching precision epsilon, in relative units (the
/// theory's absolute constants are normalized to 1); only scaling laws are
/// meaningful. The regime picks the K_q plug-in:
///   Invertible  - user-measured K_q,
///   Thresholded - the ceiling K_q <= 1/sigma with the acceptance-rate power,
///   Wishart     - the closed-form Gaussian-design bound,
///   Subgaussian - the planner's tail constants at q = 2, p = inf.
inline BoundReport cost_bound(const BoundInputs& inputs, CostRegime regime) {
    if (!detail::variance_conjugate(inputs.p, inputs.q)) {
        throw ConfigError("bounds: cost model requires conjugate orders 2/p + 2/q = 1");
    }
    if (!(inputs.epsilon > 0.0)) throw ConfigError("bounds: precision must be positive");
    if (inputs.n < 2 || inputs.m < inputs.n) {
        throw ConfigError("bounds: cost model requires m >= n >= 2");
    }
    const double n = inputs.n;
    const double m = inputs.m;
    const double rho_sq = inputs.rho_norm * inputs.rho_norm;
    const double eps_sq = inputs.epsilon * inputs.epsilon;
    const double log_n = std::log(std::max(2.0, n));
    BoundReport report;
    report.valid = true;

    switch (regime) {
        case CostRegime::Invertible: {
            report.name = "cost_invertible";
            if (!std::isfinite(inputs.k_q_estimate)) {
                report.valid = false;
                report.hypothesis_notes = "needs a K_q estimate (measured or bounded)";
                return report;
            }
            report.value = m * m * m * n * n * n * log_n * inputs.k_q_estimate * rho_sq / eps_sq;
            return report;
        }
        case CostRegime::Thresholded: {
            report.name = "cost_thresholded";
            if (!(inputs.sigma > 0.0)) {
                report.valid = false;
                report.hypothesis_notes = "needs sigma > 0";
                return report;
            }
            if (!(inputs.accept_prob > 0.0 && inputs.accept_prob <= 1.0)) {
                report.valid = false;
                report.hypothesis_notes = "needs an acceptance probability in (0, 1]";
                return report;
            }
            const double accept_power = 1.0 + (std::isinf(inputs.p) ? 0.0 : 2.0 / inputs.p);
            report.value = n * n * n * m * m * m * log_n *
                           std::pow(inputs.accept_prob, -accept_power) / inputs.sigma * rho_sq /
                           eps_sq;
            return report;
        }
        case CostRegime::Wishart: {
            report.name = "cost_wishart";
            const double k = static_cast<double>(inputs.k());
            if (!(k > 2.0)) {
                report.valid = false;
                report.hypothesis_notes = "requires m >= n + 2";
                return report;
            }
            report.value = n * n * n * m * m * m * m * log_n / ((k) * (k - 2.0)) * rho_sq / eps_sq;
            const auto optimal = optimal_wishart_parameters(inputs.n);
            if (inputs.m == optimal.m_star) {
                const double asymptotic = std::pow(n, 5.0) * log_n * rho_sq / eps_sq;
                report.hypothesis_notes =
                    "m = m*; asymptotic form n^5 log n ||rho||^2 / eps^2 = " +
                    std::to_string(asymptotic);
            }
            return report;
        }
        case CostRegime::Subgaussian: {
            report.name = "cost_subgaussian";
            if (!std::isinf(inputs.p)) {
                report.valid = false;
                report.hypothesis_notes = "developed for p = inf (bounded residue)";
                return report;
            }
            const auto plan = subgaussian_plan(inputs.n, inputs.m, inputs.subg_A, inputs.subg_B);
            if (!(plan.gamma > 1.0)) {
                report.valid = false;
                report.hypothesis_notes = "requires gamma = k/2 > 1, i.e. m >= n + 2";
                return report;
            }
            const double sigma = inputs.sigma > plan.sigma0 ? inputs.sigma : plan.sigma0;
            const double ds_pow = std::pow(plan.delta * sigma, plan.gamma);
            if (!(ds_pow < 1.0)) {
                report.valid = false;
                report.hypothesis_notes = "requires sigma < 1/delta";
                return report;
            }
            const double conditional_moment =
                plan.delta / (1.0 - ds_pow) *
                (1.0 / (1.0 - 1.0 / plan.gamma) +
                 std::pow(plan.delta * sigma, plan.gamma - 1.0) / (1.0 - plan.gamma));
            report.value = n * n * n * log_n * m * m * m / (1.0 - ds_pow) * conditional_moment *
                           rho_sq / eps_sq;
            return report;
        }
    }
    report.valid = false;
    return report;
}

}  // namespace sublsq::bounds
