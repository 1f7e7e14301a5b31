#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sublsq/rng.hpp"
#include "sublsq/types.hpp"

namespace sublsq::dist {

/// One coordinate of the retained solutions of a run, plus the run labels
/// the diagnostics report alongside the fit.
struct SampleSet {
    std::vector<double> values;
    int coordinate_index = 0;
    int m = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

struct FitResult {
    enum class Family { Cauchy, Gaussian };
    Family family = Family::Gaussian;
    double location = 0.0;
    double scale = 0.0;
    double log_likelihood = 0.0;
    double ks_statistic = 0.0;
    bool converged = true;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
    const double idx = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(idx));
    const auto hi = static_cast<std::size_t>(std::ceil(idx));
    const double frac = idx - std::floor(idx);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline double ks_statistic_sorted(const std::vector<double>& sorted,
                                  const std::function<double(double)>& cdf) {
    const double count = static_cast<double>(sorted.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double fitted = cdf(sorted[i]);
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / count - fitted));
        ks = std::max(ks, std::abs(static_cast<double>(i) / count - fitted));
    }
    return ks;
}

struct CauchyDerivatives {
    double log_likelihood;
    double grad_location;
    double grad_scale;
    double h_ll;  // Hessian entries
    double h_ls;
    double h_ss;
};

inline CauchyDerivatives cauchy_derivatives(const std::vector<double>& values, double location,
                                            double scale) {
    CauchyDerivatives d{0, 0, 0, 0, 0, 0};
    const double log_pi_s = std::log(std::numbers::pi * scale);
    for (double x : values) {
        const double z = (x - location) / scale;
        const double w = 1.0 + z * z;
        d.log_likelihood += -log_pi_s - std::log(w);
        d.grad_location += 2.0 * z / (scale * w);
        d.grad_scale += (2.0 * z * z / w - 1.0) / scale;
        d.h_ll += 2.0 * (z * z - 1.0) / (scale * scale * w * w);
        d.h_ls += -4.0 * z / (scale * scale * w * w);
        d.h_ss += -(z * z * z * z + 4.0 * z * z - 1.0) / (scale * scale * w * w);
    }
    return d;
}

}  // namespace detail

/// Maximum-likelihood Cauchy fit by damped Newton iterations, started at
/// (median, half interquartile range). The Cauchy likelihood can be
/// multimodal; the initializer sits in the dominant basin for unimodal data.
/// After 200 iterations without meeting the gradient tolerance the
/// initializer is returned with converged = false.
inline FitResult fit_cauchy(const SampleSet& samples) {
    const auto& values = samples.values;
    if (values.size() < 10) throw ConfigError("distfit: Cauchy fit needs at least 10 samples");

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw FitError("distfit: degenerate sample (all values equal), scale would be zero");
    }
    const double init_location = detail::quantile_sorted(sorted, 0.5);
    double init_scale =
        0.5 * (detail::quantile_sorted(sorted, 0.75) - detail::quantile_sorted(sorted, 0.25));
    if (!(init_scale > 0.0)) init_scale = 0.25 * (sorted.back() - sorted.front());

    const double count = static_cast<double>(values.size());
    double location = init_location;
    double scale = init_scale;
    auto d = detail::cauchy_derivatives(values, location, scale);
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        if (std::hypot(d.grad_location, d.grad_scale) / count < 1e-10) {
            converged = true;
            break;
        }
        // Newton step on the 2x2 system; fall back to a Fisher-scaled
        // gradient step when the Hessian is not negative definite.
        double step_l, step_s;
        const double det = d.h_ll * d.h_ss - d.h_ls * d.h_ls;
        if (d.h_ll < 0.0 && det > 0.0) {
            step_l = -(d.h_ss * d.grad_location - d.h_ls * d.grad_scale) / det;
            step_s = -(-d.h_ls * d.grad_location + d.h_ll * d.grad_scale) / det;
        } else {
            const double fisher = count / (2.0 * scale * scale);
            step_l = d.grad_location / fisher;
            step_s = d.grad_scale / fisher;
        }
        double damping = 1.0;
        for (int halvings = 0; halvings < 40; ++halvings) {
            const double trial_location = location + damping * step_l;
            const double trial_scale = scale + damping * step_s;
            if (trial_scale > 0.0) {
                const auto trial = detail::cauchy_derivatives(values, trial_location, trial_scale);
                if (trial.log_likelihood >= d.log_likelihood) {
                    location = trial_location;
                    scale = trial_scale;
                    d = trial;
                    break;
                }
            }
            damping *= 0.5;
        }
    }
    if (!converged && std::hypot(d.grad_location, d.grad_scale) / count < 1e-10) converged = true;

    FitResult fit;
    fit.family = FitResult::Family::Cauchy;
    fit.converged = converged;
    if (!converged) {
        location = init_location;
        scale = init_scale;
        d = detail::cauchy_derivatives(values, location, scale);
    }
    fit.location = location;
    fit.scale = scale;
    fit.log_likelihood = d.log_likelihood;
    fit.ks_statistic = detail::ks_statistic_sorted(sorted, [&](double x) {
        return 0.5 + std::atan((x - location) / scale) / std::numbers::pi;
    });
    return fit;
}

/// Gaussian maximum-likelihood fit (mean and population standard deviation).
inline FitResult fit_gaussian(const SampleSet& samples) {
    const auto& values = samples.values;
    if (values.size() < 2) throw ConfigError("distfit: Gaussian fit needs at least 2 samples");
    const double count = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
    double ss = 0.0;
    for (double x : values) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / count);
    if (!(sd > 0.0)) {
        throw FitError("distfit: degenerate sample (all values equal), scale would be zero");
    }

    FitResult fit;
    fit.family = FitResult::Family::Gaussian;
    fit.location = mean;
    fit.scale = sd;
    fit.log_likelihood =
        -0.5 * count * std::log(2.0 * std::numbers::pi) - count * std::log(sd) - 0.5 * count;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    fit.ks_statistic = detail::ks_statistic_sorted(sorted, [&](double x) {
        return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
    });
    return fit;
}

/// Prefix means of the sample sequence at the requested checkpoints
/// (1-based, strictly increasing).
inline std::vector<std::pair<long long, double>> running_average(
    const std::vector<double>& samples, const std::vector<long long>& checkpoints) {
    std::vector<std::pair<long long, double>> series;
    series.reserve(checkpoints.size());
    double sum = 0.0;
    long long position = 0;
    for (long long checkpoint : checkpoints) {
        if (checkpoint <= position || checkpoint > static_cast<long long>(samples.size())) {
            throw ConfigError("distfit: checkpoints must be increasing and within the sample size");
        }
        while (position < checkpoint) {
            sum += samples[static_cast<std::size_t>(position)];
            ++position;
        }
        series.emplace_back(checkpoint, sum / static_cast<double>(checkpoint));
    }
    return series;
}

struct HillEstimate {
    double alpha = 0.0;  // tail exponent; small values mean heavy tails
    double ci_low = 0.0;
    double ci_high = 0.0;
    int k_top = 0;
};

namespace detail {

inline double hill_alpha(std::vector<double>& abs_values, int k_top) {
    // Partial sort so the k_top+1 largest magnitudes lead.
    std::nth_element(abs_values.begin(), abs_values.begin() + k_top, abs_values.end(),
                     std::greater<double>());
    const double baseline = abs_values[static_cast<std::size_t>(k_top)];
    if (!(baseline > 0.0)) {
        throw FitError("distfit: Hill estimator needs positive order statistics");
    }
    double acc = 0.0;
    for (int i = 0; i < k_top; ++i) {
        acc += std::log(abs_values[static_cast<std::size_t>(i)] / baseline);
    }
    return static_cast<double>(k_top) / acc;
}

}  // namespace detail

/// Hill tail-exponent estimate on the k_top largest magnitudes, with a
/// percentile bootstrap confidence interval.
inline HillEstimate tail_exponent(const std::vector<double>& samples, int k_top,
                                  int bootstrap_rounds = 200, std::uint64_t seed = 0) {
    if (k_top < 1 || static_cast<std::size_t>(k_top) >= samples.size() / 2) {
        throw ConfigError("distfit: k_top must lie in [1, sample size / 2)");
    }
    std::vector<double> magnitudes(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) magnitudes[i] = std::abs(samples[i]);

    HillEstimate estimate;
    estimate.k_top = k_top;
    {
        std::vector<double> work = magnitudes;
        estimate.alpha = detail::hill_alpha(work, k_top);
    }

    std::vector<double> resampled;
    std::vector<double> work(samples.size());
    rng::Stream stream(seed, 0xB00757ull);
    resampled.reserve(static_cast<std::size_t>(bootstrap_rounds));
    for (int round = 0; round < bootstrap_rounds; ++round) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            work[i] = magnitudes[stream.next_below(samples.size())];
        }
        resampled.push_back(detail::hill_alpha(work, k_top));
    }
    std::sort(resampled.begin(), resampled.end());
    estimate.ci_low = detail::quantile_sorted(resampled, 0.025);
    estimate.ci_high = detail::quantile_sorted(resampled, 0.975);
    return estimate;
}

struct Histogram {
    std::vector<double> edges;    // bins + 1 entries
    std::vector<double> density;  // normalized: sum(density * width) = 1
    long long in_range = 0;
};

/// Equal-width histogram normalized to unit mass over the binned range.
inline Histogram histogram(const std::vector<double>& samples, int bins,
                           std::optional<std::pair<double, double>> range = std::nullopt) {
    if (bins < 1) throw ConfigError("distfit: histogram needs at least one bin");
    if (samples.empty()) throw ConfigError("distfit: histogram needs samples");
    double lo, hi;
    if (range) {
        lo = range->first;
        hi = range->second;
    } else {
        lo = *std::min_element(samples.begin(), samples.end());
        hi = *std::max_element(samples.begin(), samples.end());
    }
    if (!(hi > lo)) throw ConfigError("distfit: histogram range is empty");

    Histogram hist;
    hist.edges.resize(static_cast<std::size_t>(bins) + 1);
    const double width = (hi - lo) / bins;
    for (int b = 0; b <= bins; ++b) hist.edges[static_cast<std::size_t>(b)] = lo + width * b;
    std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
    for (double x : samples) {
        if (x < lo || x > hi) continue;
        auto bin = static_cast<long long>((x - lo) / width);
        bin = std::clamp<long long>(bin, 0, bins - 1);
        ++counts[static_cast<std::size_t>(bin)];
        ++hist.in_range;
    }
    if (hist.in_range == 0) throw ConfigError("distfit: no samples inside the histogram range");
    hist.density.resize(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        hist.density[static_cast<std::size_t>(b)] =
            static_cast<double>(counts[static_cast<std::size_t>(b)]) /
            (static_cast<double>(hist.in_range) * width);
    }
    return hist;
}

inline double sample_skewness(const std::vector<double>& values) {
    if (values.size() < 3) throw ConfigError("distfit: skewness needs at least 3 samples");
    const double count = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
    double m2 = 0.0, m3 = 0.0;
    for (double x : values) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= count;
    m3 /= count;
    return m3 / std::pow(m2, 1.5);
}

}  // namespace sublsq::dist
