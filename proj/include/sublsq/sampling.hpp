#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <functional>
#include <numbers>
#include <variant>
#include <vector>

#include "sublsq/rng.hpp"
#include "sublsq/types.hpp"

namespace sublsq {

struct SamplingMeasure;

/// Named 1-D law for product measures and additive noise.
struct ScalarLaw {
    enum class Kind { Gaussian, Uniform, Rademacher, Cauchy };
    Kind kind = Kind::Gaussian;
    double lo = -1.0;  // Uniform support
    double hi = 1.0;

    static ScalarLaw gaussian() { return {Kind::Gaussian, 0, 0}; }
    static ScalarLaw uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
    static ScalarLaw rademacher() { return {Kind::Rademacher, 0, 0}; }
    static ScalarLaw cauchy() { return {Kind::Cauchy, 0, 0}; }

    double sample(rng::Stream& stream) const {
        switch (kind) {
            case Kind::Gaussian: return stream.next_normal();
            case Kind::Uniform: return stream.next_uniform(lo, hi);
            case Kind::Rademacher: return stream.next_below(2) ? 1.0 : -1.0;
            case Kind::Cauchy: return stream.next_cauchy();
        }
        return 0.0;
    }

    bool heavy_tailed() const { return kind == Kind::Cauchy; }

    /// Scale R such that P(|X| > t) <= 2 exp(-t^2/R^2), when one exists.
    double subgaussian_scale() const {
        constexpr double inv_sqrt_ln2 = 1.2011224087864498;  // 1/sqrt(ln 2)
        switch (kind) {
            case Kind::Gaussian: return std::numbers::sqrt2;
            case Kind::Uniform: return std::max(std::abs(lo), std::abs(hi)) * inv_sqrt_ln2;
            case Kind::Rademacher: return inv_sqrt_ln2;
            case Kind::Cauchy: return std::numeric_limits<double>::quiet_NaN();
        }
        return std::numeric_limits<double>::quiet_NaN();
    }
};

/// Uniform law over M stored points, drawn with or without replacement.
struct DiscreteUniform {
    std::vector<Point> points;
    bool with_replacement = true;
};

/// Standard n-dimensional Gaussian.
struct GaussianStandard {
    int dim = 1;
};

/// Product measure with i.i.d. scalar coordinates; `h` is the coordinate map
/// applied by the associated basis (identity when absent). `h_bound`, when
/// set, declares sup|h| over the law's support and certifies sub-Gaussianity.
struct ProductScalar {
    int dim = 1;
    ScalarLaw law;
    std::function<double(double)> h;  // nullptr means identity
    double h_bound = std::numeric_limits<double>::quiet_NaN();
};

/// Base measure augmented with one additive-noise coordinate per point,
/// realizing targets of the form f(x, w') = h(x) + X(w').
struct NoisyLinear {
    std::shared_ptr<const SamplingMeasure> base;
    ScalarLaw noise;
};

struct SamplingMeasure {
    std::variant<DiscreteUniform, GaussianStandard, ProductScalar, NoisyLinear> law;

    bool is_discrete() const { return std::holds_alternative<DiscreteUniform>(law); }

    const DiscreteUniform& discrete() const {
        if (!is_discrete()) throw ConfigError("sampling: operation requires a discrete measure");
        return std::get<DiscreteUniform>(law);
    }

    /// Dimension of the points this measure produces.
    int point_dim() const;
};

inline SamplingMeasure make_discrete_uniform(std::vector<Point> points, bool with_replacement = true) {
    if (points.empty()) throw ConfigError("sampling: discrete measure needs at least one point");
    return SamplingMeasure{DiscreteUniform{std::move(points), with_replacement}};
}

inline SamplingMeasure make_gaussian_standard(int dim) {
    if (dim < 1) throw ConfigError("sampling: Gaussian measure dimension must be >= 1");
    return SamplingMeasure{GaussianStandard{dim}};
}

inline SamplingMeasure make_product_scalar(int dim, ScalarLaw law,
                                           std::function<double(double)> h = nullptr,
                                           double h_bound = std::numeric_limits<double>::quiet_NaN()) {
    if (dim < 1) throw ConfigError("sampling: product measure dimension must be >= 1");
    return SamplingMeasure{ProductScalar{dim, law, std::move(h), h_bound}};
}

inline SamplingMeasure make_noisy_linear(SamplingMeasure base, ScalarLaw noise) {
    auto shared = std::make_shared<SamplingMeasure>(std::move(base));
    return SamplingMeasure{NoisyLinear{std::move(shared), noise}};
}

inline int SamplingMeasure::point_dim() const {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DiscreteUniform>) {
                return static_cast<int>(m.points.front().size());
            } else if constexpr (std::is_same_v<T, GaussianStandard>) {
                return m.dim;
            } else if constexpr (std::is_same_v<T, ProductScalar>) {
                return m.dim;
            } else {
                return m.base->point_dim() + 1;
            }
        },
        law);
}

namespace detail {

/// Floyd's algorithm: uniform m-subset of {0,...,M-1} without replacement.
/// Deterministic insertion order for a given stream.
inline void sample_without_replacement(std::uint64_t population, std::uint64_t m,
                                       rng::Stream& stream, std::vector<std::uint64_t>& out) {
    out.clear();
    for (std::uint64_t i = population - m; i < population; ++i) {
        const std::uint64_t j = stream.next_below(i + 1);
        bool already = false;
        for (std::uint64_t chosen : out) {
            if (chosen == j) { already = true; break; }
        }
        out.push_back(already ? i : j);
    }
}

inline void draw_points_impl(const SamplingMeasure& measure, int m, rng::Stream& stream,
                             std::vector<Point>& out) {
    std::visit(
        [&](const auto& law) {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, DiscreteUniform>) {
                const auto population = static_cast<std::uint64_t>(law.points.size());
                if (law.with_replacement) {
                    for (int i = 0; i < m; ++i) {
                        out[static_cast<std::size_t>(i)] = law.points[stream.next_below(population)];
                    }
                } else {
                    if (static_cast<std::uint64_t>(m) > population) {
                        throw ConfigError("sampling: without-replacement draw larger than the grid");
                    }
                    std::vector<std::uint64_t> picks;
                    picks.reserve(static_cast<std::size_t>(m));
                    sample_without_replacement(population, static_cast<std::uint64_t>(m), stream, picks);
                    for (int i = 0; i < m; ++i) {
                        out[static_cast<std::size_t>(i)] = law.points[picks[static_cast<std::size_t>(i)]];
                    }
                }
            } else if constexpr (std::is_same_v<T, GaussianStandard>) {
                for (int i = 0; i < m; ++i) {
                    Point& p = out[static_cast<std::size_t>(i)];
                    p.resize(law.dim);
                    for (int d = 0; d < law.dim; ++d) p[d] = stream.next_normal();
                }
            } else if constexpr (std::is_same_v<T, ProductScalar>) {
                for (int i = 0; i < m; ++i) {
                    Point& p = out[static_cast<std::size_t>(i)];
                    p.resize(law.dim);
                    for (int d = 0; d < law.dim; ++d) p[d] = law.law.sample(stream);
                }
            } else {  // NoisyLinear
                const int base_dim = law.base->point_dim();
                std::vector<Point> base_points(static_cast<std::size_t>(m));
                draw_points_impl(*law.base, m, stream, base_points);
                for (int i = 0; i < m; ++i) {
                    Point& p = out[static_cast<std::size_t>(i)];
                    p.resize(base_dim + 1);
                    p.head(base_dim) = base_points[static_cast<std::size_t>(i)];
                    p[base_dim] = law.noise.sample(stream);
                }
            }
        },
        measure.law);
}

}  // namespace detail

/// Draws m i.i.d. points under the measure. The result is a pure function of
/// (measure, m, seed): identical across runs, platforms, and thread counts.
inline void draw_points(const SamplingMeasure& measure, int m, rng::DrawSeed seed,
                        std::vector<Point>& out) {
    if (m < 1) throw ConfigError("sampling: draw size must be >= 1");
    out.resize(static_cast<std::size_t>(m));
    rng::Stream stream(seed);
    detail::draw_points_impl(measure, m, stream, out);
}

inline std::vector<Point> draw_points(const SamplingMeasure& measure, int m, rng::DrawSeed seed) {
    std::vector<Point> out;
    draw_points(measure, m, seed, out);
    return out;
}

/// Verdict of the sub-Gaussian tail check P(|entry| > t) <= 2 exp(-t^2/R^2).
struct SubgaussianInfo {
    bool subgaussian = false;
    /// Tail scale R; NaN when sub-Gaussianity holds but the scale needs a
    /// basis bound the measure alone cannot know (finite grids).
    double scale = std::numeric_limits<double>::quiet_NaN();
};

inline SubgaussianInfo is_subgaussian(const SamplingMeasure& measure) {
    constexpr double inv_sqrt_ln2 = 1.2011224087864498;
    return std::visit(
        [&](const auto& law) -> SubgaussianInfo {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, DiscreteUniform>) {
                // Entries over a finite grid are bounded for any basis; the
                // scale depends on the basis bound (see the Problem overload).
                return {true, std::numeric_limits<double>::quiet_NaN()};
            } else if constexpr (std::is_same_v<T, GaussianStandard>) {
                return {true, std::numbers::sqrt2};
            } else if constexpr (std::is_same_v<T, ProductScalar>) {
                if (law.h) {
                    if (std::isfinite(law.h_bound)) return {true, law.h_bound * inv_sqrt_ln2};
                    return {false, std::numeric_limits<double>::quiet_NaN()};
                }
                if (law.law.heavy_tailed()) return {false, std::numeric_limits<double>::quiet_NaN()};
                return {true, law.law.subgaussian_scale()};
            } else {  // NoisyLinear: basis entries come from the base measure
                return is_subgaussian(*law.base);
            }
        },
        measure.law);
}

}  // namespace sublsq
