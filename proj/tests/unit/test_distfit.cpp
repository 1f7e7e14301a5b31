#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "sublsq/distfit.hpp"
#include "sublsq/estimator.hpp"
#include "sublsq/rng.hpp"

using namespace sublsq;
using namespace sublsq::dist;

namespace {

SampleSet cauchy_sample(double location, double scale, long count, std::uint64_t seed) {
    SampleSet set;
    set.values.resize(static_cast<std::size_t>(count));
    rng::Stream stream(seed, 0);
    for (long i = 0; i < count; ++i) {
        set.values[static_cast<std::size_t>(i)] = location + scale * stream.next_cauchy();
    }
    return set;
}

SampleSet gaussian_sample(double location, double scale, long count, std::uint64_t seed) {
    SampleSet set;
    set.values.resize(static_cast<std::size_t>(count));
    rng::Stream stream(seed, 0);
    for (long i = 0; i < count; ++i) {
        set.values[static_cast<std::size_t>(i)] = location + scale * stream.next_normal();
    }
    return set;
}

}  // namespace

TEST_CASE("Cauchy MLE recovers synthetic parameters", "[dist]") {
    auto set = cauchy_sample(0.0, 1.0, 1000000, 31);
    auto fit = fit_cauchy(set);
    REQUIRE(fit.converged);
    REQUIRE(fit.location == Catch::Approx(0.0).margin(0.01));
    REQUIRE(fit.scale == Catch::Approx(1.0).margin(0.01));

    auto shifted = cauchy_sample(-0.78, 0.2, 200000, 57);
    auto shifted_fit = fit_cauchy(shifted);
    REQUIRE(shifted_fit.converged);
    REQUIRE(shifted_fit.location == Catch::Approx(-0.78).margin(0.01));
    REQUIRE(shifted_fit.scale == Catch::Approx(0.2).margin(0.01));
}

TEST_CASE("symmetric two-point samples center at zero", "[dist]") {
    SampleSet set;
    for (int i = 0; i < 50; ++i) {
        set.values.push_back(1.7);
        set.values.push_back(-1.7);
    }
    auto fit = fit_cauchy(set);
    REQUIRE(std::abs(fit.location) <= 1e-8);
}

TEST_CASE("degenerate samples raise a zero-scale error", "[dist]") {
    SampleSet constant;
    constant.values.assign(64, 3.25);
    REQUIRE_THROWS_AS(fit_cauchy(constant), FitError);
    REQUIRE_THROWS_AS(fit_gaussian(constant), FitError);
}

TEST_CASE("Gaussian MLE on two points and on synthetic draws", "[dist]") {
    SampleSet two;
    two.values = {0.0, 2.0};
    auto fit = fit_gaussian(two);
    REQUIRE(fit.location == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(fit.scale == Catch::Approx(1.0).margin(1e-14));

    auto set = gaussian_sample(0.0, 1.0, 1000000, 93);
    auto big = fit_gaussian(set);
    REQUIRE(big.location == Catch::Approx(0.0).margin(0.01));
    REQUIRE(big.scale == Catch::Approx(1.0).margin(0.01));
    REQUIRE(big.ks_statistic < 0.005);
}

TEST_CASE("each family wins its own likelihood contest", "[dist]") {
    auto heavy = cauchy_sample(0.0, 1.0, 100000, 11);
    REQUIRE(fit_cauchy(heavy).log_likelihood > fit_gaussian(heavy).log_likelihood);

    auto light = gaussian_sample(0.0, 1.0, 100000, 12);
    REQUIRE(fit_gaussian(light).log_likelihood > fit_cauchy(light).log_likelihood);
    REQUIRE(fit_gaussian(light).ks_statistic < fit_cauchy(light).ks_statistic);
}

TEST_CASE("running averages are prefix means", "[dist]") {
    std::vector<double> constant(10, 4.5);
    auto flat = running_average(constant, {1, 5, 10});
    for (const auto& [count, mean] : flat) REQUIRE(mean == 4.5);

    std::vector<double> alternating;
    for (int i = 0; i < 8; ++i) alternating.push_back(i % 2 == 0 ? 1.0 : -1.0);
    auto series = running_average(alternating, {1, 2, 3, 4});
    REQUIRE(series[0].second == 1.0);
    REQUIRE(series[1].second == 0.0);
    REQUIRE(series[2].second == Catch::Approx(1.0 / 3.0).margin(1e-15));
    REQUIRE(series[3].second == 0.0);

    REQUIRE_THROWS_AS(running_average(constant, {5, 5}), ConfigError);
    REQUIRE_THROWS_AS(running_average(constant, {11}), ConfigError);
}

TEST_CASE("Hill estimator pins a Pareto tail", "[dist]") {
    std::vector<double> pareto(100000);
    rng::Stream stream(2029, 0);
    for (auto& value : pareto) value = 1.0 / stream.next_unit();  // alpha = 1
    auto estimate = tail_exponent(pareto, 1000);
    REQUIRE(estimate.alpha == Catch::Approx(1.0).margin(0.1));
    REQUIRE(estimate.ci_low <= estimate.alpha);
    REQUIRE(estimate.ci_high >= estimate.alpha);
}

TEST_CASE("Gaussian samples report an effectively light tail", "[dist]") {
    auto set = gaussian_sample(0.0, 1.0, 100000, 5);
    auto estimate = tail_exponent(set.values, 50);
    REQUIRE(estimate.alpha > 3.0);
}

TEST_CASE("Hill estimator validates its order-statistic budget", "[dist]") {
    std::vector<double> tiny(10, 1.0);
    REQUIRE_THROWS_AS(tail_exponent(tiny, 5), ConfigError);
    REQUIRE_THROWS_AS(tail_exponent(tiny, 0), ConfigError);
}

TEST_CASE("histograms conserve mass", "[dist]") {
    std::vector<double> single = {0.2, 0.7};
    auto one = histogram(single, 1);
    REQUIRE(one.density[0] == Catch::Approx(1.0 / 0.5).epsilon(1e-12));

    std::vector<double> uniform(1000000);
    rng::Stream stream(31337, 0);
    for (auto& value : uniform) value = stream.next_unit();
    auto ten = histogram(uniform, 10, std::pair{0.0, 1.0});
    double mass = 0.0;
    for (std::size_t b = 0; b < ten.density.size(); ++b) {
        REQUIRE(ten.density[b] == Catch::Approx(1.0).margin(0.02));
        mass += ten.density[b] * (ten.edges[b + 1] - ten.edges[b]);
    }
    REQUIRE(mass == Catch::Approx(1.0).margin(1e-12));

    REQUIRE_THROWS_AS(histogram(single, 0), ConfigError);
    REQUIRE_THROWS_AS(histogram(single, 4, std::pair{1.0, 1.0}), ConfigError);
    std::vector<double> constant(5, 2.0);
    REQUIRE_THROWS_AS(histogram(constant, 3), ConfigError);
}

TEST_CASE("fits are affine equivariant", "[dist]") {
    const double a = -2.5, b = 0.75;
    auto base = cauchy_sample(0.1, 0.8, 50000, 41);
    auto transformed = base;
    for (auto& value : transformed.values) value = a * value + b;

    auto cauchy0 = fit_cauchy(base);
    auto cauchy1 = fit_cauchy(transformed);
    REQUIRE(cauchy1.location == Catch::Approx(a * cauchy0.location + b).epsilon(1e-8));
    REQUIRE(cauchy1.scale == Catch::Approx(std::abs(a) * cauchy0.scale).epsilon(1e-8));

    auto gauss0 = fit_gaussian(base);
    auto gauss1 = fit_gaussian(transformed);
    REQUIRE(gauss1.location == Catch::Approx(a * gauss0.location + b).epsilon(1e-8));
    REQUIRE(gauss1.scale == Catch::Approx(std::abs(a) * gauss0.scale).epsilon(1e-8));
}

TEST_CASE("Cauchy fits ignore sample order", "[dist]") {
    auto base = cauchy_sample(0.4, 1.3, 20000, 77);
    auto reversed = base;
    std::reverse(reversed.values.begin(), reversed.values.end());
    auto fit0 = fit_cauchy(base);
    auto fit1 = fit_cauchy(reversed);
    REQUIRE(fit0.location == Catch::Approx(fit1.location).margin(1e-12));
    REQUIRE(fit0.scale == Catch::Approx(fit1.scale).margin(1e-12));
}

TEST_CASE("skewness of symmetric samples is near zero", "[dist]") {
    auto set = gaussian_sample(3.0, 2.0, 200000, 8);
    REQUIRE(std::abs(sample_skewness(set.values)) < 0.02);
}

TEST_CASE("square-system running averages keep jumping, padded ones settle", "[dist]") {
    auto problem = make_gaussian_linear_problem(2, [](const Point& x) {
        return 0.6 * x[0] - x[1] + 0.3 * std::sin(x[0]);
    });
    auto late_steps = [&](int m) {
        EstimatorConfig config;
        config.m = m;
        config.n_draws = 30000;
        config.seed = 2026;
        config.k_q_orders.clear();
        config.threads = 1;
        auto result = run_estimator(problem, config);
        const auto& series = result.running_average;
        double max_step = 0.0;
        for (std::size_t i = series.size() / 2; i + 1 < series.size(); ++i) {
            max_step = std::max(max_step,
                                std::abs(series[i + 1].second(0) - series[i].second(0)));
        }
        return max_step;
    };
    const double square = late_steps(2);
    const double padded = late_steps(10);
    REQUIRE(square > 10.0 * padded);
}
