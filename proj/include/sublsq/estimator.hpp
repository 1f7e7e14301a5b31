#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <numbers>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sublsq/problem.hpp"
#include "sublsq/solver.hpp"

namespace sublsq {

/// Complementary standard-normal CDF.
inline double normal_upper_tail(double x) {
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Solves (2*pi)^{-1/2} * integral_x^inf exp(-u^2/2) du = eta / (2n) for x,
/// by bisection plus Newton polish; the tail equation is met to 1e-12.
inline double gaussian_tail_quantile(int n, double eta) {
    if (n < 1) throw ConfigError("estimator: quantile needs n >= 1");
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("estimator: confidence level must lie in (0, 1]");
    const double tail = eta / (2.0 * static_cast<double>(n));
    if (tail >= 0.5) return 0.0;

    double lo = 0.0, hi = 45.0;
    for (int i = 0; i < 90 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        (normal_upper_tail(mid) > tail ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 4; ++i) {
        const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        if (density <= 0.0) break;
        x -= (tail - normal_upper_tail(x)) / density;
    }
    return x;
}

struct EstimatorConfig {
    int m = 0;                    // rows per draw
    long long n_draws = 0;        // accepted-draw target N
    double sigma = 0.0;           // threshold on the smallest Gram eigenvalue
    double eta = 0.05;            // confidence level for the reported region
    std::uint64_t seed = 0;
    long long max_attempts = 0;   // 0 -> 1000 * N

    enum class Retain { None, All, Reservoir };
    Retain retain = Retain::None;
    int reservoir_size = 0;

    std::vector<double> k_q_orders = {1.0, 2.0};
    int running_checkpoints = 200;
    int threads = 0;              // 0 -> SUBLSQ_THREADS env, else hardware

    long long effective_max_attempts() const {
        return max_attempts > 0 ? max_attempts : 1000 * n_draws;
    }
};

struct KqEstimate {
    double q = 0.0;
    double value = 0.0;
    double standard_error = 0.0;  // jackknife
    bool sigma_bound_ok = true;   // value <= 1/sigma whenever sigma > 0
};

struct RunResult {
    Vector beta_bar;
    Matrix cov;                   // sample covariance of accepted solutions
    double trace_cov = 0.0;
    Vector conf_halfwidths;
    double conf_diameter = 0.0;
    double eta = 0.0;
    double sigma = 0.0;
    long long attempted = 0;
    long long accepted = 0;
    double acceptance_rate = 0.0;
    std::vector<KqEstimate> k_q;
    std::vector<std::pair<long long, Vector>> running_average;  // (accepted count, prefix mean)
    std::vector<Vector> samples;          // retained accepted solutions
    std::vector<double> accepted_s1;      // smallest Gram eigenvalue per accepted draw
};

struct ConfidenceRegion {
    Vector lower;
    Vector upper;
    Vector halfwidths;
    double diameter = 0.0;
    double quantile = 0.0;
};

/// Per-coordinate intervals centered at the Monte Carlo mean, with the
/// Euclidean diameter bound 2 x(n,eta) sqrt(Tr(Cov)/N).
inline ConfidenceRegion confidence_region(const RunResult& result, double eta) {
    if (result.accepted < 2) throw ConfigError("estimator: confidence region needs at least 2 draws");
    const int n = static_cast<int>(result.beta_bar.size());
    ConfidenceRegion region;
    region.quantile = gaussian_tail_quantile(n, eta);
    const double draws = static_cast<double>(result.accepted);
    region.halfwidths =
        (result.cov.diagonal().cwiseMax(0.0) / draws).cwiseSqrt() * region.quantile;
    region.lower = result.beta_bar - region.halfwidths;
    region.upper = result.beta_bar + region.halfwidths;
    region.diameter = 2.0 * region.quantile * std::sqrt(std::max(0.0, result.trace_cov) / draws);
    return region;
}

/// Empirical negative-moment functional (mean of s1^{-q/2})^{2/q} over a
/// stream of accepted smallest Gram eigenvalues, with a jackknife standard
/// error. When sigma > 0 the trivial ceiling 1/sigma is checked.
inline KqEstimate empirical_k_q(const std::vector<double>& s1_values, double q, double sigma = 0.0) {
    if (!(q >= 1.0)) throw ConfigError("estimator: moment order must satisfy q >= 1");
    if (s1_values.size() < 2) throw ConfigError("estimator: K_q needs at least 2 draws");
    const auto count = static_cast<double>(s1_values.size());
    double sum = 0.0;
    for (double s1 : s1_values) sum += std::pow(s1, -0.5 * q);
    const double mean = sum / count;

    KqEstimate estimate;
    estimate.q = q;
    estimate.value = std::pow(mean, 2.0 / q);

    double loo_sum = 0.0;
    std::vector<double> loo(s1_values.size());
    for (std::size_t i = 0; i < s1_values.size(); ++i) {
        const double loo_mean = (sum - std::pow(s1_values[i], -0.5 * q)) / (count - 1.0);
        loo[i] = std::pow(loo_mean, 2.0 / q);
        loo_sum += loo[i];
    }
    const double loo_bar = loo_sum / count;
    double ss = 0.0;
    for (double v : loo) ss += (v - loo_bar) * (v - loo_bar);
    estimate.standard_error = std::sqrt((count - 1.0) / count * ss);
    if (sigma > 0.0) {
        estimate.sigma_bound_ok = estimate.value <= 1.0 / sigma * (1.0 + 1e-12);
    }
    return estimate;
}

namespace detail {

inline void fill_design(const Problem& problem, const std::vector<Point>& points,
                        Matrix& gamma, Vector& fvec) {
    const int m = static_cast<int>(points.size());
    gamma.resize(m, problem.n);
    fvec.resize(m);
    for (int i = 0; i < m; ++i) {
        const Point& x = points[static_cast<std::size_t>(i)];
        for (int j = 0; j < problem.n; ++j) {
            const double value = problem.basis(x, j);
            if (!std::isfinite(value)) {
                throw EvaluationError("estimator: basis function " + std::to_string(j) +
                                          " not finite at drawn point " + std::to_string(i),
                                      j);
            }
            gamma(i, j) = value;
        }
        const double value = problem.target(x);
        if (!std::isfinite(value)) {
            throw EvaluationError("estimator: target not finite at drawn point " + std::to_string(i), -1);
        }
        fvec(i) = value;
    }
}

/// Draw + factor + threshold gate for a single attempt index. Owns all
/// scratch storage so repeated calls do not allocate.
class DrawKernel {
public:
    DrawKernel(const Problem& problem, int m, double sigma)
        : problem_(problem), m_(m), sigma_(sigma) {}

    /// True when the draw clears the threshold; beta and s1 are then filled.
    bool run(std::uint64_t master_seed, long long draw_index, Vector& beta, double& s1) {
        draw_points(problem_.measure, m_, rng::DrawSeed{master_seed, static_cast<std::uint64_t>(draw_index)},
                    points_);
        fill_design(problem_, points_, gamma_, fvec_);
        svd_.compute(gamma_, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd_.singularValues();
        const double smin = sv(sv.size() - 1);
        const double smax = sv(0);
        s1 = smin * smin;
        const double threshold = sigma_ > 0.0 ? sigma_ : kWellPosedFloor * smax * smax;
        if (!(s1 > threshold)) return false;
        beta = svd_.solve(fvec_);
        return true;
    }

private:
    const Problem& problem_;
    int m_;
    double sigma_;
    std::vector<Point> points_;
    Matrix gamma_;
    Vector fvec_;
    Eigen::JacobiSVD<Matrix> svd_;
};

inline int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SUBLSQ_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

inline std::vector<long long> checkpoint_indices(long long n_draws, int count) {
    std::vector<long long> indices;
    if (count <= 0) return indices;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 1.0 : static_cast<double>(i) / (count - 1);
        const auto idx = static_cast<long long>(std::llround(std::pow(static_cast<double>(n_draws), t)));
        indices.push_back(std::clamp<long long>(idx, 1, n_draws));
    }
    indices.push_back(n_draws);
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    return indices;
}

/// One block of attempts, stored compactly: flags per attempt, coefficients
/// (flat, n per hit) and eigenvalues for the accepted ones only.
struct DrawBlock {
    std::vector<char> accepted;
    std::vector<double> s1;
    std::vector<double> beta_data;
};

/// Order-preserving accumulator. Welford updates run in ascending
/// draw-index order over accepted draws, so the result is bit-identical no
/// matter how many workers produced the blocks.
class Aggregator {
public:
    Aggregator(const Problem& problem, const EstimatorConfig& config)
        : config_(config),
          n_(problem.n),
          mean_(Vector::Zero(problem.n)),
          m2_(Matrix::Zero(problem.n, problem.n)),
          delta_(problem.n),
          checkpoints_(checkpoint_indices(config.n_draws, config.running_checkpoints)),
          reservoir_stream_(rng::derive_seed(config.seed, 0x7265736572766Ful), 0) {
        if (config.retain == EstimatorConfig::Retain::All) {
            samples_.reserve(static_cast<std::size_t>(config.n_draws));
        } else if (config.retain == EstimatorConfig::Retain::Reservoir) {
            samples_.reserve(static_cast<std::size_t>(config.reservoir_size));
        }
        s1_values_.reserve(static_cast<std::size_t>(config.n_draws));
    }

    /// Returns true when the accepted-draw target has been reached.
    bool add_accepted(const Eigen::Ref<const Vector>& beta, double s1) {
        ++accepted_;
        const double k = static_cast<double>(accepted_);
        delta_ = beta - mean_;
        mean_ += delta_ / k;
        m2_.noalias() += delta_ * (beta - mean_).transpose();
        s1_values_.push_back(s1);
        retain(beta);
        if (next_checkpoint_ < checkpoints_.size() && accepted_ == checkpoints_[next_checkpoint_]) {
            running_.emplace_back(accepted_, mean_);
            ++next_checkpoint_;
        }
        return accepted_ == config_.n_draws;
    }

    void count_attempt() { ++attempted_; }

    RunResult finish() {
        RunResult result;
        result.beta_bar = mean_;
        result.cov = accepted_ > 1
                         ? Matrix(((m2_ + m2_.transpose()) / 2.0) / static_cast<double>(accepted_ - 1))
                         : Matrix(Matrix::Zero(n_, n_));
        result.trace_cov = result.cov.trace();
        result.eta = config_.eta;
        result.sigma = config_.sigma;
        result.attempted = attempted_;
        result.accepted = accepted_;
        result.acceptance_rate =
            attempted_ > 0 ? static_cast<double>(accepted_) / static_cast<double>(attempted_) : 0.0;
        const double quantile = gaussian_tail_quantile(n_, config_.eta);
        result.conf_halfwidths =
            (result.cov.diagonal().cwiseMax(0.0) / static_cast<double>(accepted_)).cwiseSqrt() * quantile;
        result.conf_diameter = 2.0 * quantile *
                               std::sqrt(std::max(0.0, result.trace_cov) / static_cast<double>(accepted_));
        for (double q : config_.k_q_orders) {
            result.k_q.push_back(empirical_k_q(s1_values_, q, config_.sigma));
        }
        result.running_average = std::move(running_);
        result.samples = std::move(samples_);
        result.accepted_s1 = std::move(s1_values_);
        return result;
    }

    long long attempted() const { return attempted_; }
    long long accepted() const { return accepted_; }

private:
    void retain(const Eigen::Ref<const Vector>& beta) {
        switch (config_.retain) {
            case EstimatorConfig::Retain::None:
                break;
            case EstimatorConfig::Retain::All:
                samples_.push_back(beta);
                break;
            case EstimatorConfig::Retain::Reservoir: {
                const auto k = static_cast<std::size_t>(config_.reservoir_size);
                if (samples_.size() < k) {
                    samples_.push_back(beta);
                } else {
                    const std::uint64_t slot =
                        reservoir_stream_.next_below(static_cast<std::uint64_t>(accepted_));
                    if (slot < k) samples_[static_cast<std::size_t>(slot)] = beta;
                }
                break;
            }
        }
    }

    const EstimatorConfig& config_;
    int n_;
    long long attempted_ = 0;
    long long accepted_ = 0;
    Vector mean_;
    Matrix m2_;
    Vector delta_;
    std::vector<double> s1_values_;
    std::vector<Vector> samples_;
    std::vector<long long> checkpoints_;
    std::size_t next_checkpoint_ = 0;
    std::vector<std::pair<long long, Vector>> running_;
    rng::Stream reservoir_stream_;
};

inline void validate_config(const Problem& problem, const EstimatorConfig& config) {
    if (config.m < problem.n) {
        throw DimensionError("estimator: rows per draw must be >= basis count");
    }
    if (config.n_draws < 2) throw ConfigError("estimator: accepted-draw target must be >= 2");
    if (config.effective_max_attempts() < config.n_draws) {
        throw ConfigError("estimator: attempt budget below the accepted-draw target");
    }
    if (config.sigma < 0.0) throw ConfigError("estimator: threshold must be >= 0");
    if (config.retain == EstimatorConfig::Retain::Reservoir && config.reservoir_size < 1) {
        throw ConfigError("estimator: reservoir retention needs a positive size");
    }
    if (problem.measure.is_discrete() && !problem.measure.discrete().with_replacement &&
        static_cast<std::size_t>(config.m) > problem.measure.discrete().points.size()) {
        throw ConfigError("estimator: without-replacement draw larger than the grid");
    }
}

inline RunResult run_estimator_serial(const Problem& problem, const EstimatorConfig& config) {
    Aggregator aggregator(problem, config);
    DrawKernel kernel(problem, config.m, config.sigma);
    Vector beta;
    double s1 = 0.0;
    const long long budget = config.effective_max_attempts();
    for (long long idx = 0; idx < budget; ++idx) {
        aggregator.count_attempt();
        if (kernel.run(config.seed, idx, beta, s1) && aggregator.add_accepted(beta, s1)) {
            return aggregator.finish();
        }
    }
    throw ThresholdError(
        "estimator: threshold too high, only " + std::to_string(aggregator.accepted()) + " of " +
            std::to_string(config.n_draws) + " draws accepted in " + std::to_string(budget) +
            " attempts",
        static_cast<double>(aggregator.accepted()) / static_cast<double>(budget));
}

inline RunResult run_estimator_parallel(const Problem& problem, const EstimatorConfig& config,
                                        int workers) {
    constexpr long long kBlock = 1024;
    const long long budget = config.effective_max_attempts();
    const long long block_count = (budget + kBlock - 1) / kBlock;
    const long long window = 8LL * workers;

    std::mutex mutex;
    std::condition_variable worker_cv, merger_cv;
    std::map<long long, DrawBlock> ready;
    std::atomic<long long> next_block{0};
    long long merge_cursor = 0;
    bool stop = false;
    std::exception_ptr worker_error;

    auto worker = [&]() {
        DrawKernel kernel(problem, config.m, config.sigma);
        Vector beta;
        double s1 = 0.0;
        try {
            for (;;) {
                const long long block = next_block.fetch_add(1);
                if (block >= block_count) return;
                {
                    std::unique_lock lock(mutex);
                    worker_cv.wait(lock, [&] { return stop || block < merge_cursor + window; });
                    if (stop) return;
                }
                const long long begin = block * kBlock;
                const long long end = std::min(begin + kBlock, budget);
                DrawBlock result;
                result.accepted.reserve(static_cast<std::size_t>(end - begin));
                for (long long idx = begin; idx < end; ++idx) {
                    const bool ok = kernel.run(config.seed, idx, beta, s1);
                    result.accepted.push_back(ok ? 1 : 0);
                    if (ok) {
                        result.s1.push_back(s1);
                        result.beta_data.insert(result.beta_data.end(), beta.data(),
                                                beta.data() + beta.size());
                    }
                }
                {
                    std::lock_guard lock(mutex);
                    ready.emplace(block, std::move(result));
                }
                merger_cv.notify_all();
            }
        } catch (...) {
            std::lock_guard lock(mutex);
            if (!worker_error) worker_error = std::current_exception();
            stop = true;
            worker_cv.notify_all();
            merger_cv.notify_all();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);

    Aggregator aggregator(problem, config);
    bool reached_target = false;
    std::exception_ptr merge_error;
    try {
        while (!reached_target && merge_cursor < block_count) {
            DrawBlock block;
            {
                std::unique_lock lock(mutex);
                merger_cv.wait(lock, [&] {
                    return worker_error || ready.count(merge_cursor) > 0;
                });
                if (worker_error) break;
                auto node = ready.extract(merge_cursor);
                block = std::move(node.mapped());
            }
            std::size_t hit = 0;
            const auto n = static_cast<std::size_t>(problem.n);
            for (char flag : block.accepted) {
                aggregator.count_attempt();
                if (flag) {
                    Eigen::Map<const Vector> beta(block.beta_data.data() + hit * n,
                                                  static_cast<Eigen::Index>(n));
                    if (aggregator.add_accepted(beta, block.s1[hit])) {
                        reached_target = true;
                        break;
                    }
                    ++hit;
                }
            }
            {
                std::lock_guard lock(mutex);
                ++merge_cursor;
            }
            worker_cv.notify_all();
        }
    } catch (...) {
        merge_error = std::current_exception();
    }

    {
        std::lock_guard lock(mutex);
        stop = true;
    }
    worker_cv.notify_all();
    merger_cv.notify_all();
    for (auto& thread : pool) thread.join();

    if (merge_error) std::rethrow_exception(merge_error);
    if (worker_error) std::rethrow_exception(worker_error);
    if (!reached_target) {
        throw ThresholdError(
            "estimator: threshold too high, only " + std::to_string(aggregator.accepted()) + " of " +
                std::to_string(config.n_draws) + " draws accepted in " +
                std::to_string(aggregator.attempted()) + " attempts",
            static_cast<double>(aggregator.accepted()) /
                static_cast<double>(std::max<long long>(1, aggregator.attempted())));
    }
    return aggregator.finish();
}

}  // namespace detail

/// Thresholded Monte Carlo estimator: repeatedly draw an m x n subproblem,
/// keep the solution when its smallest Gram eigenvalue clears the threshold,
/// and average exactly n_draws accepted solutions. Rejected draws are
/// counted in `attempted`. For a fixed seed the result is bit-identical for
/// any worker count, because draws are pure functions of their index and
/// aggregation runs in ascending index order.
inline RunResult run_estimator(const Problem& problem, const EstimatorConfig& config) {
    detail::validate_config(problem, config);
    const int workers = detail::resolve_thread_count(config.threads);
    if (workers <= 1) return detail::run_estimator_serial(problem, config);
    return detail::run_estimator_parallel(problem, config, workers);
}

/// Acceptance probability of the threshold gate over a fixed attempt window,
/// for threshold diagnostics and the bound evaluators.
inline double estimate_acceptance_rate(const Problem& problem, int m, double sigma,
                                       std::uint64_t seed, long long attempts) {
    if (attempts < 1) throw ConfigError("estimator: attempt window must be >= 1");
    detail::DrawKernel kernel(problem, m, sigma);
    Vector beta;
    double s1 = 0.0;
    long long accepted = 0;
    for (long long idx = 0; idx < attempts; ++idx) {
        if (kernel.run(seed, idx, beta, s1)) ++accepted;
    }
    return static_cast<double>(accepted) / static_cast<double>(attempts);
}

}  // namespace sublsq
