#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sublsq/problem.hpp"
#include "sublsq/rng.hpp"
#include "sublsq/types.hpp"

namespace sublsq {

/// Relative floor under which a subproblem counts as rank deficient when no
/// explicit threshold is requested: scaled by the largest Gram eigenvalue of
/// the draw, so exact duplicate rows are rejected instead of amplified.
inline constexpr double kWellPosedFloor = 1e-12;

/// One drawn m x n subproblem. `s1` is the smallest eigenvalue of the Gram
/// matrix (the squared smallest singular value), filled lazily.
struct SubProblem {
    Matrix gamma;  // m x n, row per drawn point
    Vector fvec;   // m
    int m = 0;
    std::optional<double> s1;
    long long draw_index = 0;
};

struct Solution {
    Vector beta;
    double residual_norm2 = 0.0;  // ||fvec - gamma * beta||_2
    bool well_posed = false;
};

struct ResidueReport {
    Vector coeffs;
    double p = 2.0;
    double norm_value = 0.0;
    double standard_error = 0.0;  // 0 for exact (discrete) evaluations
    bool lower_bound_only = false;  // sup norm sampled on a continuous domain
};

/// Fills the design rows gamma[i][j] = gamma_j(points[i]) and fvec[i] =
/// f(points[i]). Non-finite evaluations are reported with the point and the
/// offending function index.
inline SubProblem build_subproblem(const Problem& problem, const std::vector<Point>& points,
                                   long long draw_index = 0) {
    if (points.empty()) throw ConfigError("solver: subproblem needs at least one point");
    SubProblem sub;
    sub.m = static_cast<int>(points.size());
    sub.draw_index = draw_index;
    sub.gamma.resize(sub.m, problem.n);
    sub.fvec.resize(sub.m);
    for (int i = 0; i < sub.m; ++i) {
        const Point& x = points[static_cast<std::size_t>(i)];
        for (int j = 0; j < problem.n; ++j) {
            const double value = problem.basis(x, j);
            if (!std::isfinite(value)) {
                throw EvaluationError(
                    "solver: basis function " + std::to_string(j) +
                        " is not finite at drawn point " + std::to_string(i),
                    j);
            }
            sub.gamma(i, j) = value;
        }
        const double value = problem.target(x);
        if (!std::isfinite(value)) {
            throw EvaluationError(
                "solver: target is not finite at drawn point " + std::to_string(i), -1);
        }
        sub.fvec(i) = value;
    }
    return sub;
}

namespace detail {

/// Reusable SVD workspace: one factorization per draw serves both the
/// smallest-Gram-eigenvalue gate and the solve. The Gram matrix is never
/// formed, so the condition number is not squared.
class SubproblemSolver {
public:
    /// Factors gamma and returns s1 = (smallest singular value)^2 together
    /// with the largest Gram eigenvalue for floor scaling.
    std::pair<double, double> factor(const Matrix& gamma) {
        svd_.compute(gamma, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd_.singularValues();
        const double smax = sv(0);
        const double smin = sv(sv.size() - 1);
        return {smin * smin, smax * smax};
    }

    Vector solve(const Vector& fvec) const { return svd_.solve(fvec); }

    const Eigen::JacobiSVD<Matrix>& svd() const { return svd_; }

private:
    Eigen::JacobiSVD<Matrix> svd_;
};

}  // namespace detail

/// Smallest eigenvalue of gamma^T gamma, from the singular values of gamma;
/// caches into sub.s1.
inline double smallest_gram_eigenvalue(SubProblem& sub) {
    if (!sub.s1) {
        Eigen::JacobiSVD<Matrix> svd(sub.gamma);
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        sub.s1 = smin * smin;
    }
    return *sub.s1;
}

/// Least-squares solve of one subproblem through an orthogonal factorization.
/// Draws whose smallest Gram eigenvalue does not clear `s1_floor` (or the
/// relative well-posed floor when s1_floor = 0) come back with
/// well_posed = false and no coefficients.
inline Solution solve_subproblem(SubProblem& sub, double s1_floor = 0.0) {
    if (sub.m < sub.gamma.cols()) {
        throw DimensionError("solver: underdetermined subproblem (m < n)");
    }
    detail::SubproblemSolver solver;
    const auto [s1, gram_max] = solver.factor(sub.gamma);
    sub.s1 = s1;
    const double floor = s1_floor > 0.0 ? s1_floor : kWellPosedFloor * gram_max;
    Solution solution;
    if (!(s1 > floor)) {
        solution.well_posed = false;
        return solution;
    }
    solution.beta = solver.solve(sub.fvec);
    solution.residual_norm2 = (sub.fvec - sub.gamma * solution.beta).norm();
    solution.well_posed = true;
    return solution;
}

struct FullLsqResult {
    Vector alpha;
    double rmsd = 0.0;
    double mean_signed_error_percent = 0.0;
    long points_in_error_mean = 0;
    double smallest_normal_eigenvalue = 0.0;  // of <gamma, gamma^T>_{L^2}
};

namespace detail {

inline std::pair<Matrix, Vector> dense_discrete_system(const Problem& problem) {
    if (problem.design && problem.rhs) return {*problem.design, *problem.rhs};
    const auto& grid = problem.measure.discrete().points;
    const auto m_rows = static_cast<Eigen::Index>(grid.size());
    Matrix design(m_rows, problem.n);
    Vector rhs(m_rows);
    for (Eigen::Index i = 0; i < m_rows; ++i) {
        const Point& x = grid[static_cast<std::size_t>(i)];
        for (int j = 0; j < problem.n; ++j) design(i, j) = problem.basis(x, j);
        rhs(i) = problem.target(x);
    }
    return {design, rhs};
}

}  // namespace detail

/// Exact reference solve over the whole discrete grid, with the aggregate
/// error measures conventionally reported for potential fits. Grid points
/// with |target| below `signed_error_floor` are left out of the mean signed
/// error (both numerator and denominator).
inline FullLsqResult full_least_squares(const Problem& problem,
                                        double signed_error_floor = 1e-10) {
    const auto [design, rhs] = detail::dense_discrete_system(problem);
    const auto m_rows = design.rows();
    if (m_rows < problem.n) {
        throw DimensionError("solver: fewer grid points than basis functions");
    }

    Eigen::BDCSVD<Matrix> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    const double points = static_cast<double>(m_rows);
    const double normal_min = smin * smin / points;
    if (!(smin * smin > 1e-12 * smax * smax)) {
        throw RankDeficiencyError(
            "solver: normal matrix numerically singular (smallest eigenvalue " +
                std::to_string(normal_min) + ")",
            normal_min);
    }

    FullLsqResult result;
    result.alpha = svd.solve(rhs);
    result.smallest_normal_eigenvalue = normal_min;
    const Vector residual = design * result.alpha - rhs;
    result.rmsd = std::sqrt(residual.squaredNorm() / points);

    double signed_sum = 0.0;
    long used = 0;
    for (Eigen::Index i = 0; i < m_rows; ++i) {
        if (std::abs(rhs(i)) > signed_error_floor) {
            signed_sum += residual(i) / rhs(i);
            ++used;
        }
    }
    result.points_in_error_mean = used;
    result.mean_signed_error_percent = used > 0 ? 100.0 * signed_sum / static_cast<double>(used) : 0.0;
    return result;
}

/// L^p(Omega) norm of the residue f - sum_j a_j gamma_j: exact under a
/// discrete measure, Monte Carlo with a reported standard error otherwise.
inline ResidueReport residue_norm(const Problem& problem, const Vector& coeffs, double p,
                                  long sample_budget = 100000, std::uint64_t seed = 0) {
    if (!(p >= 1.0)) throw ConfigError("solver: residue norm order must satisfy p >= 1");
    ResidueReport report;
    report.coeffs = coeffs;
    report.p = p;

    auto residue_at = [&](const Point& x) {
        double r = problem.target(x);
        for (int j = 0; j < problem.n; ++j) r -= coeffs(j) * problem.basis(x, j);
        return r;
    };

    if (problem.measure.is_discrete()) {
        const auto& grid = problem.measure.discrete().points;
        const double weight = 1.0 / static_cast<double>(grid.size());
        if (std::isinf(p)) {
            double sup = 0.0;
            for (const Point& x : grid) sup = std::max(sup, std::abs(residue_at(x)));
            report.norm_value = sup;
        } else {
            double acc = 0.0;
            for (const Point& x : grid) acc += weight * std::pow(std::abs(residue_at(x)), p);
            report.norm_value = std::pow(acc, 1.0 / p);
        }
        return report;
    }

    if (sample_budget < 1) throw ConfigError("solver: sample budget must be >= 1");
    std::vector<Point> point(1);
    if (std::isinf(p)) {
        double sup = 0.0;
        for (long i = 0; i < sample_budget; ++i) {
            draw_points(problem.measure, 1, rng::DrawSeed{seed, static_cast<std::uint64_t>(i)}, point);
            sup = std::max(sup, std::abs(residue_at(point[0])));
        }
        report.norm_value = sup;
        report.lower_bound_only = true;
        return report;
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long i = 0; i < sample_budget; ++i) {
        draw_points(problem.measure, 1, rng::DrawSeed{seed, static_cast<std::uint64_t>(i)}, point);
        const double v = std::pow(std::abs(residue_at(point[0])), p);
        sum += v;
        sum_sq += v * v;
    }
    const double budget = static_cast<double>(sample_budget);
    const double mean = sum / budget;
    const double var = std::max(0.0, (sum_sq - budget * mean * mean) / std::max(1.0, budget - 1.0));
    report.norm_value = std::pow(mean, 1.0 / p);
    // Delta method through x -> x^(1/p) at the sample mean.
    if (mean > 0.0) {
        report.standard_error =
            std::sqrt(var / budget) * std::pow(mean, 1.0 / p - 1.0) / p;
    }
    return report;
}

}  // namespace sublsq
