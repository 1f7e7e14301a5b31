#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "sublsq/sampling.hpp"
#include "sublsq/types.hpp"

namespace sublsq {

/// A least-squares approximation problem: n basis functions, a target, and
/// the sampling measure the estimator draws from. For discrete measures the
/// evaluations may additionally be stored densely (design/rhs) so the full
/// reference solve does not re-evaluate the closures.
struct Problem {
    int n = 0;
    std::function<double(const Point&, int)> basis;  // gamma_j at a sample point
    std::function<double(const Point&)> target;
    SamplingMeasure measure;

    std::optional<Matrix> design;  // M x n, rows aligned with the discrete points
    std::optional<Vector> rhs;     // M
};

/// Discrete problem from a dense M x n design matrix and target vector.
/// Sample points carry the row index, so basis and target are lookups.
inline Problem make_discrete_matrix_problem(Matrix design, Vector rhs, bool with_replacement = true) {
    if (design.rows() != rhs.size()) {
        throw DimensionError("problem: design rows and target length differ");
    }
    if (design.rows() < 1 || design.cols() < 1) {
        throw DimensionError("problem: empty design matrix");
    }
    auto shared_design = std::make_shared<Matrix>(std::move(design));
    auto shared_rhs = std::make_shared<Vector>(std::move(rhs));

    const auto m_rows = shared_design->rows();
    std::vector<Point> points(static_cast<std::size_t>(m_rows));
    for (Eigen::Index i = 0; i < m_rows; ++i) {
        points[static_cast<std::size_t>(i)] = Vector::Constant(1, static_cast<double>(i));
    }

    Problem problem;
    problem.n = static_cast<int>(shared_design->cols());
    problem.basis = [shared_design](const Point& p, int j) {
        return (*shared_design)(static_cast<Eigen::Index>(p[0]), j);
    };
    problem.target = [shared_rhs](const Point& p) {
        return (*shared_rhs)(static_cast<Eigen::Index>(p[0]));
    };
    problem.measure = make_discrete_uniform(std::move(points), with_replacement);
    problem.design = *shared_design;
    problem.rhs = *shared_rhs;
    return problem;
}

/// Linear-interpolation problem on the standard Gaussian: basis x -> x_j.
/// Subproblem matrices then have i.i.d. standard Gaussian entries.
inline Problem make_gaussian_linear_problem(int dim, std::function<double(const Point&)> target) {
    Problem problem;
    problem.n = dim;
    problem.basis = [](const Point& p, int j) { return p[j]; };
    problem.target = std::move(target);
    problem.measure = make_gaussian_standard(dim);
    return problem;
}

/// Coordinate-map problem on a product measure: basis x -> h(x_j).
inline Problem make_product_scalar_problem(SamplingMeasure measure,
                                           std::function<double(const Point&)> target) {
    const auto* ps = std::get_if<ProductScalar>(&measure.law);
    if (!ps) throw ConfigError("problem: measure is not a scalar product measure");
    Problem problem;
    problem.n = ps->dim;
    if (ps->h) {
        auto h = ps->h;
        problem.basis = [h](const Point& p, int j) { return h(p[j]); };
    } else {
        problem.basis = [](const Point& p, int j) { return p[j]; };
    }
    problem.target = std::move(target);
    problem.measure = std::move(measure);
    return problem;
}

/// Noisy linear regression: observed target h(x) + noise, basis x -> x_j.
/// The noise realization rides in the point's trailing coordinate.
inline Problem make_noisy_linear_problem(int dim, ScalarLaw noise,
                                         std::function<double(const Point&)> clean_target) {
    Problem problem;
    problem.n = dim;
    problem.basis = [](const Point& p, int j) { return p[j]; };
    auto h = std::move(clean_target);
    problem.target = [h, dim](const Point& p) { return h(p.head(dim)) + p[dim]; };
    problem.measure = make_noisy_linear(make_gaussian_standard(dim), noise);
    return problem;
}

/// Sub-Gaussian verdict for the subproblem entries of a full problem.
/// For discrete measures the scale comes from the basis bound over the grid.
inline SubgaussianInfo is_subgaussian(const Problem& problem) {
    if (problem.measure.is_discrete()) {
        constexpr double inv_sqrt_ln2 = 1.2011224087864498;
        double bound = 0.0;
        if (problem.design) {
            bound = problem.design->cwiseAbs().maxCoeff();
        } else {
            for (const Point& p : problem.measure.discrete().points) {
                for (int j = 0; j < problem.n; ++j) {
                    bound = std::max(bound, std::abs(problem.basis(p, j)));
                }
            }
        }
        return {true, bound * inv_sqrt_ln2};
    }
    return is_subgaussian(problem.measure);
}

}  // namespace sublsq
