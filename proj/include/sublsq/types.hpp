#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace sublsq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A sample point in the problem domain. Coordinates are interpreted by the
/// measure that produced the point (grid index, Gaussian coordinates, ...).
using Point = Eigen::VectorXd;

/// Invalid user configuration (bad flag combination, inconsistent sizes).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Structural dimension violation (e.g. underdetermined subproblem).
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// A basis or target function produced a non-finite value at a sample point.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(const std::string& what, int function_index)
        : std::runtime_error(what), function_index(function_index) {}
    int function_index;  // -1 for the target
};

/// The full normal matrix is numerically singular; carries the offending eigenvalue.
class RankDeficiencyError : public std::runtime_error {
public:
    RankDeficiencyError(const std::string& what, double smallest_eigenvalue)
        : std::runtime_error(what), smallest_eigenvalue(smallest_eigenvalue) {}
    double smallest_eigenvalue;
};

/// The draw budget ran out before enough draws passed the threshold.
class ThresholdError : public std::runtime_error {
public:
    ThresholdError(const std::string& what, double observed_acceptance_rate)
        : std::runtime_error(what), observed_acceptance_rate(observed_acceptance_rate) {}
    double observed_acceptance_rate;
};

/// Grid geometry cannot be sampled (degenerate shell, point inside clearance).
class GeometryError : public std::runtime_error {
public:
    explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line = -1)
        : std::runtime_error(what), line(line) {}
    long line;
};

/// Degenerate sample set handed to a distribution fit.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sublsq
