#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sublsq/estimator.hpp"
#include "sublsq/problem.hpp"
#include "sublsq/rng.hpp"
#include "sublsq/types.hpp"

namespace sublsq::esp {

/// Exact conversion constant used for all file ingestion.
inline constexpr double kBohrPerAngstrom = 1.8897259886;

/// One charge site. Sites sharing a symmetry class share one fitted charge.
/// All positions and radii in bohr.
struct Site {
    std::string label;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    int symmetry_class = 0;
    double vdw_radius = 1.0;
};

/// Potential samples around the molecule: positions in bohr, values in
/// hartree per unit charge.
struct EspGrid {
    std::vector<Eigen::Vector3d> points;
    std::vector<double> potential;
    enum class Provenance { Synthetic, External };
    Provenance provenance = Provenance::External;

    std::size_t size() const { return points.size(); }
};

/// Optional per-site multipole terms layered on top of the point charges by
/// the synthetic generator, standing in for model error of a pure
/// point-charge description.
struct MultipolePerturbation {
    Eigen::Vector3d dipole = Eigen::Vector3d::Zero();
    double quadrupole_amplitude = 0.0;             // axial component
    Eigen::Vector3d quadrupole_axis = Eigen::Vector3d::UnitZ();
};

struct ChargeModel {
    std::vector<double> class_charges;                      // e, one per symmetry class
    std::vector<MultipolePerturbation> site_perturbations;  // empty or one per site
    std::optional<double> total_charge;                     // reporting only
};

inline int symmetry_class_count(const std::vector<Site>& sites) {
    int max_class = -1;
    for (const auto& site : sites) max_class = std::max(max_class, site.symmetry_class);
    if (max_class < 0) throw ConfigError("esp: no sites given");
    std::vector<char> seen(static_cast<std::size_t>(max_class) + 1, 0);
    for (const auto& site : sites) {
        if (site.symmetry_class < 0) throw ConfigError("esp: negative symmetry class");
        seen[static_cast<std::size_t>(site.symmetry_class)] = 1;
    }
    for (char flag : seen) {
        if (!flag) throw ConfigError("esp: symmetry classes must form a contiguous partition");
    }
    return max_class + 1;
}

inline void validate_sites(const std::vector<Site>& sites) {
    for (std::size_t a = 0; a < sites.size(); ++a) {
        for (std::size_t b = a + 1; b < sites.size(); ++b) {
            if ((sites[a].position - sites[b].position).norm() < 1e-12) {
                throw ConfigError("esp: sites '" + sites[a].label + "' and '" + sites[b].label +
                                  "' coincide");
            }
        }
    }
    symmetry_class_count(sites);
}

/// Discrete charge-fitting problem over the grid. One design column per
/// symmetry class: the column value at y aggregates 1/||y - x_j|| over the
/// class members, so symmetry-equivalent sites share a coefficient.
/// Grid points closer than `clearance` bohr to any site are rejected.
inline Problem build_esp_problem(const std::vector<Site>& sites, const EspGrid& grid,
                                 double clearance = 0.1, bool with_replacement = true) {
    validate_sites(sites);
    if (grid.points.size() != grid.potential.size()) {
        throw ConfigError("esp: grid positions and potentials differ in length");
    }
    const int classes = symmetry_class_count(sites);
    if (grid.size() < static_cast<std::size_t>(classes)) {
        throw ConfigError("esp: fewer grid points than free parameters");
    }
    const auto rows = static_cast<Eigen::Index>(grid.size());
    Matrix design = Matrix::Zero(rows, classes);
    Vector rhs(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& y = grid.points[static_cast<std::size_t>(i)];
        for (const auto& site : sites) {
            const double r = (y - site.position).norm();
            if (r < clearance) {
                throw GeometryError("esp: grid point " + std::to_string(i) + " lies within " +
                                    std::to_string(clearance) + " bohr of site '" + site.label +
                                    "'");
            }
            design(i, site.symmetry_class) += 1.0 / r;
        }
        rhs(i) = grid.potential[static_cast<std::size_t>(i)];
    }
    return make_discrete_matrix_problem(std::move(design), std::move(rhs), with_replacement);
}

/// Uniform rejection sampling of the union shell
/// { y : inner <= min_j ||y - x_j|| / r_j <= outer } from the bounding box.
inline EspGrid generate_shell_grid(const std::vector<Site>& sites, double inner_scale,
                                   double outer_scale, long count, std::uint64_t seed) {
    validate_sites(sites);
    if (!(inner_scale > 1.0)) throw ConfigError("esp: inner shell scale must exceed 1");
    if (!(outer_scale > inner_scale)) throw ConfigError("esp: outer shell scale must exceed inner");
    if (count < 1) throw ConfigError("esp: grid needs at least one point");

    Eigen::Vector3d lo = sites.front().position, hi = sites.front().position;
    for (const auto& site : sites) {
        const double reach = site.vdw_radius * outer_scale;
        lo = lo.cwiseMin((site.position.array() - reach).matrix());
        hi = hi.cwiseMax((site.position.array() + reach).matrix());
    }

    EspGrid grid;
    grid.provenance = EspGrid::Provenance::Synthetic;
    grid.points.reserve(static_cast<std::size_t>(count));
    grid.potential.assign(static_cast<std::size_t>(count), 0.0);
    rng::Stream stream(seed, 0x677269645F67656Eull);
    long proposals = 0;
    while (grid.points.size() < static_cast<std::size_t>(count)) {
        Eigen::Vector3d y;
        for (int d = 0; d < 3; ++d) y[d] = stream.next_uniform(lo[d], hi[d]);
        ++proposals;
        double scaled_min = std::numeric_limits<double>::infinity();
        for (const auto& site : sites) {
            scaled_min = std::min(scaled_min, (y - site.position).norm() / site.vdw_radius);
        }
        if (scaled_min >= inner_scale && scaled_min <= outer_scale) {
            grid.points.push_back(y);
        }
        if (proposals >= 10000 && static_cast<double>(grid.points.size()) <
                                      1e-3 * static_cast<double>(proposals)) {
            throw GeometryError("esp: shell rejection efficiency below 1e-3; degenerate geometry");
        }
    }
    return grid;
}

/// Exact potential of the charge model (point charges plus the optional
/// dipole and axial quadrupole terms) at the given positions.
inline EspGrid synthesize_esp(const std::vector<Site>& sites, const ChargeModel& model,
                              const std::vector<Eigen::Vector3d>& positions) {
    validate_sites(sites);
    const int classes = symmetry_class_count(sites);
    if (static_cast<int>(model.class_charges.size()) != classes) {
        throw ConfigError("esp: charge model has " + std::to_string(model.class_charges.size()) +
                          " class charges for " + std::to_string(classes) + " classes");
    }
    if (!model.site_perturbations.empty() && model.site_perturbations.size() != sites.size()) {
        throw ConfigError("esp: perturbation list must be empty or one entry per site");
    }

    EspGrid grid;
    grid.provenance = EspGrid::Provenance::Synthetic;
    grid.points = positions;
    grid.potential.resize(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto& y = positions[i];
        double v = 0.0;
        for (std::size_t s = 0; s < sites.size(); ++s) {
            const Eigen::Vector3d d = y - sites[s].position;
            const double r = d.norm();
            v += model.class_charges[static_cast<std::size_t>(sites[s].symmetry_class)] / r;
            if (!model.site_perturbations.empty()) {
                const auto& pert = model.site_perturbations[s];
                v += pert.dipole.dot(d) / (r * r * r);
                if (pert.quadrupole_amplitude != 0.0) {
                    const double cos_theta = pert.quadrupole_axis.normalized().dot(d) / r;
                    v += pert.quadrupole_amplitude * 0.5 * (3.0 * cos_theta * cos_theta - 1.0) /
                         (r * r * r);
                }
            }
        }
        grid.potential[i] = v;
    }
    return grid;
}

/// Three-point water model: r(OH) = 0.9572 A, HOH angle 104.52 deg,
/// converted to bohr; the usual gas-phase geometry, overridable through a
/// sites file when a specific optimized structure is needed. Bondi vdW radii.
inline std::vector<Site> water_sites() {
    const double r_oh = 0.9572 * kBohrPerAngstrom;
    const double half_angle = 0.5 * 104.52 * std::numbers::pi / 180.0;
    const double r_o = 1.52 * kBohrPerAngstrom;
    const double r_h = 1.20 * kBohrPerAngstrom;
    std::vector<Site> sites(3);
    sites[0] = {"O", Eigen::Vector3d::Zero(), 0, r_o};
    sites[1] = {"H1", Eigen::Vector3d(r_oh * std::sin(half_angle), 0.0, r_oh * std::cos(half_angle)),
                1, r_h};
    sites[2] = {"H2",
                Eigen::Vector3d(-r_oh * std::sin(half_angle), 0.0, r_oh * std::cos(half_angle)), 1,
                r_h};
    return sites;
}

struct SadmExperimentEntry {
    int extra = 0;  // rows beyond the parameter count
    int m = 0;
    RunResult run;
};

struct SadmExperiment {
    FullLsqResult reference;
    std::vector<SadmExperimentEntry> entries;
};

/// Batch of estimator runs at m = n_s + extra for each requested extra,
/// with per-extra seeds derived from the shared master seed. Solutions are
/// retained for the distribution diagnostics unless the base config says
/// otherwise.
inline SadmExperiment run_sadm_experiment(const std::vector<Site>& sites, const EspGrid& grid,
                                          const std::vector<int>& extras,
                                          EstimatorConfig base_config,
                                          bool with_replacement = true) {
    const int classes = symmetry_class_count(sites);
    Problem problem = build_esp_problem(sites, grid, 0.1, with_replacement);
    if (base_config.retain == EstimatorConfig::Retain::None) {
        base_config.retain = EstimatorConfig::Retain::All;
    }

    SadmExperiment experiment;
    experiment.reference = full_least_squares(problem);
    for (int extra : extras) {
        if (extra < 0) throw ConfigError("esp: extra row counts must be >= 0");
        EstimatorConfig config = base_config;
        config.m = classes + extra;
        if (static_cast<std::size_t>(config.m) > grid.size()) {
            throw ConfigError("esp: m exceeds the grid size");
        }
        config.seed = rng::derive_seed(base_config.seed, static_cast<std::uint64_t>(extra));
        SadmExperimentEntry entry;
        entry.extra = extra;
        entry.m = config.m;
        entry.run = run_estimator(problem, config);
        experiment.entries.push_back(std::move(entry));
    }
    return experiment;
}

}  // namespace sublsq::esp
