#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sublsq/esp.hpp"

using namespace sublsq;
using namespace sublsq::esp;

namespace {

ChargeModel water_charges(double quad_amplitude = 0.0) {
    ChargeModel model;
    model.class_charges = {-0.782, 0.391};
    if (quad_amplitude != 0.0) {
        model.site_perturbations.assign(3, MultipolePerturbation{});
        model.site_perturbations[0].quadrupole_amplitude = quad_amplitude;
    }
    return model;
}

EspGrid synthetic_water_grid(long count, std::uint64_t seed, double quad_amplitude) {
    auto sites = water_sites();
    auto shell = generate_shell_grid(sites, 1.4, 2.0, count, seed);
    return synthesize_esp(sites, water_charges(quad_amplitude), shell.points);
}

}  // namespace

TEST_CASE("single site at distance two gives design entry one half", "[esp]") {
    std::vector<Site> sites = {{"Q", Eigen::Vector3d::Zero(), 0, 1.0}};
    EspGrid grid;
    grid.points = {Eigen::Vector3d(2.0, 0.0, 0.0)};
    grid.potential = {0.0};
    auto problem = build_esp_problem(sites, grid);
    REQUIRE(problem.design);
    REQUIRE((*problem.design)(0, 0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("symmetry classes aggregate into one column", "[esp]") {
    auto sites = water_sites();
    EspGrid grid;
    const Eigen::Vector3d y(4.0, 1.0, -2.0);
    grid.points = {y, Eigen::Vector3d(-3.0, 2.0, 5.0)};
    grid.potential = {0.0, 0.0};
    auto problem = build_esp_problem(sites, grid);
    REQUIRE(problem.n == 2);
    const double expected_h = 1.0 / (y - sites[1].position).norm() +
                              1.0 / (y - sites[2].position).norm();
    REQUIRE((*problem.design)(0, 1) == Catch::Approx(expected_h).epsilon(1e-14));
    REQUIRE((*problem.design)(0, 0) == Catch::Approx(1.0 / y.norm()).epsilon(1e-14));
}

TEST_CASE("points inside the clearance radius are rejected by name", "[esp]") {
    std::vector<Site> sites = {{"Q", Eigen::Vector3d::Zero(), 0, 1.0}};
    EspGrid grid;
    grid.points = {Eigen::Vector3d(0.01, 0.0, 0.0)};
    grid.potential = {0.0};
    REQUIRE_THROWS_AS(build_esp_problem(sites, grid, 0.1), GeometryError);
}

TEST_CASE("shell grids respect the scaled distance band", "[esp]") {
    std::vector<Site> sites = {{"Q", Eigen::Vector3d(1.0, -2.0, 0.5), 0, 1.0}};
    auto grid = generate_shell_grid(sites, 1.4, 2.0, 500, 77);
    REQUIRE(grid.size() == 500);
    for (const auto& y : grid.points) {
        const double r = (y - sites[0].position).norm();
        REQUIRE(r >= 1.4);
        REQUIRE(r <= 2.0);
    }
    auto doubled = generate_shell_grid(sites, 1.4, 2.0, 1000, 77);
    REQUIRE(doubled.size() == 1000);
    // Deterministic: the first 500 accepted points coincide.
    for (std::size_t i = 0; i < 500; ++i) REQUIRE(grid.points[i] == doubled.points[i]);
}

TEST_CASE("water defaults produce the standard grid size", "[esp]") {
    auto grid = generate_shell_grid(water_sites(), 1.4, 2.0, 2106, 11);
    REQUIRE(grid.size() == 2106);
}

TEST_CASE("synthetic potentials reduce to Coulomb terms", "[esp]") {
    std::vector<Site> sites = {{"Q", Eigen::Vector3d::Zero(), 0, 1.0}};
    ChargeModel zero;
    zero.class_charges = {0.0};
    std::vector<Eigen::Vector3d> where = {Eigen::Vector3d(1.0, 2.0, 2.0)};
    REQUIRE(synthesize_esp(sites, zero, where).potential[0] == 0.0);

    ChargeModel unit;
    unit.class_charges = {1.0};
    std::vector<Eigen::Vector3d> at_two = {Eigen::Vector3d(2.0, 0.0, 0.0)};
    REQUIRE(synthesize_esp(sites, unit, at_two).potential[0] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("full solve recovers the generating class charges", "[esp]") {
    auto sites = water_sites();
    auto grid = synthetic_water_grid(600, 13, 0.0);
    auto problem = build_esp_problem(sites, grid);
    auto result = full_least_squares(problem);
    REQUIRE(result.alpha(0) == Catch::Approx(-0.782).margin(1e-8));
    REQUIRE(result.alpha(1) == Catch::Approx(0.391).margin(1e-8));
    REQUIRE(result.rmsd <= 1e-10);
}

TEST_CASE("quadrupole perturbations leave a residue that vanishes with the amplitude", "[esp]") {
    auto sites = water_sites();
    double previous = std::numeric_limits<double>::infinity();
    for (double amplitude : {0.5, 0.05, 0.0}) {
        auto grid = synthetic_water_grid(400, 29, amplitude);
        auto problem = build_esp_problem(sites, grid);
        auto full = full_least_squares(problem);
        auto residue = residue_norm(problem, full.alpha, 2.0);
        if (amplitude > 0.0) {
            REQUIRE(residue.norm_value > 0.0);
        } else {
            REQUIRE(residue.norm_value <= 1e-10);
        }
        REQUIRE(residue.norm_value < previous);
        previous = residue.norm_value;
    }
}

TEST_CASE("experiments run one estimator per extra-row count", "[esp]") {
    auto sites = water_sites();
    auto grid = synthetic_water_grid(400, 5, 0.5);
    EstimatorConfig base;
    base.n_draws = 4000;
    base.seed = 321;
    base.threads = 1;
    auto experiment = run_sadm_experiment(sites, grid, {0, 2, 4, 8}, base);
    REQUIRE(experiment.entries.size() == 4);
    REQUIRE(experiment.entries[0].m == 2);
    REQUIRE(experiment.entries[1].m == 4);
    REQUIRE(experiment.entries[2].m == 6);
    REQUIRE(experiment.entries[3].m == 10);
    for (const auto& entry : experiment.entries) {
        REQUIRE(entry.run.accepted == 4000);
        REQUIRE_FALSE(entry.run.samples.empty());
    }

    // More rows track the reference solve at least as well as the square
    // draws of the original scheme.
    const double err0 = std::abs(experiment.entries[0].run.beta_bar(0) -
                                 experiment.reference.alpha(0));
    const double err8 = std::abs(experiment.entries[3].run.beta_bar(0) -
                                 experiment.reference.alpha(0));
    REQUIRE(err8 <= err0);

    // The replacement switch reaches the draws: same seed, different points.
    auto subset_mode = run_sadm_experiment(sites, grid, {0}, base, false);
    REQUIRE(subset_mode.entries[0].run.accepted == 4000);
    REQUIRE(subset_mode.entries[0].run.beta_bar(0) != experiment.entries[0].run.beta_bar(0));
}

TEST_CASE("design and solutions are rigid-motion invariant", "[esp]") {
    auto sites = water_sites();
    auto grid = synthetic_water_grid(300, 17, 0.3);
    auto baseline = full_least_squares(build_esp_problem(sites, grid));

    const Eigen::Vector3d shift(3.0, -1.0, 2.0);
    Eigen::Matrix3d rotation =
        Eigen::AngleAxisd(0.8, Eigen::Vector3d(1.0, 2.0, -0.5).normalized()).toRotationMatrix();

    auto moved_sites = sites;
    auto moved_grid = grid;
    for (auto& site : moved_sites) site.position = rotation * site.position + shift;
    for (auto& point : moved_grid.points) point = rotation * point + shift;

    auto moved = full_least_squares(build_esp_problem(moved_sites, moved_grid));
    REQUIRE((moved.alpha - baseline.alpha).lpNorm<Eigen::Infinity>() <=
            1e-12 * baseline.alpha.lpNorm<Eigen::Infinity>() + 1e-12);
    REQUIRE(moved.rmsd == Catch::Approx(baseline.rmsd).margin(1e-12));
}

TEST_CASE("rescaled geometry round-trips the same charges", "[esp]") {
    auto sites = water_sites();
    const double scale = 2.0;
    auto scaled_sites = sites;
    for (auto& site : scaled_sites) {
        site.position *= scale;
        site.vdw_radius *= scale;
    }
    auto scaled_shell = generate_shell_grid(scaled_sites, 1.4, 2.0, 300, 23);
    auto scaled_grid = synthesize_esp(scaled_sites, water_charges(), scaled_shell.points);
    auto result = full_least_squares(build_esp_problem(scaled_sites, scaled_grid));
    REQUIRE(result.alpha(0) == Catch::Approx(-0.782).margin(1e-8));
    REQUIRE(result.alpha(1) == Catch::Approx(0.391).margin(1e-8));
}

TEST_CASE("the default water geometry is the textbook approximation", "[esp]") {
    auto sites = water_sites();
    REQUIRE(sites.size() == 3);
    REQUIRE(symmetry_class_count(sites) == 2);
    const double r_oh = (sites[1].position - sites[0].position).norm();
    REQUIRE(r_oh == Catch::Approx(0.9572 * kBohrPerAngstrom).epsilon(1e-12));
    const Eigen::Vector3d u = (sites[1].position - sites[0].position).normalized();
    const Eigen::Vector3d v = (sites[2].position - sites[0].position).normalized();
    const double angle = std::acos(u.dot(v)) * 180.0 / std::numbers::pi;
    REQUIRE(angle == Catch::Approx(104.52).margin(1e-9));
}

TEST_CASE("degenerate shells fail loudly", "[esp]") {
    std::vector<Site> sites = {{"A", Eigen::Vector3d::Zero(), 0, 1.0}};
    REQUIRE_THROWS_AS(generate_shell_grid(sites, 0.9, 2.0, 10, 1), ConfigError);
    REQUIRE_THROWS_AS(generate_shell_grid(sites, 1.4, 1.4, 10, 1), ConfigError);
}
