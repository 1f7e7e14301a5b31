// Command-line driver for the subsystem least-squares estimator:
// full reference solves, Monte Carlo runs, SADM-style water experiments,
// bound planning, statistical verification, and distribution fits.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sublsq/sublsq.hpp"
#include "sublsq/verify.hpp"

namespace fs = std::filesystem;
using namespace sublsq;
using io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        values.push_back(std::stod(token));
    }
    return values;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> values;
    std::stringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        values.push_back(std::stoi(token));
    }
    return values;
}

EstimatorConfig::Retain parse_retain(const std::string& text, int& reservoir_size) {
    if (text == "none") return EstimatorConfig::Retain::None;
    if (text == "all") return EstimatorConfig::Retain::All;
    if (text.rfind("reservoir:", 0) == 0) {
        reservoir_size = std::stoi(text.substr(10));
        return EstimatorConfig::Retain::Reservoir;
    }
    throw ConfigError("unknown --retain value '" + text + "' (none | all | reservoir:k)");
}

double wall_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void ensure_out_dir(const std::string& out) {
    if (!out.empty()) fs::create_directories(out);
}

std::string joined(const std::string& out, const std::string& name) {
    return (fs::path(out) / name).string();
}

struct ProblemSource {
    Problem problem;
    std::string description;
};

/// Assembles the problem from either a sites+grid pair or the built-in
/// Gaussian linear-interpolation family.
ProblemSource load_problem(const std::string& sites_path, const std::string& grid_path,
                           int wishart_n, const std::string& coeffs_csv, double residue_amp,
                           bool with_replacement) {
    if (!sites_path.empty() || !grid_path.empty()) {
        if (sites_path.empty() || grid_path.empty()) {
            throw ConfigError("both --sites and --grid are required for a grid problem");
        }
        auto sites = io::read_sites_file(sites_path);
        auto grid = io::read_grid_file(grid_path);
        ProblemSource src{esp::build_esp_problem(sites, grid, 0.1, with_replacement),
                          "esp:" + sites_path + "+" + grid_path};
        return src;
    }
    if (wishart_n < 1) {
        throw ConfigError("either --sites/--grid or --wishart-n must be given");
    }
    std::vector<double> coeffs(static_cast<std::size_t>(wishart_n), 1.0);
    if (!coeffs_csv.empty()) {
        coeffs = parse_double_list(coeffs_csv);
        if (static_cast<int>(coeffs.size()) != wishart_n) {
            throw ConfigError("--coeffs length must equal --wishart-n");
        }
    }
    auto target = [coeffs, residue_amp](const Point& x) {
        double value = residue_amp * std::sin(x[0]);
        for (std::size_t j = 0; j < coeffs.size(); ++j) value += coeffs[j] * x[static_cast<int>(j)];
        return value;
    };
    return {make_gaussian_linear_problem(wishart_n, target), "gaussian-linear"};
}

Json bounds_check_for_run(const Problem& problem, const EstimatorConfig& config,
                          const RunResult& result) {
    Json checks = Json::object();
    for (const auto& kq : result.k_q) {
        if (config.sigma > 0.0) {
            Json row;
            row["lhs"] = kq.value;
            row["rhs"] = 1.0 / config.sigma;
            row["satisfied"] = kq.sigma_bound_ok;
            checks["k_" + io::format_double(kq.q) + "_below_inverse_sigma"] = std::move(row);
        }
    }
    if (config.sigma > 0.0 && problem.measure.is_discrete()) {
        const auto residue = residue_norm(problem, result.beta_bar,
                                          std::numeric_limits<double>::infinity());
        const double rhs = problem.n * static_cast<double>(config.m) * config.m / config.sigma *
                           residue.norm_value * residue.norm_value;
        Json row;
        row["lhs"] = result.trace_cov;
        row["rhs"] = rhs;
        row["satisfied"] = result.trace_cov <= rhs;
        checks["trace_cov_variance_bound"] = std::move(row);
    }
    return checks;
}

void write_run_artifacts(const std::string& out, const std::string& stem,
                         const EstimatorConfig& config, const RunResult& result,
                         const std::string& mode, double seconds, const Json& checks) {
    io::write_json_file(joined(out, stem + ".json"),
                        io::run_summary(config, result, mode, seconds, checks));
    if (!result.running_average.empty()) {
        io::write_running_average_csv(joined(out, stem + "_running_average.csv"),
                                      result.running_average);
    }
    if (!result.samples.empty()) {
        io::write_samples_file(joined(out, stem + "_samples.txt"), result.samples);
    }
}

int cmd_full_lsq(const std::string& sites_path, const std::string& grid_path, double mse_floor,
                 const std::string& out) {
    auto sites = io::read_sites_file(sites_path);
    auto grid = io::read_grid_file(grid_path);
    auto problem = esp::build_esp_problem(sites, grid);
    auto result = full_least_squares(problem, mse_floor);

    Json doc;
    doc["schema"] = "sublsq.full-lsq/1";
    doc["alpha"] = io::vector_to_json(result.alpha);
    doc["rmsd"] = result.rmsd;
    doc["mean_signed_error_percent"] = result.mean_signed_error_percent;
    doc["points_in_error_mean"] = result.points_in_error_mean;
    doc["smallest_normal_eigenvalue"] = result.smallest_normal_eigenvalue;
    std::cout << "alpha:";
    for (Eigen::Index j = 0; j < result.alpha.size(); ++j) {
        std::cout << ' ' << io::format_double(result.alpha(j));
    }
    std::cout << "\nrmsd: " << io::format_double(result.rmsd)
              << "\nmean_signed_error_percent: "
              << io::format_double(result.mean_signed_error_percent) << "\n";
    if (!out.empty()) {
        ensure_out_dir(out);
        io::write_json_file(joined(out, "full_lsq.json"), doc);
    }
    return kExitOk;
}

int cmd_mc_solve(const ProblemSource& src, EstimatorConfig config, const std::string& out) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = run_estimator(src.problem, config);
    const double seconds = wall_seconds(start);
    const std::string mode =
        src.problem.measure.is_discrete()
            ? (src.problem.measure.discrete().with_replacement ? "with-replacement"
                                                               : "without-replacement")
            : "continuous";
    const Json checks = bounds_check_for_run(src.problem, config, result);
    std::cout << "beta_bar:";
    for (Eigen::Index j = 0; j < result.beta_bar.size(); ++j) {
        std::cout << ' ' << io::format_double(result.beta_bar(j));
    }
    std::cout << "\nacceptance_rate: " << io::format_double(result.acceptance_rate)
              << "\nconf_diameter: " << io::format_double(result.conf_diameter) << "\n";
    if (!out.empty()) {
        ensure_out_dir(out);
        write_run_artifacts(out, "run_summary", config, result, mode, seconds, checks);
    }
    return kExitOk;
}

int cmd_sadm(const std::string& sites_path, const std::string& grid_path, bool synthetic,
             const std::string& charges_csv, double quad_amp, long grid_points,
             std::uint64_t grid_seed, const std::string& extras_csv, EstimatorConfig base,
             bool with_replacement, int histogram_bins, const std::string& out) {
    auto sites = sites_path.empty() ? esp::water_sites() : io::read_sites_file(sites_path);
    esp::EspGrid grid;
    if (synthetic) {
        const int classes = esp::symmetry_class_count(sites);
        esp::ChargeModel model;
        model.class_charges = charges_csv.empty()
                                  ? std::vector<double>(static_cast<std::size_t>(classes), 0.0)
                                  : parse_double_list(charges_csv);
        if (static_cast<int>(model.class_charges.size()) != classes) {
            throw ConfigError("--charges length must match the symmetry class count");
        }
        if (quad_amp != 0.0) {
            model.site_perturbations.assign(sites.size(), esp::MultipolePerturbation{});
            model.site_perturbations.front().quadrupole_amplitude = quad_amp;
        }
        auto shell = esp::generate_shell_grid(sites, 1.4, 2.0, grid_points, grid_seed);
        grid = esp::synthesize_esp(sites, model, shell.points);
    } else {
        if (grid_path.empty()) throw ConfigError("sadm needs --grid or --synthetic");
        grid = io::read_grid_file(grid_path);
    }

    const auto extras = parse_int_list(extras_csv);
    if (extras.empty()) throw ConfigError("--extras must name at least one value");

    Problem problem = esp::build_esp_problem(sites, grid, 0.1, with_replacement);
    const auto start = std::chrono::steady_clock::now();
    auto experiment = esp::run_sadm_experiment(sites, grid, extras, base, with_replacement);

    ensure_out_dir(out.empty() ? "." : out);
    const std::string dir = out.empty() ? "." : out;
    {
        Json ref;
        ref["schema"] = "sublsq.full-lsq/1";
        ref["alpha"] = io::vector_to_json(experiment.reference.alpha);
        ref["rmsd"] = experiment.reference.rmsd;
        ref["mean_signed_error_percent"] = experiment.reference.mean_signed_error_percent;
        io::write_json_file(joined(dir, "reference.json"), ref);
        io::write_grid_file(joined(dir, "grid.txt"), grid);
    }
    for (const auto& entry : experiment.entries) {
        EstimatorConfig config = base;
        config.m = entry.m;
        config.seed = rng::derive_seed(base.seed, static_cast<std::uint64_t>(entry.extra));
        const std::string stem = "run_extra" + std::to_string(entry.extra);
        const Json checks = bounds_check_for_run(problem, config, entry.run);
        write_run_artifacts(dir, stem, config, entry.run, with_replacement ? "with-replacement"
                                                                           : "without-replacement",
                            wall_seconds(start), checks);
        if (!entry.run.samples.empty()) {
            std::vector<double> coordinate0(entry.run.samples.size());
            for (std::size_t i = 0; i < entry.run.samples.size(); ++i) {
                coordinate0[i] = entry.run.samples[i](0);
            }
            auto hist = dist::histogram(coordinate0, histogram_bins);
            std::ofstream csv(joined(dir, stem + "_histogram.csv"));
            csv << "bin_lo,bin_hi,density\n";
            for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
                csv << io::format_double(hist.edges[b]) << ',' << io::format_double(hist.edges[b + 1])
                    << ',' << io::format_double(hist.density[b]) << '\n';
            }
        }
        std::cout << "extra=" << entry.extra << " m=" << entry.m << " beta_bar_0="
                  << io::format_double(entry.run.beta_bar(0))
                  << " acceptance=" << io::format_double(entry.run.acceptance_rate) << "\n";
    }
    std::cout << "reference alpha_0=" << io::format_double(experiment.reference.alpha(0)) << "\n";
    return kExitOk;
}

int cmd_plan(int n, int m, double q, double p, double epsilon, double eta, double sigma,
             double rho, double A, double B, double accept_prob, double kq_estimate,
             const std::string& out) {
    const auto optimal = bounds::optimal_wishart_parameters(n);
    const int m_eff = m > 0 ? m : optimal.m_star;

    std::vector<bounds::BoundReport> reports;
    reports.push_back({"gamma_star", optimal.gamma_star, true, ""});
    reports.push_back({"m_star", static_cast<double>(optimal.m_star), true, ""});
    reports.push_back({"x_quantile", gaussian_tail_quantile(n, eta), true, "tail eta/(2n)"});
    reports.push_back(bounds::k_q_wishart_bound(n, m_eff, q));
    if (sigma > 0.0) {
        reports.push_back(bounds::wishart_tail_bound(n, m_eff, sigma));
    }
    const auto plan = bounds::subgaussian_plan(n, m_eff, A, B);
    reports.push_back({"sigma0", plan.sigma0, true, "sub-Gaussian threshold floor"});
    reports.push_back({"delta", plan.delta, true, ""});
    reports.push_back({"delta_sigma0", plan.delta_sigma0, plan.delta_sigma0 < 1.0, "must be < 1"});

    bounds::BoundInputs inputs;
    inputs.n = n;
    inputs.m = m_eff;
    inputs.q = q;
    inputs.p = p;
    inputs.epsilon = epsilon;
    inputs.eta = eta;
    inputs.rho_norm = rho;
    inputs.sigma = sigma;
    inputs.subg_A = A;
    inputs.subg_B = B;
    inputs.accept_prob = accept_prob;
    inputs.k_q_estimate = kq_estimate;
    reports.push_back(bounds::cost_bound(inputs, bounds::CostRegime::Invertible));
    reports.push_back(bounds::cost_bound(inputs, bounds::CostRegime::Thresholded));
    reports.push_back(bounds::cost_bound(inputs, bounds::CostRegime::Wishart));
    reports.push_back(bounds::cost_bound(inputs, bounds::CostRegime::Subgaussian));

    Json table = Json::array();
    std::cout << "n=" << n << " m=" << m_eff << " q=" << io::format_double(q) << "\n";
    for (const auto& report : reports) {
        std::cout << report.name << ": ";
        if (report.valid) {
            std::cout << io::format_double(report.value);
        } else {
            std::cout << "invalid";
        }
        if (!report.hypothesis_notes.empty()) std::cout << "  (" << report.hypothesis_notes << ")";
        std::cout << "\n";
        Json row;
        row["name"] = report.name;
        row["valid"] = report.valid;
        if (report.valid) row["value"] = report.value;
        row["notes"] = report.hypothesis_notes;
        table.push_back(std::move(row));
    }
    if (!out.empty()) {
        ensure_out_dir(out);
        Json doc;
        doc["schema"] = "sublsq.plan/1";
        doc["reports"] = std::move(table);
        io::write_json_file(joined(out, "plan.json"), doc);
    }
    return kExitOk;
}

int cmd_verify_wishart(int n, int m, long long draws, std::uint64_t seed, const std::string& out) {
    const auto report = verify::verify_wishart(n, m, draws, seed);
    Json doc;
    doc["schema"] = "sublsq.verify-wishart/1";
    doc["n"] = n;
    doc["m"] = m;
    doc["draws"] = draws;
    Json tail = Json::array();
    for (const auto& point : report.tail) {
        Json row;
        row["eps"] = point.eps;
        row["empirical"] = point.empirical;
        row["bound"] = point.bound;
        row["slack"] = point.slack;
        row["ok"] = point.ok;
        tail.push_back(std::move(row));
    }
    doc["tail"] = std::move(tail);
    Json density = Json::array();
    for (const auto& bin : report.density) {
        Json row;
        row["lo"] = bin.lo;
        row["hi"] = bin.hi;
        row["empirical"] = bin.empirical;
        row["lower"] = bin.lower;
        row["upper"] = bin.upper;
        row["ok"] = bin.ok;
        density.push_back(std::move(row));
    }
    doc["density"] = std::move(density);
    if (report.k2_applicable) {
        doc["k2"] = report.k2.value;
        doc["k2_bound"] = report.k2_bound;
        doc["k2_ok"] = report.k2_ok;
    }
    if (report.slope.applicable) {
        doc["tail_slope"] = report.slope.slope;
        doc["tail_slope_ok"] = report.slope.ok;
        doc["truncated_mean_growth"] = report.truncated_mean.growth;
        doc["truncated_mean_ok"] = report.truncated_mean.ok;
    }
    doc["passed"] = report.passed;
    std::cout << "wishart n=" << n << " m=" << m << " draws=" << draws
              << (report.passed ? " PASS" : " FAIL") << "\n";
    if (!out.empty()) {
        ensure_out_dir(out);
        io::write_json_file(joined(out, "verify_wishart.json"), doc);
    }
    return report.passed ? kExitOk : kExitVerification;
}

int cmd_verify_subgaussian(int n, int m, long long draws, std::uint64_t seed,
                           const std::string& law_name, double B, const std::string& out) {
    ScalarLaw law = ScalarLaw::uniform(-1.7320508075688772, 1.7320508075688772);
    if (law_name == "rademacher") {
        law = ScalarLaw::rademacher();
    } else if (law_name != "uniform") {
        throw ConfigError("unknown --law '" + law_name + "' (uniform | rademacher)");
    }
    const auto report = verify::verify_subgaussian(n, m, draws, seed, law, B);
    Json doc;
    doc["schema"] = "sublsq.verify-subgaussian/1";
    doc["n"] = n;
    doc["m"] = m;
    doc["draws"] = draws;
    doc["gamma"] = report.gamma;
    doc["fitted_A"] = report.fitted_A;
    doc["fitted_B"] = report.fitted_B;
    doc["floor_rate"] = report.floor_rate;
    doc["tail_slope_applicable"] = report.slope.applicable;
    doc["tail_slope"] = report.slope.slope;
    doc["tail_slope_expected"] = report.slope.expected;
    doc["tail_slope_ok"] = report.slope.ok;
    doc["sigma0"] = report.plan.sigma0;
    doc["delta_sigma0"] = report.plan.delta_sigma0;
    doc["sanity_ok"] = report.sanity_ok;
    doc["passed"] = report.passed;
    std::cout << "subgaussian n=" << n << " m=" << m << " draws=" << draws;
    if (report.slope.applicable) {
        std::cout << " slope=" << io::format_double(report.slope.slope) << " (expect "
                  << io::format_double(report.slope.expected) << ")";
    } else {
        std::cout << " floor=" << io::format_double(report.floor_rate) << " (fitted B "
                  << io::format_double(report.fitted_B) << ")";
    }
    std::cout << (report.passed ? " PASS" : " FAIL") << "\n";
    if (!out.empty()) {
        ensure_out_dir(out);
        io::write_json_file(joined(out, "verify_subgaussian.json"), doc);
    }
    return report.passed ? kExitOk : kExitVerification;
}

int cmd_distfit(const std::string& samples_path, int coordinate, int bins, int k_top,
                const std::string& out) {
    const auto samples = io::read_samples_file(samples_path);
    if (samples.empty()) throw ConfigError("samples file is empty");
    if (coordinate < 0 || coordinate >= samples.front().size()) {
        throw ConfigError("--coordinate out of range");
    }
    dist::SampleSet set;
    set.coordinate_index = coordinate;
    set.values.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        set.values[i] = samples[i](coordinate);
    }

    const auto cauchy = dist::fit_cauchy(set);
    const auto gaussian = dist::fit_gaussian(set);
    Json doc;
    doc["schema"] = "sublsq.distfit/1";
    doc["samples"] = set.values.size();
    doc["coordinate"] = coordinate;
    auto fit_json = [](const dist::FitResult& fit) {
        Json row;
        row["location"] = fit.location;
        row["scale"] = fit.scale;
        row["log_likelihood"] = fit.log_likelihood;
        row["ks_statistic"] = fit.ks_statistic;
        row["converged"] = fit.converged;
        return row;
    };
    doc["cauchy"] = fit_json(cauchy);
    doc["gaussian"] = fit_json(gaussian);
    doc["skewness"] = dist::sample_skewness(set.values);
    if (k_top > 0) {
        const auto hill = dist::tail_exponent(set.values, k_top);
        Json row;
        row["alpha"] = hill.alpha;
        row["ci_low"] = hill.ci_low;
        row["ci_high"] = hill.ci_high;
        row["k_top"] = hill.k_top;
        doc["tail_exponent"] = std::move(row);
    }
    std::cout << "cauchy: loc=" << io::format_double(cauchy.location)
              << " scale=" << io::format_double(cauchy.scale)
              << " loglik=" << io::format_double(cauchy.log_likelihood) << "\n"
              << "gaussian: loc=" << io::format_double(gaussian.location)
              << " scale=" << io::format_double(gaussian.scale)
              << " loglik=" << io::format_double(gaussian.log_likelihood) << "\n"
              << "preferred: "
              << (cauchy.log_likelihood > gaussian.log_likelihood ? "cauchy" : "gaussian") << "\n";
    if (!out.empty()) {
        ensure_out_dir(out);
        io::write_json_file(joined(out, "distfit.json"), doc);
        auto hist = dist::histogram(set.values, bins);
        std::ofstream csv(joined(out, "histogram.csv"));
        csv << "bin_lo,bin_hi,density\n";
        for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
            csv << io::format_double(hist.edges[b]) << ',' << io::format_double(hist.edges[b + 1])
                << ',' << io::format_double(hist.density[b]) << '\n';
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized subsystem least-squares estimator"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "worker cap (0 = SUBLSQ_THREADS env or hardware)");

    // full-lsq
    auto* full = app.add_subcommand("full-lsq", "exact reference solve over a grid file");
    std::string full_sites, full_grid, full_out;
    double full_mse_floor = 1e-10;
    full->add_option("--sites", full_sites, "sites file")->required();
    full->add_option("--grid", full_grid, "grid file")->required();
    full->add_option("--mse-floor", full_mse_floor, "|target| floor for the mean signed error");
    full->add_option("--out", full_out, "output directory");

    // mc-solve
    auto* mc = app.add_subcommand("mc-solve", "Monte Carlo subsystem estimator");
    std::string mc_sites, mc_grid, mc_out, mc_mode = "with-replacement", mc_retain = "none",
                mc_coeffs;
    int mc_m = 0, mc_wishart_n = 0;
    long long mc_draws = 0, mc_max_attempts = 0;
    double mc_sigma = 0.0, mc_eta = 0.05, mc_residue_amp = 0.0;
    std::uint64_t mc_seed = 0;
    mc->add_option("--sites", mc_sites, "sites file");
    mc->add_option("--grid", mc_grid, "grid file");
    mc->add_option("--wishart-n", mc_wishart_n, "built-in Gaussian linear problem of this size");
    mc->add_option("--coeffs", mc_coeffs, "true coefficients for the built-in problem");
    mc->add_option("--residue-amp", mc_residue_amp, "bounded residue amplitude for the built-in problem");
    mc->add_option("--m", mc_m, "rows per draw")->required();
    mc->add_option("--n-draws", mc_draws, "accepted-draw target")->required();
    mc->add_option("--sigma", mc_sigma, "threshold on the smallest Gram eigenvalue");
    mc->add_option("--eta", mc_eta, "confidence level");
    mc->add_option("--seed", mc_seed, "master seed");
    mc->add_option("--max-attempts", mc_max_attempts, "total draw budget (0 = 1000 N)");
    mc->add_option("--mode", mc_mode, "with-replacement | without-replacement");
    mc->add_option("--retain", mc_retain, "none | all | reservoir:k");
    mc->add_option("--out", mc_out, "output directory");

    // sadm
    auto* sadm = app.add_subcommand("sadm", "charge-fitting experiment over extra-row counts");
    std::string sadm_sites, sadm_grid, sadm_out = "sadm_out", sadm_extras = "0,2,4,8",
                sadm_charges, sadm_mode = "with-replacement", sadm_retain = "all";
    bool sadm_synthetic = false;
    double sadm_quad = 0.0, sadm_sigma = 0.0, sadm_eta = 0.05;
    long sadm_grid_points = 2106;
    long long sadm_draws = 100000;
    std::uint64_t sadm_seed = 0, sadm_grid_seed = 11;
    int sadm_bins = 80;
    sadm->add_option("--sites", sadm_sites, "sites file (default: built-in water model)");
    sadm->add_option("--grid", sadm_grid, "grid file with reference potentials");
    sadm->add_flag("--synthetic", sadm_synthetic, "generate a synthetic grid instead");
    sadm->add_option("--charges", sadm_charges, "synthetic class charges, e.g. -0.782,0.391");
    sadm->add_option("--quad-amp", sadm_quad, "axial quadrupole amplitude on the first site");
    sadm->add_option("--grid-points", sadm_grid_points, "synthetic grid size");
    sadm->add_option("--grid-seed", sadm_grid_seed, "synthetic grid seed");
    sadm->add_option("--extras", sadm_extras, "comma list of extra row counts");
    sadm->add_option("--n-draws", sadm_draws, "accepted draws per run");
    sadm->add_option("--sigma", sadm_sigma, "threshold");
    sadm->add_option("--eta", sadm_eta, "confidence level");
    sadm->add_option("--seed", sadm_seed, "master seed");
    sadm->add_option("--mode", sadm_mode, "with-replacement | without-replacement");
    sadm->add_option("--retain", sadm_retain, "none | all | reservoir:k");
    sadm->add_option("--histogram-bins", sadm_bins, "bins for the per-run histograms");
    sadm->add_option("--out", sadm_out, "output directory");

    // plan
    auto* plan = app.add_subcommand("plan", "closed-form bound and parameter table");
    int plan_n = 0, plan_m = 0;
    double plan_q = 2.0, plan_p = std::numeric_limits<double>::infinity();
    double plan_eps = 1e-2, plan_eta = 0.05, plan_sigma = 0.0, plan_rho = 1.0;
    double plan_A = 1.0, plan_B = 0.5, plan_accept = 1.0;
    double plan_kq = std::numeric_limits<double>::quiet_NaN();
    plan->add_option("--n", plan_n, "basis count")->required();
    plan->add_option("--m", plan_m, "rows per draw (default m*)");
    plan->add_option("--q", plan_q, "moment order");
    plan->add_option("--p", plan_p, "residue norm order");
    plan->add_option("--epsilon", plan_eps, "target precision");
    plan->add_option("--eta", plan_eta, "confidence level");
    plan->add_option("--sigma", plan_sigma, "threshold");
    plan->add_option("--rho", plan_rho, "residue norm estimate");
    plan->add_option("--A", plan_A, "sub-Gaussian tail constant A");
    plan->add_option("--B", plan_B, "sub-Gaussian tail constant B");
    plan->add_option("--accept-prob", plan_accept, "acceptance probability estimate");
    plan->add_option("--kq", plan_kq, "measured K_q for the invertible cost");
    std::string plan_out;
    plan->add_option("--out", plan_out, "output directory");

    // verify-wishart
    auto* vw = app.add_subcommand("verify-wishart", "statistical conformance of Gaussian designs");
    int vw_n = 4, vw_m = 6;
    long long vw_draws = 1000000;
    std::uint64_t vw_seed = 1;
    std::string vw_out;
    vw->add_option("--n", vw_n, "columns")->required();
    vw->add_option("--m", vw_m, "rows")->required();
    vw->add_option("--draws", vw_draws, "number of designs");
    vw->add_option("--seed", vw_seed, "seed");
    vw->add_option("--out", vw_out, "output directory");

    // verify-subgaussian
    auto* vs = app.add_subcommand("verify-subgaussian", "tail-model check for bounded entry laws");
    int vs_n = 4, vs_m = 8;
    long long vs_draws = 1000000;
    std::uint64_t vs_seed = 1;
    double vs_B = 0.5;
    std::string vs_law = "uniform", vs_out;
    vs->add_option("--n", vs_n, "columns")->required();
    vs->add_option("--m", vs_m, "rows")->required();
    vs->add_option("--draws", vs_draws, "number of designs");
    vs->add_option("--seed", vs_seed, "seed");
    vs->add_option("--law", vs_law, "uniform | rademacher");
    vs->add_option("--B", vs_B, "tail constant B");
    vs->add_option("--out", vs_out, "output directory");

    // distfit
    auto* df = app.add_subcommand("distfit", "Cauchy/Gaussian fits of a samples dump");
    std::string df_samples, df_out;
    int df_coordinate = 0, df_bins = 80, df_ktop = 0;
    df->add_option("--samples", df_samples, "samples file")->required();
    df->add_option("--coordinate", df_coordinate, "coordinate to analyze");
    df->add_option("--bins", df_bins, "histogram bins");
    df->add_option("--k-top", df_ktop, "Hill estimator order statistics (0 = skip)");
    df->add_option("--out", df_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*full) return cmd_full_lsq(full_sites, full_grid, full_mse_floor, full_out);
        if (*mc) {
            EstimatorConfig config;
            config.m = mc_m;
            config.n_draws = mc_draws;
            config.sigma = mc_sigma;
            config.eta = mc_eta;
            config.seed = mc_seed;
            config.max_attempts = mc_max_attempts;
            config.threads = threads;
            config.retain = parse_retain(mc_retain, config.reservoir_size);
            if (mc_mode != "with-replacement" && mc_mode != "without-replacement") {
                throw ConfigError("unknown --mode '" + mc_mode + "'");
            }
            auto src = load_problem(mc_sites, mc_grid, mc_wishart_n, mc_coeffs, mc_residue_amp,
                                    mc_mode == "with-replacement");
            return cmd_mc_solve(src, config, mc_out);
        }
        if (*sadm) {
            EstimatorConfig base;
            base.n_draws = sadm_draws;
            base.sigma = sadm_sigma;
            base.eta = sadm_eta;
            base.seed = sadm_seed;
            base.threads = threads;
            base.retain = parse_retain(sadm_retain, base.reservoir_size);
            if (sadm_mode != "with-replacement" && sadm_mode != "without-replacement") {
                throw ConfigError("unknown --mode '" + sadm_mode + "'");
            }
            return cmd_sadm(sadm_sites, sadm_grid, sadm_synthetic, sadm_charges, sadm_quad,
                            sadm_grid_points, sadm_grid_seed, sadm_extras, base,
                            sadm_mode == "with-replacement", sadm_bins, sadm_out);
        }
        if (*plan) {
            return cmd_plan(plan_n, plan_m, plan_q, plan_p, plan_eps, plan_eta, plan_sigma,
                            plan_rho, plan_A, plan_B, plan_accept, plan_kq, plan_out);
        }
        if (*vw) return cmd_verify_wishart(vw_n, vw_m, vw_draws, vw_seed, vw_out);
        if (*vs) return cmd_verify_subgaussian(vs_n, vs_m, vs_draws, vs_seed, vs_law, vs_B, vs_out);
        if (*df) return cmd_distfit(df_samples, df_coordinate, df_bins, df_ktop, df_out);
    } catch (const ThresholdError& e) {
        std::cerr << "error: " << e.what() << "\n"
                  << "observed acceptance rate: " << io::format_double(e.observed_acceptance_rate)
                  << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
