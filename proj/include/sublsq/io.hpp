#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sublsq/esp.hpp"
#include "sublsq/estimator.hpp"
#include "sublsq/types.hpp"

namespace sublsq::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips a double exactly.
inline std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

namespace detail {

inline bool parse_double(const std::string& token, double& out) {
    try {
        std::size_t used = 0;
        out = std::stod(token, &used);
        return used == token.size();
    } catch (...) {
        return false;
    }
}

struct UnitHeader {
    double length_to_bohr = 1.0;
    bool seen = false;
};

/// Recognized headers: "# units: bohr hartree_per_e" and
/// "# units: angstrom hartree_per_e". Anything else is rejected.
inline bool parse_unit_header(const std::string& line, UnitHeader& header, long line_number) {
    std::istringstream in(line);
    std::string hash, keyword, length_unit, value_unit;
    in >> hash >> keyword;
    if (hash != "#" || keyword != "units:") return false;
    in >> length_unit >> value_unit;
    if (value_unit != "hartree_per_e") {
        throw ParseError("io: unknown potential unit '" + value_unit + "'", line_number);
    }
    if (length_unit == "bohr") {
        header.length_to_bohr = 1.0;
    } else if (length_unit == "angstrom") {
        header.length_to_bohr = esp::kBohrPerAngstrom;
    } else {
        throw ParseError("io: unknown length unit '" + length_unit + "'", line_number);
    }
    header.seen = true;
    return true;
}

}  // namespace detail

/// Grid file: one "x y z v" record per line, `#` comments, mandatory unit
/// header. Values are stored in bohr / hartree_per_e regardless of the
/// file's length unit.
inline esp::EspGrid read_grid(std::istream& in) {
    esp::EspGrid grid;
    detail::UnitHeader header;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        if (line[0] == '#') {
            detail::parse_unit_header(line, header, line_number);
            continue;
        }
        if (!header.seen) {
            throw ParseError("io: grid data before the '# units:' header", line_number);
        }
        std::istringstream fields(line);
        std::string sx, sy, sz, sv, extra;
        if (!(fields >> sx >> sy >> sz >> sv) || (fields >> extra)) {
            throw ParseError("io: grid record needs exactly 4 fields", line_number);
        }
        double x, y, z, v;
        if (!detail::parse_double(sx, x) || !detail::parse_double(sy, y) ||
            !detail::parse_double(sz, z) || !detail::parse_double(sv, v)) {
            throw ParseError("io: malformed number in grid record", line_number);
        }
        grid.points.emplace_back(x * header.length_to_bohr, y * header.length_to_bohr,
                                 z * header.length_to_bohr);
        grid.potential.push_back(v);
    }
    if (!header.seen) throw ParseError("io: grid file has no '# units:' header");
    if (grid.points.empty()) throw ParseError("io: grid file has no records");
    return grid;
}

inline esp::EspGrid read_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("io: cannot open grid file '" + path + "'");
    return read_grid(in);
}

inline void write_grid(std::ostream& out, const esp::EspGrid& grid) {
    out << "# units: bohr hartree_per_e\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << format_double(grid.points[i][0]) << ' ' << format_double(grid.points[i][1]) << ' '
            << format_double(grid.points[i][2]) << ' ' << format_double(grid.potential[i]) << '\n';
    }
}

inline void write_grid_file(const std::string& path, const esp::EspGrid& grid) {
    std::ofstream out(path);
    if (!out) throw ParseError("io: cannot write grid file '" + path + "'");
    write_grid(out, grid);
}

/// Sites file: "label x y z symmetry_class vdw_radius" records under the
/// same unit-header convention (lengths converted to bohr on ingestion).
inline std::vector<esp::Site> read_sites(std::istream& in) {
    std::vector<esp::Site> sites;
    detail::UnitHeader header;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        if (line[0] == '#') {
            detail::parse_unit_header(line, header, line_number);
            continue;
        }
        if (!header.seen) {
            throw ParseError("io: site data before the '# units:' header", line_number);
        }
        std::istringstream fields(line);
        std::string label, sx, sy, sz, sclass, sradius, extra;
        if (!(fields >> label >> sx >> sy >> sz >> sclass >> sradius) || (fields >> extra)) {
            throw ParseError("io: site record needs exactly 6 fields", line_number);
        }
        double x, y, z, radius;
        if (!detail::parse_double(sx, x) || !detail::parse_double(sy, y) ||
            !detail::parse_double(sz, z) || !detail::parse_double(sradius, radius)) {
            throw ParseError("io: malformed number in site record", line_number);
        }
        int symmetry_class = 0;
        try {
            symmetry_class = std::stoi(sclass);
        } catch (...) {
            throw ParseError("io: malformed symmetry class", line_number);
        }
        esp::Site site;
        site.label = label;
        site.position =
            Eigen::Vector3d(x, y, z) * header.length_to_bohr;
        site.symmetry_class = symmetry_class;
        site.vdw_radius = radius * header.length_to_bohr;
        sites.push_back(std::move(site));
    }
    if (!header.seen) throw ParseError("io: sites file has no '# units:' header");
    esp::validate_sites(sites);
    return sites;
}

inline std::vector<esp::Site> read_sites_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("io: cannot open sites file '" + path + "'");
    return read_sites(in);
}

inline void write_sites(std::ostream& out, const std::vector<esp::Site>& sites) {
    out << "# units: bohr hartree_per_e\n";
    for (const auto& site : sites) {
        out << site.label << ' ' << format_double(site.position[0]) << ' '
            << format_double(site.position[1]) << ' ' << format_double(site.position[2]) << ' '
            << site.symmetry_class << ' ' << format_double(site.vdw_radius) << '\n';
    }
}

/// Sample dump: one solution vector per line, full decimal precision.
/// parse(serialize(x)) reproduces x bit for bit.
inline void write_samples(std::ostream& out, const std::vector<Vector>& samples) {
    for (const auto& sample : samples) {
        for (Eigen::Index j = 0; j < sample.size(); ++j) {
            if (j) out << ' ';
            out << format_double(sample(j));
        }
        out << '\n';
    }
}

inline void write_samples_file(const std::string& path, const std::vector<Vector>& samples) {
    std::ofstream out(path);
    if (!out) throw ParseError("io: cannot write samples file '" + path + "'");
    write_samples(out, samples);
}

inline std::vector<Vector> read_samples(std::istream& in) {
    std::vector<Vector> samples;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::vector<double> row;
        std::string token;
        while (fields >> token) {
            double value;
            if (!detail::parse_double(token, value)) {
                throw ParseError("io: malformed number in samples file", line_number);
            }
            row.push_back(value);
        }
        if (row.empty()) throw ParseError("io: empty samples record", line_number);
        if (!samples.empty() && samples.front().size() != static_cast<Eigen::Index>(row.size())) {
            throw ParseError("io: inconsistent sample dimension", line_number);
        }
        samples.push_back(Eigen::Map<Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
    }
    return samples;
}

inline std::vector<Vector> read_samples_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("io: cannot open samples file '" + path + "'");
    return read_samples(in);
}

inline Json vector_to_json(const Vector& v) {
    Json array = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) array.push_back(v(i));
    return array;
}

inline Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Structured run summary with deterministic field order. Every numeric
/// field is a pure function of (problem, config); only `timing_seconds`
/// varies between invocations.
inline Json run_summary(const EstimatorConfig& config, const RunResult& result,
                        const std::string& sampling_mode, double timing_seconds,
                        Json bounds_check = Json::object()) {
    Json summary;
    summary["schema"] = "sublsq.run-summary/1";
    Json cfg;
    cfg["m"] = config.m;
    cfg["n_draws"] = config.n_draws;
    cfg["sigma"] = config.sigma;
    cfg["eta"] = config.eta;
    cfg["seed"] = config.seed;
    cfg["max_attempts"] = config.effective_max_attempts();
    cfg["sampling_mode"] = sampling_mode;
    switch (config.retain) {
        case EstimatorConfig::Retain::None: cfg["retain"] = "none"; break;
        case EstimatorConfig::Retain::All: cfg["retain"] = "all"; break;
        case EstimatorConfig::Retain::Reservoir:
            cfg["retain"] = "reservoir:" + std::to_string(config.reservoir_size);
            break;
    }
    summary["config"] = std::move(cfg);

    Json res;
    res["beta_bar"] = vector_to_json(result.beta_bar);
    res["cov"] = matrix_to_json(result.cov);
    res["trace_cov"] = result.trace_cov;
    res["conf_halfwidths"] = vector_to_json(result.conf_halfwidths);
    res["conf_diameter"] = result.conf_diameter;
    res["accepted"] = result.accepted;
    res["attempted"] = result.attempted;
    res["acceptance_rate"] = result.acceptance_rate;
    Json kq_table = Json::array();
    for (const auto& kq : result.k_q) {
        Json row;
        row["q"] = kq.q;
        row["value"] = kq.value;
        row["standard_error"] = kq.standard_error;
        row["sigma_bound_ok"] = kq.sigma_bound_ok;
        kq_table.push_back(std::move(row));
    }
    res["k_q"] = std::move(kq_table);
    res["retained_samples"] = result.samples.size();
    summary["result"] = std::move(res);
    summary["bounds_check"] = std::move(bounds_check);
    summary["timing_seconds"] = timing_seconds;
    return summary;
}

inline void write_json_file(const std::string& path, const Json& document) {
    std::ofstream out(path);
    if (!out) throw ParseError("io: cannot write '" + path + "'");
    out << document.dump(2) << '\n';
}

inline void write_running_average_csv(const std::string& path,
                                      const std::vector<std::pair<long long, Vector>>& series) {
    std::ofstream out(path);
    if (!out) throw ParseError("io: cannot write '" + path + "'");
    out << "accepted";
    if (!series.empty()) {
        for (Eigen::Index j = 0; j < series.front().second.size(); ++j) out << ",beta_" << j;
    }
    out << '\n';
    for (const auto& [count, mean] : series) {
        out << count;
        for (Eigen::Index j = 0; j < mean.size(); ++j) out << ',' << format_double(mean(j));
        out << '\n';
    }
}

}  // namespace sublsq::io
