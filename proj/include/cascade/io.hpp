#pragma once

/**
 * @file io.hpp
 * @brief Dataset CSV schema, trace CSV, and the JSON run report.
 *
 * All numeric output goes through format_double (shortest round-trip
 * form via std::to_chars), so files are locale-independent and
 * byte-stable across runs.
 */

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cascade/errors.hpp"
#include "cascade/profiling.hpp"

namespace cascade {

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, long line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError("invalid number '" + std::string(s) + "' on line " + std::to_string(line),
                         line);
    }
    return v;
}

// ---- dataset CSV --------------------------------------------------------
// Schema: optional '#' comment lines, then a header `t,<species>...`,
// then one row per observation time.

inline void write_dataset_csv(std::ostream& os, const Dataset& dataset,
                              const std::vector<std::string>& comments) {
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "t";
    for (const auto& name : dataset.species_names) os << "," << name;
    os << "\n";
    for (int j = 0; j < dataset.observation_count(); ++j) {
        os << format_double(dataset.times[j]);
        for (int s = 0; s < dataset.species_count(); ++s) {
            os << "," << format_double(dataset.values[s][j]);
        }
        os << "\n";
    }
}

inline void write_dataset_csv(const std::string& path, const Dataset& dataset,
                              const std::vector<std::string>& comments) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open '" + path + "' for writing");
    write_dataset_csv(os, dataset, comments);
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

inline Dataset read_dataset_csv(std::istream& is) {
    Dataset dataset;
    std::string line;
    long line_number = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_csv_line(line);
        if (!have_header) {
            if (fields.size() < 2 || fields[0] != "t") {
                throw ParseError("expected header 't,<species>...' on line " +
                                     std::to_string(line_number),
                                 line_number);
            }
            dataset.species_names.assign(fields.begin() + 1, fields.end());
            dataset.values.resize(dataset.species_names.size());
            have_header = true;
            continue;
        }
        if (fields.size() != dataset.species_names.size() + 1) {
            throw ParseError("expected " + std::to_string(dataset.species_names.size() + 1) +
                                 " fields on line " + std::to_string(line_number),
                             line_number);
        }
        dataset.times.push_back(parse_double(fields[0], line_number));
        for (std::size_t s = 0; s < dataset.values.size(); ++s) {
            dataset.values[s].push_back(parse_double(fields[s + 1], line_number));
        }
    }
    if (!have_header) throw ParseError("empty dataset file", 0);
    dataset.validate();
    return dataset;
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("cannot open dataset '" + path + "'");
    return read_dataset_csv(is);
}

// ---- trace CSV ----------------------------------------------------------
// Schema: t,f_1,...,f_S,xi_1,...,xi_S sampled on the enforcement grid.

inline void write_trace_csv(const std::string& path, const FitResult& result) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open '" + path + "' for writing");
    const int s_count = static_cast<int>(result.splines.size());
    os << "t";
    for (int s = 1; s <= s_count; ++s) os << ",f_" << s;
    for (int s = 1; s <= s_count; ++s) os << ",xi_" << s;
    os << "\n";
    for (std::size_t k = 0; k < result.grid.size(); ++k) {
        os << format_double(result.grid[k]);
        for (int s = 0; s < s_count; ++s) {
            os << "," << format_double(result.splines[s].value(result.grid[k]));
        }
        for (int s = 0; s < s_count; ++s) {
            os << "," << format_double(result.grid_times_xi[s][k]);
        }
        os << "\n";
    }
}

// ---- run report ---------------------------------------------------------

inline nlohmann::ordered_json report_json(const FitResult& result, const nlohmann::ordered_json& config_echo,
                                          const std::vector<std::string>& param_names) {
    nlohmann::ordered_json report;
    report["config"] = config_echo;
    nlohmann::ordered_json iterations = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < result.theta_history.size(); ++i) {
        nlohmann::ordered_json it;
        it["iteration"] = i;
        nlohmann::ordered_json theta;
        for (std::size_t pn = 0; pn < param_names.size(); ++pn) {
            theta[param_names[pn]] = result.theta_history[i][static_cast<Eigen::Index>(pn)];
        }
        theta["sigma"] = result.theta_history[i][static_cast<Eigen::Index>(param_names.size())];
        it["theta"] = theta;
        it["data_loss"] = result.loss_history[i].data_loss;
        it["model_loss"] = result.loss_history[i].model_loss;
        it["penalized_loss"] = result.loss_history[i].penalized_loss;
        it["data_weight"] = result.weight_history[i].data_weight;
        it["model_weight"] = result.weight_history[i].model_weight;
        iterations.push_back(it);
    }
    report["iterations"] = iterations;
    nlohmann::ordered_json final_params;
    for (std::size_t pn = 0; pn < param_names.size(); ++pn) {
        final_params[param_names[pn]] = result.theta_history.back()[static_cast<Eigen::Index>(pn)];
    }
    final_params["sigma"] = result.sigma;
    report["final_parameters"] = final_params;
    report["initial_condition_estimates"] = result.initial_condition_estimates;
    report["warnings"] = {{"lognormal_guard_hits", result.lognormal_guard_hits},
                          {"skipped_observations", result.skipped_observations}};
    return report;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open '" + path + "' for writing");
    os << content;
}

}  // namespace cascade
