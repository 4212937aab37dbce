// Command-line front end for the parameter-cascading library.
//
// Subcommands:
//   simulate  sample a model solution plus noise into a dataset CSV
//   fit       run the generalized-profiling cascade on a dataset
//   interp    emit the pure interpolant and its derivative on a dense grid
//   plot      render trace/data files as static SVG charts
//
// Exit codes: 0 success, 1 runtime/fit failure, 2 usage or validation
// failure.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascade/io.hpp"
#include "cascade/models.hpp"
#include "cascade/noise.hpp"
#include "cascade/profiling.hpp"
#include "cascade/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<double> parse_number_list(const std::string& csv, const std::string& flag) {
    std::vector<double> out;
    for (const auto& field : cascade::split_csv_line(csv)) {
        try {
            out.push_back(cascade::parse_double(field, 0));
        } catch (const cascade::ParseError&) {
            throw cascade::UsageError("invalid number '" + field + "' in " + flag);
        }
    }
    return out;
}

ordered_json load_config(const std::string& path) {
    if (path.empty()) return ordered_json::object();
    std::ifstream is(path);
    if (!is) throw cascade::UsageError("cannot open config '" + path + "'");
    try {
        return ordered_json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw cascade::UsageError("config '" + path + "': " + e.what());
    }
}

// Config file values apply only where the flag was not given on the
// command line (flags win).
template <typename T>
void apply_config(const CLI::Option* opt, const ordered_json& cfg, const char* key, T& value) {
    if (opt->count() == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

struct TraceFile {
    std::vector<double> t;
    std::vector<std::vector<double>> f;   // per species
    std::vector<std::vector<double>> xi;  // per species
};

TraceFile read_trace_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw cascade::UsageError("cannot open trace '" + path + "'");
    TraceFile trace;
    std::string line;
    long line_number = 0;
    std::vector<int> f_cols, xi_cols;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = cascade::split_csv_line(line);
        if (!have_header) {
            if (fields.empty() || fields[0] != "t") {
                throw cascade::UsageError("trace '" + path + "': expected header starting with 't'");
            }
            for (int c = 1; c < static_cast<int>(fields.size()); ++c) {
                if (fields[c].starts_with("f_")) f_cols.push_back(c);
                else if (fields[c].starts_with("xi_")) xi_cols.push_back(c);
                else throw cascade::UsageError("trace '" + path + "': unknown column '" + fields[c] + "'");
            }
            if (xi_cols.empty()) {
                throw cascade::UsageError("trace '" + path + "': no xi columns");
            }
            trace.f.resize(f_cols.size());
            trace.xi.resize(xi_cols.size());
            have_header = true;
            continue;
        }
        trace.t.push_back(cascade::parse_double(fields.at(0), line_number));
        for (std::size_t i = 0; i < f_cols.size(); ++i) {
            trace.f[i].push_back(cascade::parse_double(fields.at(f_cols[i]), line_number));
        }
        for (std::size_t i = 0; i < xi_cols.size(); ++i) {
            trace.xi[i].push_back(cascade::parse_double(fields.at(xi_cols[i]), line_number));
        }
    }
    if (trace.t.empty()) throw cascade::UsageError("trace '" + path + "': empty xi trace");
    return trace;
}

const char* kSeriesColors[] = {"#c0392b", "#16a085", "#8e44ad"};

void write_plot_files(const TraceFile& trace, const cascade::Dataset* dataset,
                      const std::string& out_dir, const std::string& prefix) {
    cascade::SvgChart spline_chart("spline fit", "t", "f(t)");
    for (std::size_t s = 0; s < trace.f.size(); ++s) {
        spline_chart.add({trace.t, trace.f[s], kSeriesColors[s % 3], false});
    }
    if (dataset) {
        for (int s = 0; s < dataset->species_count(); ++s) {
            spline_chart.add({dataset->times, dataset->values[s], "#2980b9", true});
        }
    }
    cascade::write_text_file(out_dir + "/" + prefix + "_spline.svg", spline_chart.render());

    cascade::SvgChart xi_chart("discrepancy", "t", "xi(t)");
    for (std::size_t s = 0; s < trace.xi.size(); ++s) {
        xi_chart.add({trace.t, trace.xi[s], kSeriesColors[s % 3], false});
    }
    cascade::write_text_file(out_dir + "/" + prefix + "_xi.svg", xi_chart.render());
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw cascade::UsageError("cannot create output directory '" + out_dir + "'");
}

int run(int argc, char** argv) {
    CLI::App app{"Generalized profiling (parameter cascading) for ODE parameter estimation"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "generate a synthetic noisy dataset CSV");
    std::string sim_model = "newton", sim_noise = "gaussian", sim_out = "dataset.csv", sim_config;
    std::string sim_theta, sim_init, sim_times;
    double sim_sigma = 1.0, sim_t_start = 0.0, sim_t_end = 100.0;
    int sim_points = 11;
    std::uint64_t sim_seed = 1;
    auto* sim_model_opt = sim->add_option("--model", sim_model, "model name");
    auto* sim_noise_opt = sim->add_option("--noise", sim_noise, "gaussian|lognormal");
    auto* sim_theta_opt = sim->add_option("--theta", sim_theta, "true ODE parameters, comma separated");
    auto* sim_init_opt = sim->add_option("--init", sim_init, "true initial state, comma separated");
    auto* sim_sigma_opt = sim->add_option("--sigma", sim_sigma, "true noise scale");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "rng seed");
    auto* sim_out_opt = sim->add_option("--out", sim_out, "output CSV path");
    auto* sim_times_opt = sim->add_option("--times", sim_times, "explicit observation times");
    auto* sim_tstart_opt = sim->add_option("--t-start", sim_t_start, "first observation time");
    auto* sim_tend_opt = sim->add_option("--t-end", sim_t_end, "last observation time");
    auto* sim_points_opt = sim->add_option("--points", sim_points, "number of observations");
    sim->add_option("--config", sim_config, "JSON config file (flags win)");

    // ---- fit ----
    auto* fit_cmd = app.add_subcommand("fit", "run the profiling cascade on a dataset");
    std::string fit_model = "newton", fit_noise = "gaussian", fit_data, fit_out = "out", fit_config;
    std::string fit_theta0, fit_lower, fit_upper;
    int fit_iterations = 10, fit_grid_k = 1001;
    std::uint64_t fit_seed = 1;
    bool fit_plot = false;
    auto* fit_model_opt = fit_cmd->add_option("--model", fit_model, "model name");
    auto* fit_noise_opt = fit_cmd->add_option("--noise", fit_noise, "gaussian|lognormal");
    auto* fit_data_opt = fit_cmd->add_option("--data", fit_data, "dataset CSV path");
    auto* fit_out_opt = fit_cmd->add_option("--out", fit_out, "output directory");
    auto* fit_seed_opt = fit_cmd->add_option("--seed", fit_seed, "seed echoed into the report");
    auto* fit_iter_opt = fit_cmd->add_option("--iterations", fit_iterations, "cascade iterations");
    auto* fit_k_opt = fit_cmd->add_option("--grid-k", fit_grid_k, "model enforcement grid size");
    auto* fit_theta0_opt = fit_cmd->add_option("--theta0", fit_theta0, "starting ODE parameters");
    auto* fit_lower_opt = fit_cmd->add_option("--lower", fit_lower, "parameter lower bounds");
    auto* fit_upper_opt = fit_cmd->add_option("--upper", fit_upper, "parameter upper bounds");
    auto* fit_plot_opt = fit_cmd->add_flag("--plot", fit_plot, "also emit SVG charts");
    fit_cmd->add_option("--config", fit_config, "JSON config file (flags win)");

    // ---- interp ----
    auto* interp = app.add_subcommand("interp", "emit the pure interpolant on a dense grid");
    std::string interp_data, interp_out = "out";
    int interp_samples = 1001;
    bool interp_plot = false;
    interp->add_option("--data", interp_data, "dataset CSV path")->required();
    interp->add_option("--out", interp_out, "output directory");
    interp->add_option("--samples", interp_samples, "dense grid size");
    interp->add_flag("--plot", interp_plot, "also emit SVG charts");

    // ---- plot ----
    auto* plot = app.add_subcommand("plot", "render trace/data files as SVG");
    std::string plot_trace, plot_data, plot_out = "out";
    plot->add_option("--trace", plot_trace, "trace CSV (t,f_i,...,xi_i,...)")->required();
    plot->add_option("--data", plot_data, "optional dataset CSV overlay");
    plot->add_option("--out", plot_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    if (*sim) {
        const ordered_json cfg = load_config(sim_config);
        apply_config(sim_model_opt, cfg, "model", sim_model);
        apply_config(sim_noise_opt, cfg, "noise", sim_noise);
        apply_config(sim_theta_opt, cfg, "theta", sim_theta);
        apply_config(sim_init_opt, cfg, "init", sim_init);
        apply_config(sim_sigma_opt, cfg, "sigma", sim_sigma);
        apply_config(sim_seed_opt, cfg, "seed", sim_seed);
        apply_config(sim_out_opt, cfg, "out", sim_out);
        apply_config(sim_times_opt, cfg, "times", sim_times);
        apply_config(sim_tstart_opt, cfg, "t_start", sim_t_start);
        apply_config(sim_tend_opt, cfg, "t_end", sim_t_end);
        apply_config(sim_points_opt, cfg, "points", sim_points);

        const cascade::OdeModel& model = cascade::find_model(sim_model);
        const cascade::NoiseKind kind = cascade::parse_noise_kind(sim_noise);
        const std::vector<double> theta = parse_number_list(sim_theta, "--theta");
        const std::vector<double> init = parse_number_list(sim_init, "--init");
        if (static_cast<int>(theta.size()) != static_cast<int>(model.param_names.size())) {
            throw cascade::UsageError("--theta needs " + std::to_string(model.param_names.size()) +
                                      " values for model '" + model.name + "'");
        }
        if (static_cast<int>(init.size()) != model.dimension) {
            throw cascade::UsageError("--init needs " + std::to_string(model.dimension) +
                                      " values for model '" + model.name + "'");
        }
        std::vector<double> times;
        if (!sim_times.empty()) {
            times = parse_number_list(sim_times, "--times");
        } else {
            if (sim_points < 4) throw cascade::UsageError("--points must be at least 4");
            for (int i = 0; i < sim_points; ++i) {
                times.push_back(sim_t_start + (sim_t_end - sim_t_start) * i / (sim_points - 1));
            }
        }

        const auto clean = cascade::solve_model(model, theta, init, times);
        cascade::Dataset dataset;
        dataset.times = times;
        dataset.species_names = model.species_names;
        dataset.values.assign(model.dimension, std::vector<double>(times.size()));
        const cascade::NoiseModel noise{kind, sim_sigma};
        cascade::Rng rng(sim_seed);
        for (std::size_t j = 0; j < times.size(); ++j) {
            for (int s = 0; s < model.dimension; ++s) {
                // A clean value of exactly zero stays zero under
                // multiplicative noise (the limit of clean -> 0+).
                if (kind == cascade::NoiseKind::multiplicative_lognormal && clean[j][s] == 0.0) {
                    dataset.values[s][j] = 0.0;
                } else {
                    dataset.values[s][j] = cascade::sample(noise, clean[j][s], rng);
                }
            }
        }

        std::vector<std::string> comments;
        comments.push_back("model: " + model.name);
        comments.push_back("noise: " + std::string(cascade::noise_kind_name(kind)) +
                           " sigma=" + cascade::format_double(sim_sigma));
        std::string theta_str, init_str;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            theta_str += (i ? "," : "") + cascade::format_double(theta[i]);
        }
        for (std::size_t i = 0; i < init.size(); ++i) {
            init_str += (i ? "," : "") + cascade::format_double(init[i]);
        }
        comments.push_back("theta: " + theta_str);
        comments.push_back("init: " + init_str);
        comments.push_back("seed: " + std::to_string(sim_seed));
        cascade::write_dataset_csv(sim_out, dataset, comments);
        return 0;
    }

    if (*fit_cmd) {
        const ordered_json cfg = load_config(fit_config);
        apply_config(fit_model_opt, cfg, "model", fit_model);
        apply_config(fit_noise_opt, cfg, "noise", fit_noise);
        apply_config(fit_data_opt, cfg, "data", fit_data);
        apply_config(fit_out_opt, cfg, "out", fit_out);
        apply_config(fit_seed_opt, cfg, "seed", fit_seed);
        apply_config(fit_iter_opt, cfg, "iterations", fit_iterations);
        apply_config(fit_k_opt, cfg, "grid_k", fit_grid_k);
        apply_config(fit_plot_opt, cfg, "plot", fit_plot);
        if (fit_theta0_opt->count() == 0 && cfg.contains("theta0")) {
            std::string joined;
            for (const auto& v : cfg.at("theta0")) {
                joined += (joined.empty() ? "" : ",") + cascade::format_double(v.get<double>());
            }
            fit_theta0 = joined;
        }
        auto bounds_from = [&](const CLI::Option* opt, const char* key, std::string& value) {
            if (opt->count() == 0 && cfg.contains("bounds") && cfg.at("bounds").contains(key)) {
                std::string joined;
                for (const auto& v : cfg.at("bounds").at(key)) {
                    joined += (joined.empty() ? "" : ",") + cascade::format_double(v.get<double>());
                }
                value = joined;
            }
        };
        bounds_from(fit_lower_opt, "lower", fit_lower);
        bounds_from(fit_upper_opt, "upper", fit_upper);

        if (fit_data.empty()) throw cascade::UsageError("fit: --data is required");
        const cascade::OdeModel& model = cascade::find_model(fit_model);
        const cascade::NoiseKind kind = cascade::parse_noise_kind(fit_noise);
        const cascade::Dataset dataset = cascade::read_dataset_csv(fit_data);
        if (dataset.species_count() != model.dimension) {
            throw cascade::UsageError("dataset '" + fit_data + "' has " +
                                      std::to_string(dataset.species_count()) +
                                      " species but model '" + model.name + "' expects " +
                                      std::to_string(model.dimension));
        }

        cascade::FitConfig fc;
        fc.iterations = fit_iterations;
        fc.grid_points = fit_grid_k;
        if (!fit_theta0.empty()) fc.theta0 = parse_number_list(fit_theta0, "--theta0");
        if (!fit_lower.empty() || !fit_upper.empty()) {
            if (fit_lower.empty() || fit_upper.empty()) {
                throw cascade::UsageError("fit: --lower and --upper must be given together");
            }
            const auto lo = parse_number_list(fit_lower, "--lower");
            const auto hi = parse_number_list(fit_upper, "--upper");
            cascade::Box box;
            box.lower = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
            box.upper = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
            fc.bounds = box;
        }

        ordered_json echo;
        echo["command"] = "fit";
        echo["model"] = model.name;
        echo["noise"] = cascade::noise_kind_name(kind);
        echo["data"] = fit_data;
        echo["seed"] = fit_seed;
        echo["iterations"] = fc.iterations;
        echo["grid_k"] = fc.grid_points;

        ensure_out_dir(fit_out);
        try {
            cascade::FitResult result = cascade::fit(dataset, model, kind, fc);
            cascade::write_text_file(fit_out + "/report.json",
                                     cascade::report_json(result, echo, model.param_names).dump(2) + "\n");
            cascade::write_trace_csv(fit_out + "/trace.csv", result);
            if (fit_plot) {
                write_plot_files(read_trace_csv(fit_out + "/trace.csv"), &dataset, fit_out, "fit");
            }
        } catch (const cascade::FitAbort& abort) {
            ordered_json report = cascade::report_json(abort.partial, echo, model.param_names);
            report["error"] = abort.what();
            cascade::write_text_file(fit_out + "/report.json", report.dump(2) + "\n");
            std::cerr << "error: " << abort.what() << "\n";
            return 1;
        }
        return 0;
    }

    if (*interp) {
        const cascade::Dataset dataset = cascade::read_dataset_csv(interp_data);
        const cascade::SplineBasis basis(cascade::build_knots(dataset.times, 3));
        std::vector<cascade::Spline> splines;
        for (int s = 0; s < dataset.species_count(); ++s) {
            splines.push_back(cascade::interpolate(dataset.times, dataset.values[s], basis));
        }
        ensure_out_dir(interp_out);
        const auto grid =
            cascade::GridConfig::uniform(dataset.times.front(), dataset.times.back(), interp_samples);
        std::ofstream os(interp_out + "/interp.csv", std::ios::binary);
        if (!os) throw cascade::UsageError("cannot open '" + interp_out + "/interp.csv' for writing");
        os << "t";
        for (int s = 1; s <= dataset.species_count(); ++s) os << ",f_" << s;
        for (int s = 1; s <= dataset.species_count(); ++s) os << ",df_" << s;
        os << "\n";
        for (double t : grid.grid) {
            os << cascade::format_double(t);
            for (const auto& sp : splines) os << "," << cascade::format_double(sp.value(t));
            for (const auto& sp : splines) os << "," << cascade::format_double(sp.deriv(t));
            os << "\n";
        }
        if (interp_plot) {
            cascade::SvgChart chart("interpolant", "t", "f(t)");
            for (std::size_t s = 0; s < splines.size(); ++s) {
                std::vector<double> values;
                for (double t : grid.grid) values.push_back(splines[s].value(t));
                chart.add({grid.grid, values, kSeriesColors[s % 3], false});
            }
            for (int s = 0; s < dataset.species_count(); ++s) {
                chart.add({dataset.times, dataset.values[s], "#2980b9", true});
            }
            cascade::write_text_file(interp_out + "/interp.svg", chart.render());
        }
        return 0;
    }

    if (*plot) {
        const TraceFile trace = read_trace_csv(plot_trace);
        std::optional<cascade::Dataset> dataset;
        if (!plot_data.empty()) dataset = cascade::read_dataset_csv(plot_data);
        ensure_out_dir(plot_out);
        write_plot_files(trace, dataset ? &*dataset : nullptr, plot_out, "plot");
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const cascade::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cascade::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
