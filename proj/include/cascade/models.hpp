#pragma once

/**
 * @file models.hpp
 * @brief ODE model abstraction, built-in models, and solution oracles.
 *
 * Built-in models (registry names): "newton", "logistic", "chain2",
 * "chain3". Each carries its right-hand side, default optimizer bounds,
 * and, where available, a closed-form solution. rk4_solve provides an
 * independent numerical oracle.
 */

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/errors.hpp"

namespace cascade {

/// ODE model: dimension, parameter metadata, right-hand side, and an
/// optional closed-form solution used for simulation and validation.
struct OdeModel {
    using Rhs = std::function<void(double t, std::span<const double> state,
                                   std::span<const double> params, std::span<double> out)>;
    using Exact = std::function<void(double t, std::span<const double> params,
                                     std::span<const double> initial_state, std::span<double> out)>;

    std::string name;
    int dimension = 1;
    std::vector<std::string> param_names;                   // ODE parameters only
    std::vector<std::pair<double, double>> param_bounds;    // default optimizer box
    std::vector<std::string> species_names;
    Rhs rhs;
    Exact exact;  // empty when no closed form is provided
};

/// Full parameter vector for simulation: ODE parameters, initial state,
/// and the noise scale sigma.
struct FullParameterVector {
    std::vector<double> ode_params;
    std::vector<double> initial_state;
    double sigma = 1.0;
};

// ---- scalar right-hand sides -------------------------------------------

inline double rhs_newton(double /*t*/, double temperature, double alpha, double ambient) {
    return -alpha * (temperature - ambient);
}

inline double rhs_logistic(double /*t*/, double density, double lambda, double kappa) {
    return lambda * density * (1.0 - density / kappa);
}

/// Sequential decay chain: dC1 = -r1 C1, dC2 = r1 C1 - r2 C2, and when a
/// third species is present dC3 = r2 C2 - r3 C3.
inline void rhs_chain(double /*t*/, std::span<const double> concentrations,
                      std::span<const double> rates, std::span<double> out) {
    const std::size_t n = concentrations.size();
    if ((n != 2 && n != 3) || rates.size() != n || out.size() != n) {
        throw InvalidModelError("rhs_chain: state/rate dimension mismatch");
    }
    out[0] = -rates[0] * concentrations[0];
    out[1] = rates[0] * concentrations[0] - rates[1] * concentrations[1];
    if (n == 3) out[2] = rates[1] * concentrations[1] - rates[2] * concentrations[2];
}

// ---- closed-form solutions ---------------------------------------------

inline double exact_newton(double t, double t0_temperature, double alpha, double ambient) {
    return (t0_temperature - ambient) * std::exp(-alpha * t) + ambient;
}

inline double exact_logistic(double t, double c0, double lambda, double kappa) {
    return kappa * c0 / (c0 + (kappa - c0) * std::exp(-lambda * t));
}

namespace detail {

/// phi(x) = (e^x - 1)/x, continuous through x = 0.
inline double expm1_over_x(double x) {
    if (std::abs(x) < 1e-5) {
        return 1.0 + x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)));
    }
    return std::expm1(x) / x;
}

}  // namespace detail

/// Two-species decay chain solution. C2 is evaluated through the kernel
/// phi(x) = (e^x - 1)/x, which makes the r1 == r2 branch and the general
/// branch one continuous formula free of cancellation near r1 = r2.
inline void exact_chain2(double t, double r1, double r2, double c1_0, double c2_0,
                         std::span<double> out) {
    out[0] = c1_0 * std::exp(-r1 * t);
    out[1] = c2_0 * std::exp(-r2 * t) +
             r1 * c1_0 * t * std::exp(-r2 * t) * detail::expm1_over_x(-(r1 - r2) * t);
}

// ---- numerical oracle ---------------------------------------------------

/// Classical fixed-step RK4 trajectory sampled at t_grid. Each grid
/// interval is subdivided so no internal step exceeds max_step.
inline std::vector<std::vector<double>> rk4_solve(const OdeModel& model,
                                                  std::span<const double> ode_params,
                                                  std::span<const double> initial_state,
                                                  std::span<const double> t_grid,
                                                  double max_step = 0.01) {
    const int s = model.dimension;
    if (static_cast<int>(initial_state.size()) != s) {
        throw InvalidModelError("rk4_solve: initial state dimension mismatch");
    }
    std::vector<std::vector<double>> trajectory;
    trajectory.reserve(t_grid.size());
    std::vector<double> y(initial_state.begin(), initial_state.end());
    std::vector<double> k1(s), k2(s), k3(s), k4(s), tmp(s);
    auto check_finite = [&](const std::vector<double>& v) {
        for (double x : v) {
            if (!std::isfinite(x)) throw DivergenceError("rk4_solve: non-finite state");
        }
    };
    double t = t_grid.empty() ? 0.0 : t_grid[0];
    if (!t_grid.empty()) trajectory.push_back(y);
    for (std::size_t g = 1; g < t_grid.size(); ++g) {
        const double t_next = t_grid[g];
        if (!(t_next > t)) throw InvalidGridError("rk4_solve: t_grid must be increasing");
        const int steps = std::max(1, static_cast<int>(std::ceil((t_next - t) / max_step)));
        const double h = (t_next - t) / steps;
        for (int i = 0; i < steps; ++i) {
            model.rhs(t, y, ode_params, k1);
            for (int d = 0; d < s; ++d) tmp[d] = y[d] + 0.5 * h * k1[d];
            model.rhs(t + 0.5 * h, tmp, ode_params, k2);
            for (int d = 0; d < s; ++d) tmp[d] = y[d] + 0.5 * h * k2[d];
            model.rhs(t + 0.5 * h, tmp, ode_params, k3);
            for (int d = 0; d < s; ++d) tmp[d] = y[d] + h * k3[d];
            model.rhs(t + h, tmp, ode_params, k4);
            for (int d = 0; d < s; ++d) {
                y[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            }
            t += h;
        }
        t = t_next;
        check_finite(y);
        trajectory.push_back(y);
    }
    return trajectory;
}

// ---- registry -----------------------------------------------------------

inline const std::vector<OdeModel>& builtin_models() {
    static const std::vector<OdeModel> models = [] {
        std::vector<OdeModel> m;

        OdeModel newton;
        newton.name = "newton";
        newton.dimension = 1;
        newton.param_names = {"alpha", "T_a"};
        newton.param_bounds = {{1e-6, 10.0}, {-273.15, 1000.0}};
        newton.species_names = {"T"};
        newton.rhs = [](double t, std::span<const double> y, std::span<const double> p,
                        std::span<double> out) { out[0] = rhs_newton(t, y[0], p[0], p[1]); };
        newton.exact = [](double t, std::span<const double> p, std::span<const double> y0,
                          std::span<double> out) { out[0] = exact_newton(t, y0[0], p[0], p[1]); };
        m.push_back(std::move(newton));

        OdeModel logistic;
        logistic.name = "logistic";
        logistic.dimension = 1;
        logistic.param_names = {"lambda", "kappa"};
        logistic.param_bounds = {{1e-6, 10.0}, {1e-3, 1e5}};
        logistic.species_names = {"C"};
        logistic.rhs = [](double t, std::span<const double> y, std::span<const double> p,
                          std::span<double> out) { out[0] = rhs_logistic(t, y[0], p[0], p[1]); };
        logistic.exact = [](double t, std::span<const double> p, std::span<const double> y0,
                            std::span<double> out) { out[0] = exact_logistic(t, y0[0], p[0], p[1]); };
        m.push_back(std::move(logistic));

        OdeModel chain2;
        chain2.name = "chain2";
        chain2.dimension = 2;
        chain2.param_names = {"r1", "r2"};
        chain2.param_bounds = {{1e-6, 10.0}, {1e-6, 10.0}};
        chain2.species_names = {"C1", "C2"};
        chain2.rhs = [](double t, std::span<const double> y, std::span<const double> p,
                        std::span<double> out) { rhs_chain(t, y, p, out); };
        chain2.exact = [](double t, std::span<const double> p, std::span<const double> y0,
                          std::span<double> out) { exact_chain2(t, p[0], p[1], y0[0], y0[1], out); };
        m.push_back(std::move(chain2));

        OdeModel chain3;
        chain3.name = "chain3";
        chain3.dimension = 3;
        chain3.param_names = {"r1", "r2", "r3"};
        chain3.param_bounds = {{1e-6, 10.0}, {1e-6, 10.0}, {1e-6, 10.0}};
        chain3.species_names = {"C1", "C2", "C3"};
        chain3.rhs = [](double t, std::span<const double> y, std::span<const double> p,
                        std::span<double> out) { rhs_chain(t, y, p, out); };
        // No closed form registered; simulation falls back to RK4.
        m.push_back(std::move(chain3));

        return m;
    }();
    return models;
}

inline const OdeModel& find_model(std::string_view name) {
    for (const OdeModel& m : builtin_models()) {
        if (m.name == name) return m;
    }
    throw UsageError("unknown model '" + std::string(name) +
                     "' (known: newton, logistic, chain2, chain3)");
}

/// Sample the model solution on a grid: closed form when registered,
/// otherwise RK4.
inline std::vector<std::vector<double>> solve_model(const OdeModel& model,
                                                    std::span<const double> ode_params,
                                                    std::span<const double> initial_state,
                                                    std::span<const double> t_grid) {
    if (model.exact) {
        std::vector<std::vector<double>> out;
        out.reserve(t_grid.size());
        std::vector<double> y(model.dimension);
        for (double t : t_grid) {
            model.exact(t, ode_params, initial_state, y);
            out.push_back(y);
        }
        return out;
    }
    return rk4_solve(model, ode_params, initial_state, t_grid);
}

}  // namespace cascade
