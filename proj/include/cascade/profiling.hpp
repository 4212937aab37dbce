#pragma once

/**
 * @file profiling.hpp
 * @brief Generalized-profiling (parameter cascading) engine.
 *
 * Fits B-spline trial functions to noisy ODE observations without solving
 * the ODE: the splines are iteratively re-fit through a stacked
 * least-squares system that balances data matching against enforcement of
 * the governing equations, while the ODE parameters are updated by
 * derivative-free maximization of a penalized log-likelihood.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cascade/bspline.hpp"
#include "cascade/errors.hpp"
#include "cascade/models.hpp"
#include "cascade/noise.hpp"
#include "cascade/optimize.hpp"

namespace cascade {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Observations: one shared strictly increasing time grid, one value row
/// per species.
struct Dataset {
    std::vector<double> times;                // length J
    std::vector<std::vector<double>> values;  // S rows, each length J
    std::vector<std::string> species_names;

    int observation_count() const { return static_cast<int>(times.size()); }
    int species_count() const { return static_cast<int>(values.size()); }

    void validate() const {
        if (observation_count() < 4) {
            throw InsufficientDataError("Dataset: cubic splines need at least 4 observations");
        }
        for (int j = 1; j < observation_count(); ++j) {
            if (!(times[j] > times[j - 1])) {
                throw InvalidGridError("Dataset: times must be strictly increasing");
            }
        }
        for (const auto& row : values) {
            if (static_cast<int>(row.size()) != observation_count()) {
                throw InvalidGridError("Dataset: value row length does not match time grid");
            }
        }
    }
};

/// Model-enforcement grid: K times spanning the observation window.
struct GridConfig {
    int point_count = 1001;
    std::vector<double> grid;

    static GridConfig uniform(double t_first, double t_last, int k) {
        if (k < 2) throw InvalidGridError("GridConfig: need at least 2 enforcement points");
        GridConfig g;
        g.point_count = k;
        g.grid.resize(k);
        for (int i = 0; i < k; ++i) {
            g.grid[i] = t_first + (t_last - t_first) * static_cast<double>(i) / (k - 1);
        }
        g.grid.back() = t_last;
        return g;
    }
};

struct WeightState {
    double data_weight = 1.0;   // w_d
    double model_weight = 1.0;  // w_m
};

struct FitConfig {
    int iterations = 10;
    int grid_points = 1001;
    OptimizerOptions optimizer;
    std::vector<double> theta0;        // ODE parameter start; empty -> box midpoints
    std::optional<Box> bounds;         // ODE parameter box; empty -> model defaults
    std::pair<double, double> sigma_bounds{1e-6, 1e3};
    double lognormal_floor_scale = 1e-8;  // floor = scale * max observation
};

struct IterationLosses {
    double data_loss = 0.0;       // l_d
    double model_loss = 0.0;      // l_m
    double penalized_loss = 0.0;  // l = w_d l_d + w_m l_m
};

struct FitResult {
    std::vector<Spline> splines;
    std::vector<Eigen::VectorXd> theta_history;  // iterations+1 entries, sigma appended last
    std::vector<IterationLosses> loss_history;   // losses at each recorded theta
    std::vector<IterationLosses> weight_setting_losses;  // losses the weights were derived from
    std::vector<WeightState> weight_history;
    std::vector<std::vector<double>> grid_times_xi;  // per species, |grid| discrepancy samples
    std::vector<double> initial_condition_estimates;  // f_s at the first observation time
    std::vector<double> grid;
    long lognormal_guard_hits = 0;   // clamped non-positive spline predictions
    long skipped_observations = 0;   // non-positive observations excluded from lognormal l_d
    double sigma = 0.0;
    std::vector<double> final_theta() const {
        const auto& v = theta_history.back();
        return {v.data(), v.data() + v.size()};
    }
};

/// Thrown when an iteration step fails; carries the history accumulated
/// before the failure.
struct FitAbort : FitError {
    FitAbort(const std::string& what, FitResult history)
        : FitError(what), partial(std::move(history)) {}
    FitResult partial;
};

// ---- losses -------------------------------------------------------------

/// Per-species ODE residual xi_s(t) = df_s/dt - rhs_s(t, f(t), theta).
inline std::vector<double> discrepancy(std::span<const Spline> splines, const OdeModel& model,
                                       std::span<const double> theta_ode, double t) {
    const int s = model.dimension;
    std::vector<double> state(s), rhs(s), xi(s);
    for (int i = 0; i < s; ++i) state[i] = splines[i].value(t);
    model.rhs(t, state, theta_ode, rhs);
    for (int i = 0; i < s; ++i) xi[i] = splines[i].deriv(t) - rhs[i];
    return xi;
}

/// l_m = -(1/K) sum_s sum_k xi_s(t_k)^2; zero exactly when every grid
/// discrepancy vanishes.
inline double model_loss(std::span<const Spline> splines, const OdeModel& model,
                         std::span<const double> theta_ode, const GridConfig& grid) {
    double acc = 0.0;
    for (double t : grid.grid) {
        for (double xi : discrepancy(splines, model, theta_ode, t)) acc += xi * xi;
    }
    return -acc / static_cast<double>(grid.grid.size());
}

/// l_d = sum_s sum_j log phi(obs_{s,j}; prediction, sigma^2).
inline double data_loss(std::span<const Spline> splines, const Dataset& dataset,
                        const NoiseModel& noise) {
    double acc = 0.0;
    for (int s = 0; s < dataset.species_count(); ++s) {
        for (int j = 0; j < dataset.observation_count(); ++j) {
            const double pred = splines[s].value(dataset.times[j]);
            const double term = log_density(noise, dataset.values[s][j], pred);
            if (!std::isfinite(term)) {
                throw FitError("data_loss: non-finite density term at species " + std::to_string(s) +
                               ", observation " + std::to_string(j));
            }
            acc += term;
        }
    }
    return acc;
}

inline double penalized_loss(double data_loss_value, double model_loss_value, const WeightState& w) {
    return w.data_weight * data_loss_value + w.model_weight * model_loss_value;
}

/// Reciprocal-magnitude balancing: w = |1/l| per term, capped at 1e12 when
/// a loss is exactly zero (perfect fit).
inline WeightState update_weights(double data_loss_value, double model_loss_value) {
    constexpr double weight_cap = 1e12;
    WeightState w;
    w.data_weight = data_loss_value == 0.0 ? weight_cap : 1.0 / std::abs(data_loss_value);
    w.model_weight = model_loss_value == 0.0 ? weight_cap : 1.0 / std::abs(model_loss_value);
    return w;
}

/// First-iteration rule: w_d = 1, w_m = |1/l_m|.
inline WeightState first_iteration_weights(double model_loss_value) {
    constexpr double weight_cap = 1e12;
    WeightState w;
    w.data_weight = 1.0;
    w.model_weight = model_loss_value == 0.0 ? weight_cap : 1.0 / std::abs(model_loss_value);
    return w;
}

// ---- engine -------------------------------------------------------------

class ProfilingEngine {
  public:
    ProfilingEngine(Dataset dataset, const OdeModel& model, NoiseKind noise_kind, FitConfig config)
        : dataset_(std::move(dataset)),
          model_(model),
          noise_kind_(noise_kind),
          config_(std::move(config)),
          basis_(build_knots(dataset_.times, 3)),
          grid_(GridConfig::uniform(dataset_.times.front(), dataset_.times.back(),
                                    config_.grid_points)),
          data_coll_(collocation(basis_, dataset_.times)),
          grid_coll_(collocation(basis_, grid_.grid)) {
        dataset_.validate();
        if (dataset_.species_count() != model_.dimension) {
            throw UsageError("dataset has " + std::to_string(dataset_.species_count()) +
                             " species but model '" + model_.name + "' expects " +
                             std::to_string(model_.dimension));
        }
        max_observation_ = 0.0;
        for (const auto& row : dataset_.values) {
            for (double v : row) max_observation_ = std::max(max_observation_, std::abs(v));
        }
        bounds_ = config_.bounds.value_or(default_bounds());
        bounds_.validate();
        if (bounds_.lower.size() != static_cast<Eigen::Index>(model_.param_names.size())) {
            throw UsageError("bounds dimension does not match model parameter count");
        }
    }

    const GridConfig& grid() const { return grid_; }
    const SplineBasis& basis() const { return basis_; }

    /// The stacked per-species system [w_d A; w_m A'] c = [w_d b; w_m b'],
    /// with the model-block right side evaluated on the current splines
    /// (Picard lag). The right side has one column per species.
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_stacked_system(
        std::span<const Spline> splines, std::span<const double> theta_ode,
        const WeightState& w) const {
        const int j_count = dataset_.observation_count();
        const int k_count = static_cast<int>(grid_.grid.size());
        const int n_basis = basis_.basis_count();
        const int s_count = model_.dimension;

        Eigen::MatrixXd stacked(j_count + k_count, n_basis);
        stacked.topRows(j_count) = w.data_weight * data_coll_.A;
        stacked.bottomRows(k_count) = w.model_weight * grid_coll_.A_prime;

        Eigen::MatrixXd rhs(j_count + k_count, s_count);
        for (int s = 0; s < s_count; ++s) {
            for (int j = 0; j < j_count; ++j) {
                rhs(j, s) = w.data_weight * dataset_.values[s][j];
            }
        }
        std::vector<double> state(s_count), f(s_count);
        for (int k = 0; k < k_count; ++k) {
            for (int s = 0; s < s_count; ++s) state[s] = splines[s].value(grid_.grid[k]);
            model_.rhs(grid_.grid[k], state, theta_ode, f);
            for (int s = 0; s < s_count; ++s) rhs(j_count + k, s) = w.model_weight * f[s];
        }
        return {std::move(stacked), std::move(rhs)};
    }

    /// One smoothing update of every species' coefficient vector.
    ///
    /// The solve caps the weight ratio at 1e6: beyond that the lighter block
    /// would fall below QR's working precision (the matrix turns numerically
    /// rank deficient once the ratio passes ~1e8) while the solution itself
    /// changes by O(ratio^-2). The recorded weights are not altered.
    std::vector<Spline> spline_update(std::span<const Spline> splines,
                                      std::span<const double> theta_ode,
                                      const WeightState& w) const {
        constexpr double max_ratio = 1e6;
        WeightState solve_w = w;
        if (solve_w.model_weight > solve_w.data_weight * max_ratio) {
            solve_w.data_weight = solve_w.model_weight / max_ratio;
        } else if (solve_w.data_weight > solve_w.model_weight * max_ratio) {
            solve_w.model_weight = solve_w.data_weight / max_ratio;
        }
        auto [stacked, rhs] = build_stacked_system(splines, theta_ode, solve_w);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
        if (qr.rank() < stacked.cols()) {
            throw RankDeficiencyError("spline_update: degenerate stacked system (rank " +
                                          std::to_string(qr.rank()) + ")",
                                      qr.rank());
        }
        Eigen::MatrixXd coeffs = qr.solve(rhs);
        std::vector<Spline> updated;
        updated.reserve(splines.size());
        for (int s = 0; s < model_.dimension; ++s) {
            updated.push_back(Spline{basis_, coeffs.col(s)});
        }
        return updated;
    }

    /// Model-only parameter estimate: maximize l_m over the ODE parameters
    /// (sigma plays no role since l_m is independent of it).
    Eigen::VectorXd optimize_theta_model_only(std::span<const Spline> splines,
                                              const Eigen::VectorXd& start) const {
        const Cache cache = make_cache(splines);
        auto objective = [&](const Eigen::VectorXd& theta) { return cached_model_loss(cache, theta); };
        return nelder_mead_max(objective, start, bounds_, config_.optimizer).x_best;
    }

    /// Penalized estimate: maximize w_d l_d + w_m l_m jointly over the ODE
    /// parameters and sigma (appended as the last component).
    Eigen::VectorXd optimize_theta_penalized(std::span<const Spline> splines, const WeightState& w,
                                             const Eigen::VectorXd& start_with_sigma) const {
        const Cache cache = make_cache(splines);
        const int p = static_cast<int>(model_.param_names.size());
        Box full_box;
        full_box.lower.resize(p + 1);
        full_box.upper.resize(p + 1);
        full_box.lower.head(p) = bounds_.lower;
        full_box.upper.head(p) = bounds_.upper;
        full_box.lower[p] = config_.sigma_bounds.first;
        full_box.upper[p] = config_.sigma_bounds.second;
        auto objective = [&](const Eigen::VectorXd& x) {
            const double lm = cached_model_loss(cache, x.head(p));
            const double ld = cached_data_loss(cache, x[p], nullptr, nullptr);
            return penalized_loss(ld, lm, w);
        };
        return nelder_mead_max(objective, full_box.project(start_with_sigma), full_box,
                               config_.optimizer)
            .x_best;
    }

    FitResult fit() {
        const int p = static_cast<int>(model_.param_names.size());
        FitResult result;
        result.grid = grid_.grid;

        // (0) over-fit: interpolate each species.
        std::vector<Spline> splines;
        splines.reserve(model_.dimension);
        for (int s = 0; s < model_.dimension; ++s) {
            splines.push_back(interpolate(dataset_.times, dataset_.values[s], basis_));
        }

        // (1) model-only estimate on the interpolant. Without a user start
        // the box is coarse-scanned first: the l_m landscape has a plateau
        // wherever the rate parameters vanish, and a simplex started there
        // cannot escape it.
        const Eigen::VectorXd start =
            config_.theta0.empty()
                ? coarse_theta_scan(make_cache(splines))
                : Eigen::Map<const Eigen::VectorXd>(config_.theta0.data(), config_.theta0.size());
        if (static_cast<int>(start.size()) != p) {
            throw UsageError("theta0 dimension does not match model parameter count");
        }
        Eigen::VectorXd theta_ode = optimize_theta_model_only(splines, bounds_.project(start));

        const double lm0 = cached_model_loss(make_cache(splines), theta_ode);
        WeightState weights = first_iteration_weights(lm0);

        // History entry 0: the l_m-only step. Sigma is back-filled once the
        // first smoothing spline exists.
        Eigen::VectorXd theta_full(p + 1);
        theta_full.head(p) = theta_ode;
        theta_full[p] = config_.sigma_bounds.first;
        result.theta_history.push_back(theta_full);
        result.weight_history.push_back(weights);
        result.weight_setting_losses.push_back({0.0, lm0, 0.0});
        result.loss_history.push_back({0.0, lm0, weights.model_weight * lm0});

        for (int iter = 1; iter <= config_.iterations; ++iter) {
          try {
            theta_ode = theta_full.head(p);
            splines = spline_update(splines, as_span(theta_ode), weights);

            if (iter == 1) {
                const double sigma0 = initial_sigma(splines);
                theta_full[p] = std::clamp(sigma0, config_.sigma_bounds.first, config_.sigma_bounds.second);
                result.theta_history[0][p] = theta_full[p];
            }

            const Cache cache = make_cache(splines);
            const double lm = cached_model_loss(cache, theta_full.head(p));
            const double ld =
                cached_data_loss(cache, theta_full[p], &result.lognormal_guard_hits,
                                 &result.skipped_observations);
            weights = update_weights(ld, lm);
            result.weight_setting_losses.push_back({ld, lm, penalized_loss(ld, lm, weights)});

            theta_full = optimize_theta_penalized(splines, weights, theta_full);

            const double lm_end = cached_model_loss(cache, theta_full.head(p));
            const double ld_end = cached_data_loss(cache, theta_full[p], nullptr, nullptr);
            result.theta_history.push_back(theta_full);
            result.weight_history.push_back(weights);
            result.loss_history.push_back({ld_end, lm_end, penalized_loss(ld_end, lm_end, weights)});
          } catch (const std::exception& e) {
            result.splines = splines;
            throw FitAbort("fit aborted at iteration " + std::to_string(iter) + ": " + e.what(),
                           std::move(result));
          }
        }

        result.splines = splines;
        result.sigma = theta_full[p];
        theta_ode = theta_full.head(p);
        result.grid_times_xi.assign(model_.dimension, std::vector<double>(grid_.grid.size()));
        for (std::size_t k = 0; k < grid_.grid.size(); ++k) {
            const auto xi = discrepancy(splines, model_, as_span(theta_ode), grid_.grid[k]);
            for (int s = 0; s < model_.dimension; ++s) result.grid_times_xi[s][k] = xi[s];
        }
        for (int s = 0; s < model_.dimension; ++s) {
            result.initial_condition_estimates.push_back(splines[s].value(dataset_.times.front()));
        }
        return result;
    }

  private:
    // Spline samples at the data times and on the enforcement grid; the
    // splines are frozen during each parameter search, so every objective
    // evaluation reduces to O(S K) arithmetic on these tables.
    struct Cache {
        Eigen::MatrixXd pred_data;    // J x S
        Eigen::MatrixXd value_grid;   // K x S
        Eigen::MatrixXd deriv_grid;   // K x S
    };

    Cache make_cache(std::span<const Spline> splines) const {
        Cache c;
        const int s_count = model_.dimension;
        c.pred_data.resize(dataset_.observation_count(), s_count);
        c.value_grid.resize(static_cast<int>(grid_.grid.size()), s_count);
        c.deriv_grid.resize(static_cast<int>(grid_.grid.size()), s_count);
        for (int s = 0; s < s_count; ++s) {
            c.pred_data.col(s) = data_coll_.A * splines[s].coefficients;
            c.value_grid.col(s) = grid_coll_.A * splines[s].coefficients;
            c.deriv_grid.col(s) = grid_coll_.A_prime * splines[s].coefficients;
        }
        return c;
    }

    double cached_model_loss(const Cache& cache, Eigen::Ref<const Eigen::VectorXd> theta_ode) const {
        const std::span<const double> theta{theta_ode.data(),
                                            static_cast<std::size_t>(theta_ode.size())};
        const int s_count = model_.dimension;
        const int k_count = static_cast<int>(grid_.grid.size());
        std::vector<double> state(s_count), f(s_count);
        double acc = 0.0;
        for (int k = 0; k < k_count; ++k) {
            for (int s = 0; s < s_count; ++s) state[s] = cache.value_grid(k, s);
            model_.rhs(grid_.grid[k], state, theta, f);
            for (int s = 0; s < s_count; ++s) {
                const double xi = cache.deriv_grid(k, s) - f[s];
                acc += xi * xi;
            }
        }
        return -acc / static_cast<double>(k_count);
    }

    // Lognormal handling during fitting: spline predictions below the floor
    // are clamped to it, and non-positive observations are excluded from
    // the sum. Both events increment counters surfaced in the FitResult.
    double cached_data_loss(const Cache& cache, double sigma, long* guard_hits,
                            long* skipped) const {
        const NoiseModel noise{noise_kind_, sigma};
        const double floor = config_.lognormal_floor_scale * max_observation_;
        double acc = 0.0;
        for (int s = 0; s < model_.dimension; ++s) {
            for (int j = 0; j < dataset_.observation_count(); ++j) {
                double obs = dataset_.values[s][j];
                double pred = cache.pred_data(j, s);
                if (noise_kind_ == NoiseKind::multiplicative_lognormal) {
                    if (!(obs > 0.0)) {
                        if (skipped) ++*skipped;
                        continue;
                    }
                    if (pred < floor) {
                        pred = floor;
                        if (guard_hits) ++*guard_hits;
                    }
                }
                acc += log_density(noise, obs, pred);
            }
        }
        return acc;
    }

    // Moment start for sigma: RMS residual of the first smoothing spline
    // (RMS log-residual under lognormal noise, positive points only).
    double initial_sigma(std::span<const Spline> splines) const {
        double acc = 0.0;
        long count = 0;
        const double floor = config_.lognormal_floor_scale * max_observation_;
        for (int s = 0; s < model_.dimension; ++s) {
            for (int j = 0; j < dataset_.observation_count(); ++j) {
                const double obs = dataset_.values[s][j];
                const double pred = splines[s].value(dataset_.times[j]);
                if (noise_kind_ == NoiseKind::multiplicative_lognormal) {
                    if (!(obs > 0.0)) continue;
                    const double r = std::log(obs) - std::log(std::max(pred, floor));
                    acc += r * r;
                } else {
                    const double r = obs - pred;
                    acc += r * r;
                }
                ++count;
            }
        }
        return count > 0 ? std::sqrt(acc / static_cast<double>(count)) : 0.0;
    }

    // Best l_m point on a per-dimension candidate grid: log-spaced when the
    // range is strictly positive, linear otherwise.
    Eigen::VectorXd coarse_theta_scan(const Cache& cache) const {
        const int p = static_cast<int>(bounds_.lower.size());
        const int n = p <= 2 ? 9 : (p == 3 ? 7 : 5);
        std::vector<std::vector<double>> candidates(p);
        for (int i = 0; i < p; ++i) {
            const double lo = bounds_.lower[i], hi = bounds_.upper[i];
            for (int k = 0; k < n; ++k) {
                const double u = static_cast<double>(k) / (n - 1);
                candidates[i].push_back(lo > 0.0 ? lo * std::pow(hi / lo, u)
                                                 : lo + (hi - lo) * u);
            }
        }
        Eigen::VectorXd best = (bounds_.lower + bounds_.upper) / 2.0;
        double best_loss = -std::numeric_limits<double>::infinity();
        std::vector<int> idx(p, 0);
        Eigen::VectorXd theta(p);
        while (true) {
            for (int i = 0; i < p; ++i) theta[i] = candidates[i][idx[i]];
            const double loss = cached_model_loss(cache, theta);
            if (std::isfinite(loss) && loss > best_loss) {
                best_loss = loss;
                best = theta;
            }
            int d = 0;
            while (d < p && ++idx[d] == n) idx[d++] = 0;
            if (d == p) break;
        }
        return best;
    }

    Box default_bounds() const {
        Box b;
        const auto n = static_cast<Eigen::Index>(model_.param_bounds.size());
        b.lower.resize(n);
        b.upper.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            b.lower[i] = model_.param_bounds[i].first;
            b.upper[i] = model_.param_bounds[i].second;
        }
        return b;
    }

    Dataset dataset_;
    const OdeModel& model_;
    NoiseKind noise_kind_;
    FitConfig config_;
    SplineBasis basis_;
    GridConfig grid_;
    CollocationMatrices data_coll_;
    CollocationMatrices grid_coll_;
    Box bounds_;
    double max_observation_ = 0.0;
};

/// Convenience wrapper running the whole cascade.
inline FitResult fit(Dataset dataset, const OdeModel& model, NoiseKind noise_kind,
                     const FitConfig& config) {
    ProfilingEngine engine(std::move(dataset), model, noise_kind, config);
    return engine.fit();
}

}  // namespace cascade
