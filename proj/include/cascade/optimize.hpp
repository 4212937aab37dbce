#pragma once

/**
 * @file optimize.hpp
 * @brief Derivative-free bound-constrained maximization (Nelder-Mead with
 *        box projection) and dense least-squares solving via QR.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cascade/errors.hpp"

namespace cascade {

/// Axis-aligned feasible box, lower[i] < upper[i].
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    void validate() const {
        if (lower.size() != upper.size()) throw InvalidGridError("Box: dimension mismatch");
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (!(lower[i] < upper[i])) {
                throw InvalidGridError("Box: lower >= upper at component " + std::to_string(i));
            }
        }
    }

    Eigen::VectorXd project(Eigen::VectorXd x) const {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x[i] = std::clamp(x[i], lower[i], upper[i]);
        }
        return x;
    }

    bool contains(const Eigen::VectorXd& x) const {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x[i] < lower[i] || x[i] > upper[i]) return false;
        }
        return true;
    }
};

struct OptimizerOptions {
    int max_evals = 10000;
    double x_tol = 1e-8;
    double f_tol = 1e-10;
    double initial_simplex_scale = 0.1;  // fraction of box width per coordinate
};

struct OptimizerResult {
    Eigen::VectorXd x_best;
    double f_best = -std::numeric_limits<double>::infinity();
    int evals = 0;
};

/// Maximize objective over the box starting from x0.
///
/// Standard Nelder-Mead coefficients (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5); every candidate point is projected
/// componentwise onto the box before evaluation. Non-finite objective
/// values during the search are treated as -infinity. Ties in vertex
/// ordering break toward the lower vertex index, so runs are
/// deterministic given identical inputs.
inline OptimizerResult nelder_mead_max(const std::function<double(const Eigen::VectorXd&)>& objective,
                                       const Eigen::VectorXd& x0, const Box& box,
                                       const OptimizerOptions& opts = {}) {
    box.validate();
    const int n = static_cast<int>(x0.size());
    if (n == 0 || box.lower.size() != n) throw InvalidGridError("nelder_mead_max: dimension mismatch");
    if (opts.max_evals < n + 2) throw InvalidGridError("nelder_mead_max: max_evals too small");
    if (!box.contains(x0)) throw InvalidStartError("nelder_mead_max: x0 outside box");

    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        const double f = objective(x);
        return std::isfinite(f) ? f : -std::numeric_limits<double>::infinity();
    };

    const double f0 = objective(x0);
    ++evals;
    if (!std::isfinite(f0)) throw InvalidStartError("nelder_mead_max: objective non-finite at x0");

    // Initial simplex: x0 plus one inward-flipped step per coordinate.
    std::vector<Eigen::VectorXd> x(n + 1, x0);
    std::vector<double> f(n + 1);
    f[0] = f0;
    for (int i = 0; i < n; ++i) {
        double step = opts.initial_simplex_scale * (box.upper[i] - box.lower[i]);
        if (x0[i] + step > box.upper[i]) step = -step;
        x[i + 1][i] = x0[i] + step;
        x[i + 1] = box.project(std::move(x[i + 1]));
        f[i + 1] = eval(x[i + 1]);
    }

    std::vector<int> order(n + 1);
    std::iota(order.begin(), order.end(), 0);
    auto sort_vertices = [&] {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] > f[b]; });
    };

    while (evals < opts.max_evals) {
        sort_vertices();
        const int best = order[0];
        const int worst = order[n];
        const int second_worst = order[n - 1];

        // Convergence: relative spread of f plus simplex diameter around the best.
        const double f_spread = std::abs(f[best] - f[worst]);
        double x_diam = 0.0;
        for (int i = 0; i <= n; ++i) x_diam = std::max(x_diam, (x[i] - x[best]).lpNorm<Eigen::Infinity>());
        if (std::isfinite(f[worst]) &&
            (f_spread <= opts.f_tol * (std::abs(f[best]) + std::abs(f[worst])) || x_diam <= opts.x_tol)) {
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i) {
            if (i != worst) centroid += x[i];
        }
        centroid /= n;

        const Eigen::VectorXd xr = box.project(centroid + (centroid - x[worst]));
        const double fr = eval(xr);

        if (fr > f[best]) {
            const Eigen::VectorXd xe = box.project(centroid + 2.0 * (centroid - x[worst]));
            const double fe = eval(xe);
            if (fe > fr) {
                x[worst] = xe;
                f[worst] = fe;
            } else {
                x[worst] = xr;
                f[worst] = fr;
            }
        } else if (fr > f[second_worst]) {
            x[worst] = xr;
            f[worst] = fr;
        } else {
            const bool outside = fr > f[worst];
            const Eigen::VectorXd base = outside ? xr : x[worst];
            const Eigen::VectorXd xc = box.project(centroid + 0.5 * (base - centroid));
            const double fc = eval(xc);
            if (fc > (outside ? fr : f[worst])) {
                x[worst] = xc;
                f[worst] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    const int v = order[i];
                    x[v] = box.project(x[order[0]] + 0.5 * (x[v] - x[order[0]]));
                    f[v] = eval(x[v]);
                    if (evals >= opts.max_evals) break;
                }
            }
        }
    }

    sort_vertices();
    return OptimizerResult{x[order[0]], f[order[0]], evals};
}

/// Minimize ||M c - rhs||_2 for a tall full-column-rank M via
/// column-pivoted Householder QR. Rank deficiency is reported with the
/// numerical rank rather than silently producing a minimum-norm solution.
inline Eigen::VectorXd least_squares_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs) {
    if (m.rows() < m.cols()) throw InvalidGridError("least_squares_solve: need rows >= cols");
    if (m.rows() != rhs.size()) throw InvalidGridError("least_squares_solve: rhs length mismatch");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    if (qr.rank() < m.cols()) {
        throw RankDeficiencyError("least_squares_solve: rank-deficient matrix (rank " +
                                      std::to_string(qr.rank()) + " of " + std::to_string(m.cols()) + ")",
                                  qr.rank());
    }
    return qr.solve(rhs);
}

}  // namespace cascade
