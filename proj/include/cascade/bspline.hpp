#pragma once

/**
 * @file bspline.hpp
 * @brief Clamped cubic B-spline bases on (possibly non-uniform) data grids.
 *
 * Provides knot construction, Cox-de Boor basis evaluation (reference
 * recursion plus a span-local fast path), data interpolation, and
 * collocation matrix assembly for value and first-derivative rows.
 */

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cascade/errors.hpp"

namespace cascade {

/// Non-decreasing knot sequence with clamped (multiplicity degree+1) ends.
struct KnotVector {
    std::vector<double> knots;
    int degree = 3;

    double front() const { return knots.front(); }
    double back() const { return knots.back(); }

    /// Number of basis functions on this knot vector.
    int basis_count() const {
        return static_cast<int>(knots.size()) - degree - 1;
    }
};

/// Build the clamped cubic knot vector for strictly increasing data times.
///
/// Boundary knots are repeated degree+1 times; interior knots are the
/// interior data times with the second and second-to-last points omitted,
/// so the knot count equals (number of data points) + degree + 1.
inline KnotVector build_knots(std::span<const double> data_times, int degree) {
    if (degree != 3) {
        throw InvalidGridError("build_knots: only cubic splines (degree 3) are supported, got degree " +
                               std::to_string(degree));
    }
    const int j_count = static_cast<int>(data_times.size());
    if (j_count < degree + 1) {
        throw InsufficientDataError("build_knots: need at least " + std::to_string(degree + 1) +
                                    " data points, got " + std::to_string(j_count));
    }
    for (int i = 1; i < j_count; ++i) {
        if (!(data_times[i] > data_times[i - 1])) {
            throw InvalidGridError("build_knots: data times must be strictly increasing at index " +
                                   std::to_string(i));
        }
    }

    KnotVector kv;
    kv.degree = degree;
    kv.knots.reserve(static_cast<std::size_t>(j_count + degree + 1));
    for (int i = 0; i <= degree; ++i) kv.knots.push_back(data_times.front());
    // Interior data times, omitting the second and the second-to-last point.
    for (int i = 2; i <= j_count - 3; ++i) kv.knots.push_back(data_times[i]);
    for (int i = 0; i <= degree; ++i) kv.knots.push_back(data_times.back());
    return kv;
}

namespace detail {

// Degree-0 indicator. The final nontrivial span is treated as closed so the
// spline is defined at the last knot.
inline double indicator(const std::vector<double>& t, int j, double x, double t_max) {
    if (t[j] <= x && x < t[j + 1]) return 1.0;
    if (x == t_max && t[j] < t[j + 1] && t[j + 1] == t_max) return 1.0;
    return 0.0;
}

// Literal Cox-de Boor recursion; terms with zero denominators are dropped.
inline double cox_de_boor(const std::vector<double>& t, int j, int p, double x, double t_max) {
    if (p == 0) return indicator(t, j, x, t_max);
    double value = 0.0;
    const double d1 = t[j + p] - t[j];
    if (d1 != 0.0) value += (x - t[j]) / d1 * cox_de_boor(t, j, p - 1, x, t_max);
    const double d2 = t[j + p + 1] - t[j + 1];
    if (d2 != 0.0) value += (t[j + p + 1] - x) / d2 * cox_de_boor(t, j + 1, p - 1, x, t_max);
    return value;
}

inline double cox_de_boor_deriv(const std::vector<double>& t, int j, int p, double x, double t_max) {
    double value = 0.0;
    const double d1 = t[j + p] - t[j];
    if (d1 != 0.0) value += p / d1 * cox_de_boor(t, j, p - 1, x, t_max);
    const double d2 = t[j + p + 1] - t[j + 1];
    if (d2 != 0.0) value -= p / d2 * cox_de_boor(t, j + 1, p - 1, x, t_max);
    return value;
}

}  // namespace detail

/// B-spline basis: a knot vector plus the implied basis function count.
///
/// Basis indices are 0-based; B_j has support contained in
/// [knots[j], knots[j+degree+1]).
class SplineBasis {
  public:
    explicit SplineBasis(KnotVector kv) : knots_(std::move(kv)) {}

    int basis_count() const { return knots_.basis_count(); }
    int degree() const { return knots_.degree; }
    const KnotVector& knot_vector() const { return knots_; }
    double t_min() const { return knots_.front(); }
    double t_max() const { return knots_.back(); }

    /// Reference Cox-de Boor evaluation of B_j(t).
    double eval(int j, double t) const {
        check_index(j);
        check_domain(t);
        return detail::cox_de_boor(knots_.knots, j, knots_.degree, t, t_max());
    }

    /// Reference evaluation of dB_j(t)/dt.
    double eval_deriv(int j, double t) const {
        check_index(j);
        check_domain(t);
        return detail::cox_de_boor_deriv(knots_.knots, j, knots_.degree, t, t_max());
    }

    /// Index of the knot span containing t: knots[s] <= t < knots[s+1],
    /// with t == t_max mapped to the last nontrivial span.
    int find_span(double t) const {
        check_domain(t);
        const auto& t_ = knots_.knots;
        const int p = knots_.degree;
        const int last = basis_count() - 1;  // last valid span start index
        if (t >= t_[last + 1]) return last;
        auto it = std::upper_bound(t_.begin() + p, t_.begin() + last + 1, t);
        return static_cast<int>(it - t_.begin()) - 1;
    }

    /// Span-local evaluation: fills values[0..degree] with the degree+1
    /// basis functions active on the span of t, for indices
    /// span-degree .. span. All other basis functions vanish at t.
    void nonzero_basis(double t, int& span, std::span<double> values) const {
        span = find_span(t);
        const auto& kt = knots_.knots;
        const int p = knots_.degree;
        double left[kMaxDegree + 1];
        double right[kMaxDegree + 1];
        values[0] = 1.0;
        for (int r = 1; r <= p; ++r) {
            left[r] = t - kt[span + 1 - r];
            right[r] = kt[span + r] - t;
            double saved = 0.0;
            for (int k = 0; k < r; ++k) {
                const double tmp = values[k] / (right[k + 1] + left[r - k]);
                values[k] = saved + right[k + 1] * tmp;
                saved = left[r - k] * tmp;
            }
            values[r] = saved;
        }
    }

    /// Span-local first derivatives of the active basis functions,
    /// same indexing as nonzero_basis.
    void nonzero_basis_deriv(double t, int& span, std::span<double> derivs) const {
        span = find_span(t);
        const auto& kt = knots_.knots;
        const int p = knots_.degree;
        // Active degree p-1 functions on the same span.
        double lower[kMaxDegree];
        double left[kMaxDegree + 1];
        double right[kMaxDegree + 1];
        lower[0] = 1.0;
        for (int r = 1; r <= p - 1; ++r) {
            left[r] = t - kt[span + 1 - r];
            right[r] = kt[span + r] - t;
            double saved = 0.0;
            for (int k = 0; k < r; ++k) {
                const double tmp = lower[k] / (right[k + 1] + left[r - k]);
                lower[k] = saved + right[k + 1] * tmp;
                saved = left[r - k] * tmp;
            }
            lower[r] = saved;
        }
        // dB_{j,p} = p [ B_{j,p-1}/(kt[j+p]-kt[j]) - B_{j+1,p-1}/(kt[j+p+1]-kt[j+1]) ]
        // where lower[i] = B_{span-p+1+i, p-1}(t).
        for (int i = 0; i <= p; ++i) {
            const int j = span - p + i;
            double v = 0.0;
            const double d1 = kt[j + p] - kt[j];
            if (d1 != 0.0 && i > 0) v += lower[i - 1] / d1;
            const double d2 = kt[j + p + 1] - kt[j + 1];
            if (d2 != 0.0 && i < p) v -= lower[i] / d2;
            derivs[i] = p * v;
        }
    }

  private:
    static constexpr int kMaxDegree = 8;

    void check_index(int j) const {
        if (j < 0 || j >= basis_count()) {
            throw IndexError("SplineBasis: basis index " + std::to_string(j) + " out of range [0, " +
                             std::to_string(basis_count()) + ")");
        }
    }
    void check_domain(double t) const {
        if (!(t >= t_min() && t <= t_max())) {
            throw DomainError("SplineBasis: t = " + std::to_string(t) + " outside knot span [" +
                              std::to_string(t_min()) + ", " + std::to_string(t_max()) + "]");
        }
    }

    KnotVector knots_;
};

/// A basis plus coefficient vector; one species' trial function.
struct Spline {
    SplineBasis basis;
    Eigen::VectorXd coefficients;

    double value(double t) const {
        int span = 0;
        double b[16];
        const int p = basis.degree();
        basis.nonzero_basis(t, span, {b, static_cast<std::size_t>(p + 1)});
        double s = 0.0;
        for (int i = 0; i <= p; ++i) s += coefficients[span - p + i] * b[i];
        return s;
    }

    double deriv(double t) const {
        int span = 0;
        double b[16];
        const int p = basis.degree();
        basis.nonzero_basis_deriv(t, span, {b, static_cast<std::size_t>(p + 1)});
        double s = 0.0;
        for (int i = 0; i <= p; ++i) s += coefficients[span - p + i] * b[i];
        return s;
    }
};

/// Basis and derivative values tabulated at a set of evaluation times.
struct CollocationMatrices {
    Eigen::MatrixXd A;        // B_j(t_i), I x J
    Eigen::MatrixXd A_prime;  // dB_j(t_i)/dt, I x J
    std::vector<double> eval_times;
};

inline CollocationMatrices collocation(const SplineBasis& basis, std::span<const double> eval_times) {
    const int rows = static_cast<int>(eval_times.size());
    const int cols = basis.basis_count();
    const int p = basis.degree();
    CollocationMatrices out;
    out.A = Eigen::MatrixXd::Zero(rows, cols);
    out.A_prime = Eigen::MatrixXd::Zero(rows, cols);
    out.eval_times.assign(eval_times.begin(), eval_times.end());
    double b[16];
    for (int i = 0; i < rows; ++i) {
        int span = 0;
        basis.nonzero_basis(eval_times[i], span, {b, static_cast<std::size_t>(p + 1)});
        for (int k = 0; k <= p; ++k) out.A(i, span - p + k) = b[k];
        basis.nonzero_basis_deriv(eval_times[i], span, {b, static_cast<std::size_t>(p + 1)});
        for (int k = 0; k <= p; ++k) out.A_prime(i, span - p + k) = b[k];
    }
    return out;
}

/// Interpolate data on its own grid: solves the square J x J collocation
/// system so that the returned spline passes through every data point.
inline Spline interpolate(std::span<const double> data_times, std::span<const double> values,
                          const SplineBasis& basis) {
    const int j_count = basis.basis_count();
    if (static_cast<int>(data_times.size()) != j_count || values.size() != data_times.size()) {
        throw InvalidGridError("interpolate: data size does not match basis count");
    }
    CollocationMatrices coll = collocation(basis, data_times);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(coll.A);
    if (qr.rank() < j_count) {
        throw DegenerateGridError("interpolate: singular collocation matrix (rank " +
                                  std::to_string(qr.rank()) + " of " + std::to_string(j_count) + ")");
    }
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
    return Spline{basis, qr.solve(rhs)};
}

}  // namespace cascade
