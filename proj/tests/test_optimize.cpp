#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cascade/optimize.hpp"

using namespace cascade;

namespace {

Box box1d(double lo, double hi) {
    Box b;
    b.lower = Eigen::VectorXd::Constant(1, lo);
    b.upper = Eigen::VectorXd::Constant(1, hi);
    return b;
}

Box box2d(double lo, double hi) {
    Box b;
    b.lower = Eigen::VectorXd::Constant(2, lo);
    b.upper = Eigen::VectorXd::Constant(2, hi);
    return b;
}

}  // namespace

TEST_CASE("maximizes a concave parabola in the interior") {
    auto f = [](const Eigen::VectorXd& x) { return -(x[0] - 2.0) * (x[0] - 2.0); };
    const auto r = nelder_mead_max(f, Eigen::VectorXd::Constant(1, 4.0), box1d(0.0, 5.0));
    CHECK_THAT(r.x_best[0], Catch::Matchers::WithinAbs(2.0, 1e-5));
    CHECK(r.f_best >= f(Eigen::VectorXd::Constant(1, 4.0)));
}

TEST_CASE("projection pins the maximum to the box boundary") {
    auto f = [](const Eigen::VectorXd& x) { return -(x[0] - 2.0) * (x[0] - 2.0); };
    const auto r = nelder_mead_max(f, Eigen::VectorXd::Constant(1, 4.0), box1d(3.0, 5.0));
    CHECK_THAT(r.x_best[0], Catch::Matchers::WithinAbs(3.0, 1e-5));
}

TEST_CASE("negated Rosenbrock reaches the analytic optimum") {
    auto f = [](const Eigen::VectorXd& x) {
        const double a = x[0] - 1.0;
        const double b = x[1] - x[0] * x[0];
        return -(a * a + 100.0 * b * b);
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    OptimizerOptions opts;
    opts.max_evals = 20000;
    const auto r = nelder_mead_max(f, x0, box2d(-5.0, 5.0), opts);
    CHECK_THAT(r.x_best[0], Catch::Matchers::WithinAbs(1.0, 1e-3));
    CHECK_THAT(r.x_best[1], Catch::Matchers::WithinAbs(1.0, 1e-3));
    CHECK(r.f_best > -1e-6);
    // Fine local grid around (1,1) never beats the returned point by more
    // than the convergence tolerance.
    for (int i = -5; i <= 5; ++i) {
        for (int j = -5; j <= 5; ++j) {
            Eigen::VectorXd probe(2);
            probe << 1.0 + i * 1e-4, 1.0 + j * 1e-4;
            REQUIRE(f(probe) <= r.f_best + 1e-6);
        }
    }
}

TEST_CASE("invalid starts are rejected, mid-search non-finites are survived") {
    auto nan_at_start = [](const Eigen::VectorXd&) { return std::nan(""); };
    CHECK_THROWS_AS(
        nelder_mead_max(nan_at_start, Eigen::VectorXd::Constant(1, 1.0), box1d(0.0, 5.0)),
        InvalidStartError);
    CHECK_THROWS_AS(
        nelder_mead_max([](const Eigen::VectorXd& x) { return -x[0] * x[0]; },
                        Eigen::VectorXd::Constant(1, 9.0), box1d(0.0, 5.0)),
        InvalidStartError);

    auto partial = [](const Eigen::VectorXd& x) {
        if (x[0] > 2.5) return std::nan("");
        return -(x[0] - 2.0) * (x[0] - 2.0);
    };
    const auto r = nelder_mead_max(partial, Eigen::VectorXd::Constant(1, 1.0), box1d(0.0, 5.0));
    CHECK_THAT(r.x_best[0], Catch::Matchers::WithinAbs(2.0, 1e-5));
}

TEST_CASE("every evaluated point stays inside the box") {
    Box box = box2d(-1.0, 1.0);
    auto f = [&](const Eigen::VectorXd& x) {
        REQUIRE(box.contains(x));
        return -(x[0] * x[0] + x[1] * x[1]) + 3.0 * x[0];
    };
    Eigen::VectorXd x0(2);
    x0 << 0.9, -0.9;
    const auto r = nelder_mead_max(f, x0, box);
    CHECK_THAT(r.x_best[0], Catch::Matchers::WithinAbs(1.0, 1e-5));
    CHECK_THAT(r.x_best[1], Catch::Matchers::WithinAbs(0.0, 1e-5));
}

TEST_CASE("argmax is scale invariant") {
    for (double scale : {1.0, 13.0, 1e6, 1e-4}) {
        auto f = [scale](const Eigen::VectorXd& x) {
            return scale * -((x[0] - 0.7) * (x[0] - 0.7) + (x[1] + 0.3) * (x[1] + 0.3) + 1.0);
        };
        Eigen::VectorXd x0(2);
        x0 << -0.5, 0.5;
        const auto r = nelder_mead_max(f, x0, box2d(-2.0, 2.0));
        static Eigen::VectorXd reference;
        if (scale == 1.0) {
            reference = r.x_best;
        } else {
            REQUIRE(r.x_best[0] == reference[0]);
            REQUIRE(r.x_best[1] == reference[1]);
        }
    }
}

TEST_CASE("least squares solves identity and consistent stacked systems") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd rhs(4);
    rhs << 1, -2, 3, 0.5;
    CHECK((least_squares_solve(id, rhs) - rhs).norm() == 0.0);

    std::mt19937 gen(17);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd square(5, 5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) square(i, j) = dist(gen);
    }
    square += 5.0 * Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd b(5);
    for (int i = 0; i < 5; ++i) b[i] = dist(gen);
    const Eigen::VectorXd exact = square.partialPivLu().solve(b);  // square-solve oracle

    Eigen::MatrixXd stacked(10, 5);
    stacked << square, square;
    Eigen::VectorXd stacked_rhs(10);
    stacked_rhs << b, b;
    const Eigen::VectorXd c = least_squares_solve(stacked, stacked_rhs);
    CHECK((c - exact).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("least squares satisfies the normal equations and optimality") {
    std::mt19937 gen(23);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd m(50, 5);
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 5; ++j) m(i, j) = dist(gen);
    }
    Eigen::VectorXd rhs(50);
    for (int i = 0; i < 50; ++i) rhs[i] = dist(gen);

    const Eigen::VectorXd c = least_squares_solve(m, rhs);
    CHECK((m.transpose() * (m * c - rhs)).norm() <= 1e-8 * rhs.norm());

    const double base = (m * c - rhs).norm();
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd d(5);
        for (int j = 0; j < 5; ++j) d[j] = dist(gen);
        d *= 1e-4 / d.norm();
        REQUIRE((m * (c + d) - rhs).norm() >= base);
    }
}

TEST_CASE("rank deficiency is reported with the numerical rank") {
    Eigen::MatrixXd m(6, 3);
    m.setZero();
    m.col(0).setOnes();
    m.col(1).setOnes();  // duplicate column
    m.col(2).setLinSpaced(6, 0.0, 5.0);
    try {
        least_squares_solve(m, Eigen::VectorXd::Ones(6));
        FAIL("expected RankDeficiencyError");
    } catch (const RankDeficiencyError& e) {
        CHECK(e.rank == 2);
    }
}
