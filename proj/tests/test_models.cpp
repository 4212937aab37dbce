#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "cascade/models.hpp"

using namespace cascade;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = a + (b - a) * i / (n - 1);
    return t;
}

}  // namespace

TEST_CASE("right-hand sides evaluate by direct substitution") {
    CHECK(rhs_newton(0.0, 180.0, 0.05, 20.0) == -8.0);
    CHECK(rhs_newton(0.0, 20.0, 0.3, 20.0) == 0.0);
    CHECK(rhs_newton(0.0, 20.0, 0.05, 180.0) == 8.0);

    CHECK(rhs_logistic(0.0, 100.0, 0.1, 100.0) == 0.0);
    CHECK(rhs_logistic(0.0, 0.0, 0.1, 100.0) == 0.0);
    CHECK(rhs_logistic(0.0, 50.0, 0.1, 100.0) == 2.5);

    std::array<double, 2> out2{};
    const std::array<double, 2> c2 = {100.0, 0.0};
    const std::array<double, 2> r2 = {0.06, 0.04};
    rhs_chain(0.0, c2, r2, out2);
    CHECK(out2[0] == -6.0);
    CHECK(out2[1] == 6.0);

    const std::array<double, 2> zero2 = {0.0, 0.0};
    rhs_chain(0.0, zero2, r2, out2);
    CHECK(out2[0] == 0.0);
    CHECK(out2[1] == 0.0);

    std::array<double, 3> out3{};
    const std::array<double, 3> c3 = {0.0, 50.0, 0.0};
    const std::array<double, 3> r3 = {0.06, 0.04, 0.02};
    rhs_chain(0.0, c3, r3, out3);
    CHECK(out3[0] == 0.0);
    CHECK(out3[1] == -2.0);
    CHECK(out3[2] == 2.0);

    CHECK_THROWS_AS(rhs_chain(0.0, c3, r2, out3), InvalidModelError);
}

TEST_CASE("closed-form solutions at pinned points") {
    CHECK(exact_newton(0.0, 180.0, 0.05, 20.0) == 180.0);
    CHECK_THAT(exact_newton(200.0, 180.0, 0.05, 20.0), Catch::Matchers::WithinAbs(20.0, 1e-2));
    // 20 + 160 e^{-1}
    CHECK_THAT(exact_newton(20.0, 180.0, 0.05, 20.0),
               Catch::Matchers::WithinAbs(20.0 + 160.0 * std::exp(-1.0), 1e-12));

    CHECK(exact_logistic(0.0, 5.0, 0.1, 100.0) == 5.0);
    CHECK_THAT(exact_logistic(300.0, 5.0, 0.1, 100.0), Catch::Matchers::WithinAbs(100.0, 1e-9));
    CHECK(exact_logistic(300.0, 5.0, 0.1, 100.0) < 100.0);
    CHECK_THAT(exact_logistic(30.0, 5.0, 0.1, 100.0),
               Catch::Matchers::WithinAbs(500.0 / (5.0 + 95.0 * std::exp(-3.0)), 1e-12));
}

TEST_CASE("chain2 solution handles the equal-rates branch") {
    std::array<double, 2> out{};
    exact_chain2(0.0, 0.06, 0.04, 100.0, 7.0, out);
    CHECK(out[0] == 100.0);
    CHECK_THAT(out[1], Catch::Matchers::WithinAbs(7.0, 1e-12));

    // r1 == r2: C2(t) = r C1(0) t e^{-rt} for C2(0) = 0.
    exact_chain2(10.0, 0.05, 0.05, 100.0, 0.0, out);
    CHECK_THAT(out[1],
               Catch::Matchers::WithinRel(0.05 * 100.0 * 10.0 * std::exp(-0.5), 1e-12));

    // Near-degenerate rates agree with the equal-rates branch.
    std::array<double, 2> near{};
    exact_chain2(10.0, 0.05, 0.05 + 1e-12, 100.0, 0.0, near);
    CHECK(std::abs(near[1] - out[1]) <= 1e-8 * std::abs(out[1]));
}

TEST_CASE("chain2 is continuous across r1 == r2") {
    std::array<double, 2> at_equal{}, perturbed{};
    exact_chain2(25.0, 0.05, 0.05, 100.0, 3.0, at_equal);
    // The solution genuinely depends on r2 (dC2/dr2 ~ -t C2), so the bound
    // must scale with eps: continuity means the gap vanishes linearly, with
    // no jump between the two formula branches.
    for (double eps : {1e-13, 1e-11, 1e-9, 1e-7}) {
        const double bound = (1e-9 + 2000.0 * eps) * std::abs(at_equal[1]);
        exact_chain2(25.0, 0.05, 0.05 + eps, 100.0, 3.0, perturbed);
        REQUIRE(std::abs(perturbed[1] - at_equal[1]) <= bound);
        exact_chain2(25.0, 0.05, 0.05 - eps, 100.0, 3.0, perturbed);
        REQUIRE(std::abs(perturbed[1] - at_equal[1]) <= bound);
    }
}

TEST_CASE("exact solutions satisfy their ODEs (finite differences)") {
    const double h = 1e-6;
    for (double t = 0.5; t < 100.0; t += 2.5) {
        const double fd_newton =
            (exact_newton(t + h, 180, 0.05, 20) - exact_newton(t - h, 180, 0.05, 20)) / (2 * h);
        const double rhs_n = rhs_newton(t, exact_newton(t, 180, 0.05, 20), 0.05, 20);
        REQUIRE(std::abs(fd_newton - rhs_n) <= 1e-6 * std::max(1.0, std::abs(rhs_n)));

        const double fd_log =
            (exact_logistic(t + h, 5, 0.1, 100) - exact_logistic(t - h, 5, 0.1, 100)) / (2 * h);
        const double rhs_l = rhs_logistic(t, exact_logistic(t, 5, 0.1, 100), 0.1, 100);
        REQUIRE(std::abs(fd_log - rhs_l) <= 1e-6 * std::max(1.0, std::abs(rhs_l)));

        std::array<double, 2> y_minus{}, y_plus{}, y{}, rhs_c{};
        exact_chain2(t - h, 0.06, 0.04, 100, 0, y_minus);
        exact_chain2(t + h, 0.06, 0.04, 100, 0, y_plus);
        exact_chain2(t, 0.06, 0.04, 100, 0, y);
        rhs_chain(t, y, std::array<double, 2>{0.06, 0.04}, rhs_c);
        for (int s = 0; s < 2; ++s) {
            const double fd = (y_plus[s] - y_minus[s]) / (2 * h);
            REQUIRE(std::abs(fd - rhs_c[s]) <= 1e-6 * std::max(1.0, std::abs(rhs_c[s])));
        }
    }
}

TEST_CASE("chain2 mass is non-increasing and states stay non-negative") {
    std::array<double, 2> prev{}, cur{};
    exact_chain2(0.0, 0.06, 0.04, 100.0, 5.0, prev);
    for (double t = 1.0; t <= 200.0; t += 1.0) {
        exact_chain2(t, 0.06, 0.04, 100.0, 5.0, cur);
        REQUIRE(cur[0] >= 0.0);
        REQUIRE(cur[1] >= 0.0);
        REQUIRE(cur[0] + cur[1] <= prev[0] + prev[1] + 1e-12);
        prev = cur;
    }
}

TEST_CASE("rk4 matches the closed forms") {
    const auto grid = linspace(0.0, 100.0, 101);

    const OdeModel& newton = find_model("newton");
    const auto traj_n = rk4_solve(newton, std::vector<double>{0.05, 20.0},
                                  std::vector<double>{180.0}, grid, 0.01);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        REQUIRE(std::abs(traj_n[i][0] - exact_newton(grid[i], 180, 0.05, 20)) <= 1e-8);
    }

    const OdeModel& chain2 = find_model("chain2");
    const auto traj_c = rk4_solve(chain2, std::vector<double>{0.06, 0.04},
                                  std::vector<double>{100.0, 0.0}, grid, 0.01);
    std::array<double, 2> exact{};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        exact_chain2(grid[i], 0.06, 0.04, 100.0, 0.0, exact);
        REQUIRE(std::abs(traj_c[i][0] - exact[0]) <= 1e-8);
        REQUIRE(std::abs(traj_c[i][1] - exact[1]) <= 1e-8);
    }
}

TEST_CASE("rk4 keeps a zero right-hand side constant") {
    OdeModel frozen;
    frozen.name = "frozen";
    frozen.dimension = 1;
    frozen.rhs = [](double, std::span<const double>, std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    const auto traj = rk4_solve(frozen, {}, std::vector<double>{42.0}, linspace(0, 10, 11), 0.1);
    for (const auto& y : traj) REQUIRE(y[0] == 42.0);
}

TEST_CASE("rk4 error shrinks ~16x when the step halves") {
    const OdeModel& newton = find_model("newton");
    const auto grid = linspace(0.0, 100.0, 2);
    auto error_at = [&](double h) {
        const auto traj = rk4_solve(newton, std::vector<double>{0.05, 20.0},
                                    std::vector<double>{180.0}, grid, h);
        return std::abs(traj[1][0] - exact_newton(100.0, 180, 0.05, 20));
    };
    const double e1 = error_at(1.0);
    const double e2 = error_at(0.5);
    const double ratio = e1 / e2;
    CHECK(ratio > 10.0);
    CHECK(ratio < 24.0);
}

TEST_CASE("model registry exposes the four built-ins") {
    for (const char* name : {"newton", "logistic", "chain2", "chain3"}) {
        const OdeModel& m = find_model(name);
        CHECK(m.name == name);
        CHECK(m.param_names.size() == static_cast<std::size_t>(m.dimension == 1 ? 2 : m.dimension));
        for (const auto& [lo, hi] : m.param_bounds) CHECK(lo < hi);
    }
    CHECK_THROWS_AS(find_model("heat_equation"), UsageError);
}
