#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "cascade/noise.hpp"

using namespace cascade;

TEST_CASE("vanishing noise returns the clean value") {
    Rng rng(5);
    const NoiseModel tiny_gauss{NoiseKind::additive_gaussian, 1e-12};
    CHECK_THAT(sample(tiny_gauss, 50.0, rng), Catch::Matchers::WithinRel(50.0, 1e-8));
    const NoiseModel tiny_ln{NoiseKind::multiplicative_lognormal, 1e-12};
    CHECK_THAT(sample(tiny_ln, 50.0, rng), Catch::Matchers::WithinRel(50.0, 1e-8));
}

TEST_CASE("lognormal sampling rejects non-positive clean values") {
    Rng rng(5);
    const NoiseModel ln{NoiseKind::multiplicative_lognormal, 0.1};
    CHECK_THROWS_AS(sample(ln, 0.0, rng), DomainError);
    CHECK_THROWS_AS(sample(ln, -1.0, rng), DomainError);
    // clean -> 0+ gives observations -> 0+.
    CHECK(sample(ln, 1e-300, rng) > 0.0);
    CHECK(sample(ln, 1e-300, rng) < 1e-299);
}

TEST_CASE("gaussian sample moments match a Monte Carlo oracle") {
    Rng rng(12345);
    const NoiseModel noise{NoiseKind::additive_gaussian, 8.0};
    const int n = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = sample(noise, 100.0, rng) - 100.0;
        sum += d;
        sum_sq += d * d;
    }
    const double mean = sum / n;
    const double stddev = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(stddev - 8.0) < 0.08);
}

TEST_CASE("identical seeds give identical streams") {
    Rng a(777), b(777);
    const NoiseModel noise{NoiseKind::multiplicative_lognormal, 0.3};
    for (int i = 0; i < 100; ++i) REQUIRE(sample(noise, 2.0, a) == sample(noise, 2.0, b));
}

TEST_CASE("log densities at pinned points") {
    const NoiseModel gauss{NoiseKind::additive_gaussian, 1.0};
    CHECK_THAT(log_density(gauss, 3.0, 3.0),
               Catch::Matchers::WithinAbs(-0.5 * std::log(2.0 * std::numbers::pi), 1e-12));

    const NoiseModel ln{NoiseKind::multiplicative_lognormal, 1.0};
    // At observed == predicted the lognormal density keeps the 1/x Jacobian.
    CHECK_THAT(log_density(ln, 5.0, 5.0),
               Catch::Matchers::WithinAbs(-0.5 * std::log(2.0 * std::numbers::pi) - std::log(5.0),
                                          1e-12));
    CHECK_THROWS_AS(log_density(ln, -1.0, 5.0), DomainError);
    CHECK_THROWS_AS(log_density(ln, 5.0, 0.0), DomainError);
}

TEST_CASE("gaussian density is symmetric about the prediction") {
    const NoiseModel gauss{NoiseKind::additive_gaussian, 2.5};
    for (double d : {0.125, 1.0, 3.5}) {
        REQUIRE(log_density(gauss, 10.0 + d, 10.0) == log_density(gauss, 10.0 - d, 10.0));
    }
}

TEST_CASE("lognormal density shifts by -log k under joint rescaling") {
    const NoiseModel ln{NoiseKind::multiplicative_lognormal, 0.4};
    for (double k : {2.0, 10.0, 0.25}) {
        const double base = log_density(ln, 3.0, 5.0);
        const double scaled = log_density(ln, 3.0 * k, 5.0 * k);
        REQUIRE(std::abs(scaled - (base - std::log(k))) <= 1e-12);
    }
}

TEST_CASE("densities integrate to one (quadrature oracle)") {
    const NoiseModel gauss{NoiseKind::additive_gaussian, 2.0};
    {
        const double mu = 7.0, lo = mu - 20.0, hi = mu + 20.0;
        const int n = 20000;
        const double h = (hi - lo) / n;
        double integral = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double x = lo + i * h;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            integral += w * std::exp(log_density(gauss, x, mu)) * h;
        }
        CHECK_THAT(integral, Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
    {
        // Integrate the lognormal in log space: density(x) dx = density(e^u) e^u du.
        const NoiseModel ln{NoiseKind::multiplicative_lognormal, 0.5};
        const double pred = 3.0;
        const double lo = std::log(pred) - 10.0, hi = std::log(pred) + 10.0;
        const int n = 20000;
        const double h = (hi - lo) / n;
        double integral = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double u = lo + i * h;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            integral += w * std::exp(log_density(ln, std::exp(u), pred)) * std::exp(u) * h;
        }
        CHECK_THAT(integral, Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
}
