#pragma once

/**
 * @file noise.hpp
 * @brief Observation noise models: additive Gaussian and multiplicative
 *        log-normal sampling plus per-observation log densities.
 */

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "cascade/errors.hpp"

namespace cascade {

enum class NoiseKind { additive_gaussian, multiplicative_lognormal };

inline NoiseKind parse_noise_kind(std::string_view s) {
    if (s == "gaussian") return NoiseKind::additive_gaussian;
    if (s == "lognormal") return NoiseKind::multiplicative_lognormal;
    throw UsageError("unknown noise kind '" + std::string(s) + "' (known: gaussian, lognormal)");
}

inline const char* noise_kind_name(NoiseKind k) {
    return k == NoiseKind::additive_gaussian ? "gaussian" : "lognormal";
}

struct NoiseModel {
    NoiseKind kind = NoiseKind::additive_gaussian;
    double sigma = 1.0;
};

/// Seedable portable random stream. mt19937_64 output is fixed by the
/// standard, and the normal transform below avoids the
/// implementation-defined std::normal_distribution, so identical seeds
/// give identical streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal() {  // Box-Muller, two uniforms per draw, no cached spare
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::mt19937_64 engine_;
};

inline double sample(const NoiseModel& noise, double clean_value, Rng& rng) {
    if (noise.kind == NoiseKind::additive_gaussian) {
        return clean_value + noise.sigma * rng.normal();
    }
    if (!(clean_value > 0.0)) {
        throw DomainError("lognormal noise requires a strictly positive clean value, got " +
                          std::to_string(clean_value));
    }
    return clean_value * std::exp(noise.sigma * rng.normal());
}

inline double log_density(const NoiseModel& noise, double observed, double predicted) {
    const double s2 = noise.sigma * noise.sigma;
    const double norm = -0.5 * std::log(2.0 * std::numbers::pi * s2);
    if (noise.kind == NoiseKind::additive_gaussian) {
        const double r = observed - predicted;
        return norm - r * r / (2.0 * s2);
    }
    if (!(observed > 0.0) || !(predicted > 0.0)) {
        throw DomainError("lognormal log_density requires positive observed and predicted values");
    }
    const double r = std::log(observed) - std::log(predicted);
    return norm - std::log(observed) - r * r / (2.0 * s2);
}

}  // namespace cascade
