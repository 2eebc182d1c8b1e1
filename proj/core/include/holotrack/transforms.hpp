#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>

#include "holotrack/grid.hpp"

namespace holotrack {

enum class ValueTransform { none, normalize01, standardize, symmetric, div255 };

std::string_view to_string(ValueTransform t);
/// Accepts the names produced by to_string(); throws ConfigError otherwise.
ValueTransform parse_value_transform(std::string_view name);

/// none: identity. normalize01: (v - min) / (max - min), all zeros for a
/// constant image. standardize: (v - mean) / sd with the population sd,
/// throws DataError when sd == 0. symmetric: min-max mapped to [-1, 1].
/// div255: v / 255.
Grid<double> apply_value_transform(const Grid<double>& img, ValueTransform t);

struct CorruptionSpec {
    double blur_sigma_max = 0.0;
    double noise_sigma_max = 0.0;  ///< gray levels
    double brightness_max = 0.0;   ///< 0 disables the brightness change
    double flip_prob = 0.5;

    void validate() const;
    friend bool operator==(const CorruptionSpec&, const CorruptionSpec&) = default;
};

/// Radius of the truncated Gaussian blur kernel (5x5 support).
inline constexpr int kBlurRadius = 2;

/// Separable Gaussian blur with a normalized radius-2 kernel and replicated
/// borders. sigma <= 0 returns the input unchanged.
Grid<double> gaussian_blur(const Grid<double>& img, double sigma);
Grid<double> add_gaussian_noise(const Grid<double>& img, double sigma, std::mt19937_64& rng);
Grid<double> scale_brightness(const Grid<double>& img, double factor);
Grid<double> clip_to_8bit(const Grid<double>& img);

/// Blur, then additive noise, then brightness, then clip to [0, 255]. Each
/// magnitude is drawn uniformly from [0, max].
Grid<double> corrupt(const Grid<double>& tile, const CorruptionSpec& spec, std::mt19937_64& rng);

template <class T>
Grid<T> flip_x(const Grid<T>& img);
template <class T>
Grid<T> flip_y(const Grid<T>& img);

struct FlipDecision {
    bool x = false;
    bool y = false;
};

/// Flips tile and mask together; x and y flips are independent draws with
/// probability prob. Throws DataError if the shapes differ.
template <class T, class M>
std::pair<Grid<T>, Grid<M>> random_flip(const Grid<T>& tile, const Grid<M>& mask, double prob, std::mt19937_64& rng,
                                        FlipDecision* decision = nullptr);

}  // namespace holotrack
