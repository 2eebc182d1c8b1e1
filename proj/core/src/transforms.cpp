#include "holotrack/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "holotrack/error.hpp"

namespace holotrack {

std::string_view to_string(ValueTransform t) {
    switch (t) {
        case ValueTransform::none: return "none";
        case ValueTransform::normalize01: return "normalize01";
        case ValueTransform::standardize: return "standardize";
        case ValueTransform::symmetric: return "symmetric";
        case ValueTransform::div255: return "div255";
    }
    return "none";
}

ValueTransform parse_value_transform(std::string_view name) {
    for (auto t : {ValueTransform::none, ValueTransform::normalize01, ValueTransform::standardize,
                   ValueTransform::symmetric, ValueTransform::div255}) {
        if (to_string(t) == name) return t;
    }
    throw ConfigError("unknown value transform '" + std::string(name) + "'");
}

Grid<double> apply_value_transform(const Grid<double>& img, ValueTransform t) {
    if (img.empty()) throw DataError("value transform: empty image");
    Grid<double> out = img;
    auto v = out.values();
    switch (t) {
        case ValueTransform::none:
            break;
        case ValueTransform::normalize01:
        case ValueTransform::symmetric: {
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            const double min = *lo;
            const double range = *hi - *lo;
            for (double& x : v) {
                const double u = range > 0.0 ? (x - min) / range : 0.0;
                x = t == ValueTransform::normalize01 ? u : 2.0 * u - 1.0;
            }
            break;
        }
        case ValueTransform::standardize: {
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            const double sd = std::sqrt(var / static_cast<double>(v.size()));
            if (!(sd > 0.0)) throw DataError("standardize: image has zero standard deviation");
            for (double& x : v) x = (x - mean) / sd;
            break;
        }
        case ValueTransform::div255:
            for (double& x : v) x /= 255.0;
            break;
    }
    return out;
}

void CorruptionSpec::validate() const {
    for (double m : {blur_sigma_max, noise_sigma_max, brightness_max}) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("corruption maxima must be finite and >= 0");
    }
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ConfigError("flip_prob must lie in [0, 1]");
}

Grid<double> gaussian_blur(const Grid<double>& img, double sigma) {
    if (!(sigma > 0.0)) return img;
    std::array<double, 2 * kBlurRadius + 1> w{};
    double sum = 0.0;
    for (int k = -kBlurRadius; k <= kBlurRadius; ++k) {
        w[static_cast<std::size_t>(k + kBlurRadius)] = std::exp(-0.5 * k * k / (sigma * sigma));
        sum += w[static_cast<std::size_t>(k + kBlurRadius)];
    }
    for (double& x : w) x /= sum;

    const int nx = img.nx(), ny = img.ny();
    Grid<double> tmp(nx, ny);
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            double acc = 0.0;
            for (int k = -kBlurRadius; k <= kBlurRadius; ++k) {
                acc += w[static_cast<std::size_t>(k + kBlurRadius)] * img(std::clamp(x + k, 0, nx - 1), y);
            }
            tmp(x, y) = acc;
        }
    }
    Grid<double> out(nx, ny);
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            double acc = 0.0;
            for (int k = -kBlurRadius; k <= kBlurRadius; ++k) {
                acc += w[static_cast<std::size_t>(k + kBlurRadius)] * tmp(x, std::clamp(y + k, 0, ny - 1));
            }
            out(x, y) = acc;
        }
    }
    return out;
}

Grid<double> add_gaussian_noise(const Grid<double>& img, double sigma, std::mt19937_64& rng) {
    if (!(sigma > 0.0)) return img;
    std::normal_distribution<double> n(0.0, sigma);
    Grid<double> out = img;
    for (double& x : out.values()) x += n(rng);
    return out;
}

Grid<double> scale_brightness(const Grid<double>& img, double factor) {
    Grid<double> out = img;
    for (double& x : out.values()) x *= factor;
    return out;
}

Grid<double> clip_to_8bit(const Grid<double>& img) {
    Grid<double> out = img;
    for (double& x : out.values()) x = std::clamp(x, 0.0, 255.0);
    return out;
}

Grid<double> corrupt(const Grid<double>& tile, const CorruptionSpec& spec, std::mt19937_64& rng) {
    spec.validate();
    Grid<double> out = tile;
    if (spec.blur_sigma_max > 0.0) {
        std::uniform_real_distribution<double> u(0.0, spec.blur_sigma_max);
        out = gaussian_blur(out, u(rng));
    }
    if (spec.noise_sigma_max > 0.0) {
        std::uniform_real_distribution<double> u(0.0, spec.noise_sigma_max);
        out = add_gaussian_noise(out, u(rng), rng);
    }
    if (spec.brightness_max > 0.0) {
        std::uniform_real_distribution<double> u(0.0, spec.brightness_max);
        out = scale_brightness(out, u(rng));
    }
    return clip_to_8bit(out);
}

template <class T>
Grid<T> flip_x(const Grid<T>& img) {
    Grid<T> out(img.nx(), img.ny());
    for (int y = 0; y < img.ny(); ++y) {
        auto src = img.row(y);
        std::reverse_copy(src.begin(), src.end(), out.row(y).begin());
    }
    return out;
}

template <class T>
Grid<T> flip_y(const Grid<T>& img) {
    Grid<T> out(img.nx(), img.ny());
    for (int y = 0; y < img.ny(); ++y) {
        auto src = img.row(img.ny() - 1 - y);
        std::copy(src.begin(), src.end(), out.row(y).begin());
    }
    return out;
}

template <class T, class M>
std::pair<Grid<T>, Grid<M>> random_flip(const Grid<T>& tile, const Grid<M>& mask, double prob, std::mt19937_64& rng,
                                        FlipDecision* decision) {
    if (tile.nx() != mask.nx() || tile.ny() != mask.ny()) throw DataError("random_flip: tile and mask shapes differ");
    std::bernoulli_distribution coin(std::clamp(prob, 0.0, 1.0));
    const bool fx = coin(rng);
    const bool fy = coin(rng);
    if (decision) *decision = {fx, fy};
    Grid<T> t = tile;
    Grid<M> m = mask;
    if (fx) {
        t = flip_x(t);
        m = flip_x(m);
    }
    if (fy) {
        t = flip_y(t);
        m = flip_y(m);
    }
    return {std::move(t), std::move(m)};
}

template Grid<double> flip_x(const Grid<double>&);
template Grid<double> flip_y(const Grid<double>&);
template Grid<float> flip_x(const Grid<float>&);
template Grid<float> flip_y(const Grid<float>&);
template Grid<std::uint8_t> flip_x(const Grid<std::uint8_t>&);
template Grid<std::uint8_t> flip_y(const Grid<std::uint8_t>&);
template std::pair<Grid<double>, Grid<std::uint8_t>> random_flip(const Grid<double>&, const Grid<std::uint8_t>&,
                                                                  double, std::mt19937_64&, FlipDecision*);
template std::pair<Grid<double>, Grid<float>> random_flip(const Grid<double>&, const Grid<float>&, double,
                                                          std::mt19937_64&, FlipDecision*);

}  // namespace holotrack
