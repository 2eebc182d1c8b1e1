#include <doctest.h>

#include <cmath>
#include <random>

#include "holotrack/error.hpp"
#include "holotrack/transforms.hpp"

using namespace holotrack;

namespace {

Grid<double> from_rows(int nx, int ny, std::initializer_list<double> v) { return Grid<double>(nx, ny, std::vector<double>(v)); }

Grid<double> ramp(int nx, int ny) {
    Grid<double> g(nx, ny);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) g(x, y) = 3.0 * x + 7.0 * y;
    return g;
}

}  // namespace

TEST_CASE("value transforms") {
    const auto img = from_rows(2, 2, {0, 128, 255, 64});
    CHECK(apply_value_transform(img, ValueTransform::none) == img);

    const auto d = apply_value_transform(img, ValueTransform::div255);
    CHECK(d(0, 0) == 0.0);
    CHECK(d(1, 0) == doctest::Approx(0.502).epsilon(1e-3));
    CHECK(d(0, 1) == 1.0);
    CHECK(d(1, 1) == doctest::Approx(0.251).epsilon(1e-3));

    const auto s = apply_value_transform(from_rows(2, 1, {0, 255}), ValueTransform::symmetric);
    CHECK(s(0, 0) == -1.0);
    CHECK(s(1, 0) == 1.0);

    const auto n = apply_value_transform(ramp(7, 5), ValueTransform::normalize01);
    double lo = 1, hi = 0;
    for (double v : n.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
    const auto flat = apply_value_transform(Grid<double>(3, 3, 5.0), ValueTransform::normalize01);
    for (double v : flat.values()) CHECK(v == 0.0);

    const auto z = apply_value_transform(ramp(7, 5), ValueTransform::standardize);
    double mean = 0, ss = 0;
    for (double v : z.values()) mean += v;
    mean /= 35.0;
    for (double v : z.values()) ss += (v - mean) * (v - mean);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::sqrt(ss / 35.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(apply_value_transform(Grid<double>(3, 3, 5.0), ValueTransform::standardize), DataError);
    CHECK_THROWS_AS(apply_value_transform(Grid<double>(), ValueTransform::none), DataError);

    for (auto t : {ValueTransform::none, ValueTransform::normalize01, ValueTransform::standardize,
                   ValueTransform::symmetric, ValueTransform::div255}) {
        CHECK(parse_value_transform(to_string(t)) == t);
        CHECK(apply_value_transform(ramp(4, 3), t).nx() == 4);
    }
    CHECK_THROWS_AS(parse_value_transform("zscore"), ConfigError);
}

TEST_CASE("blur") {
    const auto img = ramp(9, 6);
    CHECK(gaussian_blur(img, 0.0) == img);
    // a ramp is preserved away from the borders by a symmetric normalized kernel
    const auto b = gaussian_blur(img, 1.3);
    for (int y = 2; y < 4; ++y)
        for (int x = 2; x < 7; ++x) CHECK(b(x, y) == doctest::Approx(img(x, y)).epsilon(1e-12));

    // impulse response: 5x5 support, separable weights exp(-k^2 / 2 s^2) normalized
    Grid<double> imp(11, 11);
    imp(5, 5) = 1.0;
    const double s = 0.8;
    const auto r = gaussian_blur(imp, s);
    double wsum = 0;
    for (int k = -2; k <= 2; ++k) wsum += std::exp(-0.5 * k * k / (s * s));
    for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 11; ++x) {
            const int kx = x - 5, ky = y - 5;
            const double want = std::abs(kx) <= 2 && std::abs(ky) <= 2
                                    ? std::exp(-0.5 * (kx * kx + ky * ky) / (s * s)) / (wsum * wsum)
                                    : 0.0;
            CHECK(r(x, y) == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("brightness and clipping") {
    CHECK(clip_to_8bit(scale_brightness(from_rows(1, 1, {100}), 2.0))(0, 0) == 200.0);
    CHECK(clip_to_8bit(scale_brightness(from_rows(1, 1, {200}), 2.0))(0, 0) == 255.0);
    CHECK(clip_to_8bit(from_rows(1, 1, {-4}))(0, 0) == 0.0);
}

TEST_CASE("corrupt with all maxima zero is the identity") {
    std::mt19937_64 rng(1);
    const auto img = clip_to_8bit(ramp(8, 8));
    CHECK(corrupt(img, {}, rng) == img);
}

TEST_CASE("corrupt stays in range and is reproducible") {
    CorruptionSpec spec{1.5, 20.0, 3.0, 0.5};
    const auto img = clip_to_8bit(ramp(16, 16));
    std::mt19937_64 a(9), b(9);
    const auto ca = corrupt(img, spec, a);
    CHECK(ca == corrupt(img, spec, b));
    for (double v : ca.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 255.0);
    }
    CHECK_THROWS_AS(corrupt(img, {-1.0, 0, 0, 0.5}, a), ConfigError);
}

TEST_CASE("noise statistics") {
    const Grid<double> flat(1000, 1000, 127.0);
    std::mt19937_64 rng(2024);
    CorruptionSpec spec;
    spec.noise_sigma_max = 10.0;
    const auto out = corrupt(flat, spec, rng);
    double mean = 0, ss = 0;
    for (double v : out.values()) mean += v - 127.0;
    mean /= 1e6;
    for (double v : out.values()) ss += (v - 127.0 - mean) * (v - 127.0 - mean);
    const double sd = std::sqrt(ss / 1e6);
    CHECK(sd > 0.0);
    CHECK(sd <= 10.0);
    CHECK(std::abs(mean) <= 3.0 * sd / 1000.0);
}

TEST_CASE("flips") {
    const auto img = ramp(5, 3);
    CHECK(flip_x(flip_x(img)) == img);
    CHECK(flip_y(flip_y(img)) == img);
    CHECK(flip_x(img)(0, 1) == img(4, 1));
    CHECK(flip_y(img)(2, 0) == img(2, 2));

    Grid<std::uint8_t> mask(5, 3);
    mask(1, 0) = 1;
    std::mt19937_64 rng(3);
    auto [t0, m0] = random_flip(img, mask, 0.0, rng);
    CHECK(t0 == img);
    CHECK(m0 == mask);
    auto [t1, m1] = random_flip(img, mask, 1.0, rng);
    CHECK(t1 == flip_y(flip_x(img)));
    CHECK(m1(3, 2) == 1);
    auto [t2, m2] = random_flip(t1, m1, 1.0, rng);
    CHECK(t2 == img);
    CHECK(m2 == mask);
    CHECK_THROWS_AS(random_flip(img, Grid<std::uint8_t>(4, 3), 0.5, rng), DataError);
}

TEST_CASE("half the time per axis, a quarter of tiles flip both ways") {
    const auto img = ramp(4, 4);
    Grid<std::uint8_t> mask(4, 4);
    std::mt19937_64 rng(77);
    const int trials = 10000;
    int both = 0, any_x = 0;
    for (int i = 0; i < trials; ++i) {
        FlipDecision d;
        random_flip(img, mask, 0.5, rng, &d);
        both += d.x && d.y;
        any_x += d.x;
    }
    const double sigma = std::sqrt(trials * 0.25 * 0.75);
    CHECK(std::abs(both - trials * 0.25) <= 3 * sigma);
    CHECK(std::abs(any_x - trials * 0.5) <= 3 * std::sqrt(trials * 0.25));
}
