#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "polyreg/io.hpp"
#include "polyreg/random.hpp"
#include "polyreg/sample.hpp"

namespace polyreg::fixtures {

// Wavy 1-D data: x ~ U(-0.9, 0.9), y = sin(13 x + 0.7) + N(0, 0.1^2).
inline constexpr double kWavyNoise = 0.1;
inline double wavyMean(double x) { return std::sin(13.0 * x + 0.7); }

inline WeightedSample wavy(std::uint64_t seed = 1, int n = 10000) {
    Rng rng(seed);
    WeightedSample s(1);
    s.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double x = rng.uniform(-0.9, 0.9);
        s.add(std::span<const double>(&x, 1), wavyMean(x) + kWavyNoise * rng.normal());
    }
    return s;
}

// Unit step at 0 on [-1, 1] with N(0, 0.05^2) noise.
inline WeightedSample step(std::uint64_t seed = 2, int n = 2000) {
    Rng rng(seed);
    WeightedSample s(1);
    s.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double x = rng.uniform(-1.0, 1.0);
        s.add(std::span<const double>(&x, 1), (x > 0.0 ? 1.0 : -1.0) + 0.05 * rng.normal());
    }
    return s;
}

inline GrayImage uniformGray(int width = 40, int height = 30, std::uint8_t level = 128) {
    return {width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, level)};
}

// Left half dark, right half light. Pixel axes are both mapped to [-1, 1],
// so the axis with fewer pixels has the larger spread; a narrow image makes
// the first principal-axis split vertical.
inline GrayImage twoTone(int width = 48, int height = 64) {
    GrayImage img = uniformGray(width, height, 0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) img.at(c, r) = c < width / 2 ? 60 : 190;
    }
    return img;
}

// Smooth shading, a soft disc and a ripple band.
inline GrayImage scene(int width = 96, int height = 72) {
    GrayImage img = uniformGray(width, height, 0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double u = (c + 0.5) / width;
            const double v = (r + 0.5) / height;
            double val = 40.0 + 120.0 * u + 40.0 * v;
            const double d = std::hypot(u - 0.35, v - 0.45);
            val += 90.0 / (1.0 + std::exp((d - 0.2) * 60.0));
            if (v > 0.75) val += 35.0 * std::sin(30.0 * u);
            img.at(c, r) = static_cast<std::uint8_t>(std::lround(std::clamp(val, 0.0, 255.0)));
        }
    }
    return img;
}

}  // namespace polyreg::fixtures
