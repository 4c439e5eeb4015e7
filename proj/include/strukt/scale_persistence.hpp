#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "strukt/errors.hpp"
#include "strukt/field.hpp"
#include "strukt/products.hpp"

namespace strukt {

struct ScalePersistenceParams {
    std::uint32_t channel = 0;
    std::uint32_t n_scales = 4;
    double base_sigma = 1.0;
};

namespace detail {

// Whole-sample reflection, folded until in range (handles radius >= n).
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
    if (n == 1) return 0;
    const std::int64_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    const std::int64_t radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (std::int64_t i = -radius; i <= radius; ++i) {
        const double w = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        k[i + radius] = w;
        sum += w;
    }
    for (auto& w : k) w /= sum;
    return k;
}

// Separable Gaussian smoothing with reflected borders, kernel truncated at
// 3 sigma, computed in double.
inline std::vector<double> gaussian_blur(const std::vector<double>& in, std::int64_t height,
                                         std::int64_t width, double sigma) {
    const std::vector<double> kernel = gaussian_kernel(sigma);
    const std::int64_t radius = (static_cast<std::int64_t>(kernel.size()) - 1) / 2;
    std::vector<double> tmp(in.size()), out(in.size());
    for (std::int64_t r = 0; r < height; ++r) {
        for (std::int64_t c = 0; c < width; ++c) {
            double acc = 0.0;
            for (std::int64_t o = -radius; o <= radius; ++o)
                acc += kernel[o + radius] * in[r * width + reflect_index(c + o, width)];
            tmp[r * width + c] = acc;
        }
    }
    for (std::int64_t r = 0; r < height; ++r) {
        for (std::int64_t c = 0; c < width; ++c) {
            double acc = 0.0;
            for (std::int64_t o = -radius; o <= radius; ++o)
                acc += kernel[o + radius] * tmp[reflect_index(r + o, height) * width + c];
            out[r * width + c] = acc;
        }
    }
    return out;
}

} // namespace detail

// Persistence across scale space: smooth at sigma_m = base * 2^m for
// m = 0..n_scales, take per-scale difference-of-Gaussians responses
// D_m = L_{m+1} - L_m, and score each pixel by the fraction of scales whose
// response sign matches the pixel's majority sign. Responses with magnitude
// below 1e-9 agree with neither sign, so a constant field scores zero
// everywhere.
inline std::pair<ScalarStructureField, double> scale_persistence_field_impl(
    const MeasurementField& field, const ScalePersistenceParams& params) {
    if (params.channel >= field.channels)
        fail_usage("scale_coherence: channel " + std::to_string(params.channel) +
                   " out of range for a " + std::to_string(field.channels) + "-channel field");
    if (params.n_scales < 2) fail_usage("scale_coherence: n_scales must be >= 2");
    if (params.base_sigma <= 0.0) fail_usage("scale_coherence: base_sigma must be > 0");

    const std::int64_t h = field.height, w = field.width;
    const std::size_t n = field.pixel_count();
    std::vector<double> plane(n);
    const std::size_t base = static_cast<std::size_t>(params.channel) * n;
    for (std::size_t i = 0; i < n; ++i) plane[i] = field.values[base + i];

    std::vector<std::vector<double>> smoothed(params.n_scales + 1);
    for (std::uint32_t m = 0; m <= params.n_scales; ++m)
        smoothed[m] = detail::gaussian_blur(plane, h, w, params.base_sigma * std::pow(2.0, m));

    constexpr double response_floor = 1e-9;
    std::vector<std::uint16_t> pos(n, 0), neg(n, 0);
    for (std::uint32_t m = 0; m < params.n_scales; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d = smoothed[m + 1][i] - smoothed[m][i];
            if (d > response_floor) ++pos[i];
            else if (d < -response_floor) ++neg[i];
        }
    }

    ScalarStructureField out;
    out.height = field.height;
    out.width = field.width;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.values[i] = static_cast<float>(static_cast<double>(std::max(pos[i], neg[i])) /
                                           static_cast<double>(params.n_scales));
    // no energy objective for this family
    return {std::move(out), 0.0};
}

} // namespace strukt
