#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "strukt/errors.hpp"
#include "strukt/field.hpp"
#include "strukt/products.hpp"

namespace strukt {

struct SpectralParams {
    double sigma_i = 0.3;
    std::uint32_t sweep = 32;
    std::uint32_t max_iter = 5000;
    double tol = 1e-8;
};

namespace detail {

struct PixelGraph {
    std::uint32_t n = 0;
    // 4-adjacency edges, i < j, with affinity exp(-|x_i-x_j|^2 / sigma^2)
    std::vector<std::uint32_t> edge_a, edge_b;
    std::vector<double> weight;
    std::vector<double> degree;
};

inline PixelGraph build_pixel_graph(const MeasurementField& field, double sigma_i) {
    PixelGraph g;
    const std::size_t n = field.pixel_count();
    g.n = static_cast<std::uint32_t>(n);
    g.degree.assign(n, 0.0);
    const double inv_s2 = 1.0 / (sigma_i * sigma_i);
    auto add = [&](std::uint32_t i, std::uint32_t j) {
        double d2 = 0.0;
        for (std::uint32_t ch = 0; ch < field.channels; ++ch) {
            const double d = static_cast<double>(field.values[static_cast<std::size_t>(ch) * n + i]) -
                             static_cast<double>(field.values[static_cast<std::size_t>(ch) * n + j]);
            d2 += d * d;
        }
        const double w = std::exp(-d2 * inv_s2);
        g.edge_a.push_back(i);
        g.edge_b.push_back(j);
        g.weight.push_back(w);
        g.degree[i] += w;
        g.degree[j] += w;
    };
    for (std::uint32_t r = 0; r < field.height; ++r) {
        for (std::uint32_t c = 0; c < field.width; ++c) {
            const std::uint32_t i = r * field.width + c;
            if (c + 1 < field.width) add(i, i + 1);
            if (r + 1 < field.height) add(i, i + field.width);
        }
    }
    return g;
}

inline double ncut_value(const PixelGraph& g, const std::vector<std::uint8_t>& side) {
    double cut = 0.0;
    for (std::size_t e = 0; e < g.weight.size(); ++e)
        if (side[g.edge_a[e]] != side[g.edge_b[e]]) cut += g.weight[e];
    double assoc_a = 0.0, assoc_total = 0.0;
    for (std::uint32_t i = 0; i < g.n; ++i) {
        assoc_total += g.degree[i];
        if (side[i] == 0) assoc_a += g.degree[i];
    }
    const double assoc_b = assoc_total - assoc_a;
    if (assoc_a <= 0.0 || assoc_b <= 0.0) fail_internal("ncut: empty-side association");
    return cut / assoc_a + cut / assoc_b;
}

} // namespace detail

// Normalized-cut bipartition. An approximate second eigenvector of the
// normalized Laplacian is computed by power iteration on 2I - L_sym with the
// known first eigenvector (D^{1/2} 1, normalized) deflated each step, from a
// fixed all-ones start. Candidate splits come from a threshold sweep over the
// eigenvector (evenly spaced values, plus every distinct component on graphs
// of at most 4096 pixels); the split with the smallest exactly evaluated
// Ncut wins. Seedless and deterministic.
inline std::pair<Partition, double> spectral_bipartition_impl(const MeasurementField& field,
                                                              const SpectralParams& params) {
    if (params.sigma_i <= 0.0) fail_usage("global_cut: sigma_I must be > 0");
    const detail::PixelGraph g = detail::build_pixel_graph(field, params.sigma_i);
    if (g.n < 2) fail_usage("global_cut: field must have at least 2 pixels");
    for (std::uint32_t i = 0; i < g.n; ++i)
        if (g.degree[i] <= 0.0)
            fail_usage("global_cut: pixel " + std::to_string(i / field.width) + "," +
                       std::to_string(i % field.width) +
                       " has zero total affinity; increase sigma_I");

    // normalized affinities w_ij / sqrt(d_i d_j)
    std::vector<double> norm_w(g.weight.size());
    for (std::size_t e = 0; e < g.weight.size(); ++e)
        norm_w[e] = g.weight[e] / std::sqrt(g.degree[g.edge_a[e]] * g.degree[g.edge_b[e]]);

    std::vector<double> u1(g.n);
    double u1_norm = 0.0;
    for (std::uint32_t i = 0; i < g.n; ++i) {
        u1[i] = std::sqrt(g.degree[i]);
        u1_norm += u1[i] * u1[i];
    }
    u1_norm = std::sqrt(u1_norm);
    for (auto& v : u1) v /= u1_norm;

    std::vector<double> v(g.n, 1.0 / std::sqrt(static_cast<double>(g.n)));
    std::vector<double> y(g.n);
    for (std::uint32_t iter = 0; iter < params.max_iter; ++iter) {
        // y = (I + D^-1/2 W D^-1/2) v  ==  (2I - L_sym) v
        for (std::uint32_t i = 0; i < g.n; ++i) y[i] = v[i];
        for (std::size_t e = 0; e < norm_w.size(); ++e) {
            y[g.edge_a[e]] += norm_w[e] * v[g.edge_b[e]];
            y[g.edge_b[e]] += norm_w[e] * v[g.edge_a[e]];
        }
        double dot = 0.0;
        for (std::uint32_t i = 0; i < g.n; ++i) dot += u1[i] * y[i];
        for (std::uint32_t i = 0; i < g.n; ++i) y[i] -= dot * u1[i];
        double norm = 0.0;
        for (double x : y) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-200) fail_internal("global_cut: deflated iterate vanished");
        double diff = 0.0;
        for (std::uint32_t i = 0; i < g.n; ++i) {
            y[i] /= norm;
            const double d = y[i] - v[i];
            diff += d * d;
        }
        v.swap(y);
        if (std::sqrt(diff) < params.tol) break;
    }

    double vmin = v[0], vmax = v[0];
    for (double x : v) {
        vmin = std::min(vmin, x);
        vmax = std::max(vmax, x);
    }
    if (!(vmax > vmin)) fail_internal("global_cut: constant eigenvector, no split available");

    std::vector<double> thresholds;
    for (std::uint32_t i = 1; i <= params.sweep; ++i)
        thresholds.push_back(vmin + (vmax - vmin) * i / (params.sweep + 1.0));
    if (g.n <= 4096) thresholds.insert(thresholds.end(), v.begin(), v.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<std::uint8_t> side(g.n), best_side;
    double best_ncut = 0.0;
    bool have_best = false;
    for (double theta : thresholds) {
        std::uint32_t in_a = 0;
        for (std::uint32_t i = 0; i < g.n; ++i) {
            side[i] = v[i] <= theta ? 0 : 1;
            in_a += side[i] == 0;
        }
        if (in_a == 0 || in_a == g.n) continue;
        const double nc = detail::ncut_value(g, side);
        if (!have_best || nc < best_ncut) {
            best_ncut = nc;
            best_side = side;
            have_best = true;
        }
    }
    if (!have_best) fail_internal("global_cut: threshold sweep produced no valid split");

    Partition p;
    p.height = field.height;
    p.width = field.width;
    p.labels.assign(best_side.begin(), best_side.end());
    p.n_regions = 2;
    return {relabel_canonical(p), best_ncut};
}

} // namespace strukt
