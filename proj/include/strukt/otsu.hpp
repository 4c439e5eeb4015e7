#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "strukt/errors.hpp"
#include "strukt/field.hpp"
#include "strukt/products.hpp"

namespace strukt {

struct OtsuParams {
    std::uint32_t channel = 0;
    std::uint32_t bins = 256;
    std::uint32_t min_region = 1; // 1 = absorption off
};

struct OtsuChoice {
    std::uint32_t threshold_bin = 0; // t in [1, bins-1]; 0 when degenerate
    double between_class_variance = 0.0;
};

namespace detail {

inline std::uint32_t value_bin(float v, std::uint32_t bins) {
    double scaled = static_cast<double>(v) * bins;
    if (scaled < 0.0) scaled = 0.0;
    std::uint32_t b = static_cast<std::uint32_t>(scaled);
    return b >= bins ? bins - 1 : b;
}

// Between-class variance from exact integer histogram moments. Classes are
// bins [0,t) and [t,bins) with bin index as the level value; ties break to
// the smallest t. The tie-breaking rule is a normative part of the criterion.
inline OtsuChoice otsu_choose_threshold(const std::vector<std::uint64_t>& hist) {
    const std::uint32_t bins = static_cast<std::uint32_t>(hist.size());
    std::uint64_t total = 0, total_sum = 0;
    for (std::uint32_t i = 0; i < bins; ++i) {
        total += hist[i];
        total_sum += hist[i] * i;
    }
    OtsuChoice best;
    std::uint64_t cnt0 = 0, sum0 = 0;
    for (std::uint32_t t = 1; t < bins; ++t) {
        cnt0 += hist[t - 1];
        sum0 += hist[t - 1] * (t - 1);
        const std::uint64_t cnt1 = total - cnt0;
        if (cnt0 == 0 || cnt1 == 0) continue;
        const double w0 = static_cast<double>(cnt0) / static_cast<double>(total);
        const double w1 = static_cast<double>(cnt1) / static_cast<double>(total);
        const double mu0 = static_cast<double>(sum0) / static_cast<double>(cnt0);
        const double mu1 = static_cast<double>(total_sum - sum0) / static_cast<double>(cnt1);
        const double sigma = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (sigma > best.between_class_variance) {
            best.between_class_variance = sigma;
            best.threshold_bin = t;
        }
    }
    return best;
}

// Raster-order flood fill: component ids come out in first-occurrence order.
inline Partition connected_components(std::uint32_t height, std::uint32_t width,
                                      const std::vector<std::uint8_t>& classes) {
    Partition p;
    p.height = height;
    p.width = width;
    p.labels.assign(static_cast<std::size_t>(height) * width, 0xffffffffu);
    std::uint32_t next = 0;
    std::deque<std::pair<std::uint32_t, std::uint32_t>> queue;
    for (std::uint32_t r = 0; r < height; ++r) {
        for (std::uint32_t c = 0; c < width; ++c) {
            if (p.labels[p.index(r, c)] != 0xffffffffu) continue;
            const std::uint8_t cls = classes[p.index(r, c)];
            p.labels[p.index(r, c)] = next;
            queue.emplace_back(r, c);
            while (!queue.empty()) {
                auto [qr, qc] = queue.front();
                queue.pop_front();
                auto visit = [&](std::uint32_t nr, std::uint32_t nc) {
                    const std::size_t i = p.index(nr, nc);
                    if (p.labels[i] == 0xffffffffu && classes[i] == cls) {
                        p.labels[i] = next;
                        queue.emplace_back(nr, nc);
                    }
                };
                if (qr > 0) visit(qr - 1, qc);
                if (qr + 1 < height) visit(qr + 1, qc);
                if (qc > 0) visit(qr, qc - 1);
                if (qc + 1 < width) visit(qr, qc + 1);
            }
            ++next;
        }
    }
    p.n_regions = next;
    return p;
}

// Absorbs regions below the size floor into their largest-boundary neighbour
// (ties to the smallest neighbour id), smallest region first.
inline Partition absorb_small_regions(Partition p, std::uint64_t min_region) {
    if (min_region <= 1) return p;
    while (p.n_regions > 1) {
        std::vector<std::uint64_t> size(p.n_regions, 0);
        for (std::uint32_t lab : p.labels) ++size[lab];
        std::uint32_t victim = p.n_regions;
        for (std::uint32_t i = 0; i < p.n_regions; ++i)
            if (size[i] < min_region && (victim == p.n_regions || size[i] < size[victim]))
                victim = i;
        if (victim == p.n_regions) break;

        std::map<std::uint32_t, std::uint64_t> shared;
        for (std::uint32_t r = 0; r < p.height; ++r) {
            for (std::uint32_t c = 0; c < p.width; ++c) {
                const std::uint32_t lab = p.at(r, c);
                auto touch = [&](std::uint32_t other) {
                    if (lab == victim && other != victim) ++shared[other];
                    else if (other == victim && lab != victim) ++shared[lab];
                };
                if (c + 1 < p.width) touch(p.at(r, c + 1));
                if (r + 1 < p.height) touch(p.at(r + 1, c));
            }
        }
        std::uint32_t target = p.n_regions;
        std::uint64_t best_len = 0;
        for (const auto& [other, len] : shared) {
            if (len > best_len) {
                best_len = len;
                target = other;
            }
        }
        if (target == p.n_regions) break; // isolated region (cannot happen on a connected grid)
        for (auto& lab : p.labels)
            if (lab == victim) lab = target;
        p = relabel_canonical(p);
    }
    return p;
}

} // namespace detail

// Threshold-separation extraction: histogram the channel over [0,1], pick the
// threshold maximizing between-class variance, binarize, split into
// 4-connected components, then absorb undersized components. A histogram with
// all mass in one bin yields the one-cell partition with objective 0.
inline std::pair<Partition, double> otsu_partition_impl(const MeasurementField& field,
                                                        const OtsuParams& params) {
    if (params.channel >= field.channels)
        fail_usage("threshold_separation: channel " + std::to_string(params.channel) +
                   " out of range for a " + std::to_string(field.channels) + "-channel field");
    if (params.bins < 2) fail_usage("threshold_separation: bins must be >= 2");

    std::vector<std::uint64_t> hist(params.bins, 0);
    const std::size_t n = field.pixel_count();
    const std::size_t base = static_cast<std::size_t>(params.channel) * n;
    for (std::size_t i = 0; i < n; ++i) ++hist[detail::value_bin(field.values[base + i], params.bins)];

    const OtsuChoice choice = detail::otsu_choose_threshold(hist);
    if (choice.between_class_variance == 0.0)
        return {one_cell_partition(field.height, field.width), 0.0};

    std::vector<std::uint8_t> classes(n);
    for (std::size_t i = 0; i < n; ++i)
        classes[i] = detail::value_bin(field.values[base + i], params.bins) < choice.threshold_bin ? 0 : 1;

    Partition p = detail::connected_components(field.height, field.width, classes);
    p = detail::absorb_small_regions(std::move(p), params.min_region);
    return {std::move(p), choice.between_class_variance};
}

} // namespace strukt
