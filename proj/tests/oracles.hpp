#pragma once

// Independent brute-force oracles for the test suite. These deliberately
// re-derive expected values by the most direct route available (naive
// re-summation, exhaustive enumeration, direct pair counting) and must stay
// independent of the library implementation paths they check.

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "strukt/field.hpp"
#include "strukt/products.hpp"

namespace oracle {

// Exhaustive Otsu scan: recomputes class moments from scratch for every
// threshold, smallest-t tie-breaking.
struct OtsuScan {
    std::uint32_t threshold_bin = 0;
    double between_class_variance = 0.0;
};

inline OtsuScan otsu_brute_force(const std::vector<std::uint64_t>& hist) {
    const std::uint32_t bins = static_cast<std::uint32_t>(hist.size());
    OtsuScan best;
    for (std::uint32_t t = 1; t < bins; ++t) {
        std::uint64_t cnt0 = 0, sum0 = 0, cnt1 = 0, sum1 = 0;
        for (std::uint32_t i = 0; i < t; ++i) {
            cnt0 += hist[i];
            sum0 += hist[i] * i;
        }
        for (std::uint32_t i = t; i < bins; ++i) {
            cnt1 += hist[i];
            sum1 += hist[i] * i;
        }
        if (cnt0 == 0 || cnt1 == 0) continue;
        const std::uint64_t total = cnt0 + cnt1;
        const double w0 = static_cast<double>(cnt0) / static_cast<double>(total);
        const double w1 = static_cast<double>(cnt1) / static_cast<double>(total);
        const double mu0 = static_cast<double>(sum0) / static_cast<double>(cnt0);
        const double mu1 = static_cast<double>(sum1) / static_cast<double>(cnt1);
        const double sigma = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (sigma > best.between_class_variance) {
            best.between_class_variance = sigma;
            best.threshold_bin = t;
        }
    }
    return best;
}

// ARI straight from the pair-counting definition: classify every pixel pair
// as agreeing or disagreeing in each partition. O(n^2), small grids only.
inline double ari_pair_counting(const strukt::Partition& p, const strukt::Partition& q) {
    const std::size_t n = p.labels.size();
    std::uint64_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same_p = p.labels[i] == p.labels[j];
            const bool same_q = q.labels[i] == q.labels[j];
            if (same_p && same_q) ++n11;
            else if (same_p && !same_q) ++n10;
            else if (!same_p && same_q) ++n01;
            else ++n00;
        }
    }
    const double total = static_cast<double>(n11 + n10 + n01 + n00);
    const double a = static_cast<double>(n11 + n10); // same in p
    const double b = static_cast<double>(n11 + n01); // same in q
    const double expected = a * b / total;
    const double maximum = 0.5 * (a + b);
    if (maximum == expected) return 1.0;
    return (static_cast<double>(n11) - expected) / (maximum - expected);
}

// VI via joint entropy: VI = 2 H(p,q) - H(p) - H(q). A different algebraic
// route than the library's H(p) + H(q) - 2 I(p;q).
inline double vi_joint_entropy(const strukt::Partition& p, const strukt::Partition& q) {
    const double n = static_cast<double>(p.labels.size());
    std::map<std::uint32_t, std::uint64_t> cp, cq;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> cj;
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        ++cp[p.labels[i]];
        ++cq[q.labels[i]];
        ++cj[{p.labels[i], q.labels[i]}];
    }
    auto entropy = [&](const auto& counts) {
        double h = 0.0;
        for (const auto& [key, c] : counts) {
            const double f = static_cast<double>(c) / n;
            h -= f * std::log(f);
        }
        return h;
    };
    return 2.0 * entropy(cj) - entropy(cp) - entropy(cq);
}

// Exhaustive minimum Ncut over all proper bipartitions of a tiny pixel graph
// (independent graph construction from the field).
inline double ncut_brute_force(const strukt::MeasurementField& field, double sigma_i) {
    const std::size_t n = field.pixel_count();
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::uint32_t r = 0; r < field.height; ++r) {
        for (std::uint32_t c = 0; c < field.width; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * field.width + c;
            auto link = [&](std::size_t j) {
                double d2 = 0.0;
                for (std::uint32_t ch = 0; ch < field.channels; ++ch) {
                    const double d = static_cast<double>(field.values[ch * n + i]) -
                                     static_cast<double>(field.values[ch * n + j]);
                    d2 += d * d;
                }
                w[i][j] = w[j][i] = std::exp(-d2 / (sigma_i * sigma_i));
            };
            if (c + 1 < field.width) link(i + 1);
            if (r + 1 < field.height) link(i + field.width);
        }
    }
    std::vector<double> degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) degree[i] += w[i][j];

    double best = std::numeric_limits<double>::infinity();
    // subsets containing pixel 0, excluding the full set
    for (std::uint64_t mask = 1; mask < (1ULL << n) - 1; mask += 2) {
        double cut = 0.0, assoc_a = 0.0, assoc_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_a = (mask >> i) & 1ULL;
            if (in_a) assoc_a += degree[i];
            else assoc_b += degree[i];
            for (std::size_t j = i + 1; j < n; ++j)
                if (in_a != (((mask >> j) & 1ULL) != 0)) cut += w[i][j];
        }
        if (assoc_a <= 0.0 || assoc_b <= 0.0) continue;
        best = std::min(best, cut / assoc_a + cut / assoc_b);
    }
    return best;
}

// Direct evaluation of the two-part description length, structured as a
// per-pixel loop rather than per-region accumulators.
inline double description_length_direct(const strukt::MeasurementField& field,
                                        const strukt::Partition& p, double bits_per_edge,
                                        double eps) {
    const std::uint32_t k = field.channels;
    // per-region per-channel mean by direct two-pass computation
    std::vector<std::uint64_t> count(p.n_regions, 0);
    for (std::uint32_t lab : p.labels) ++count[lab];
    std::vector<std::vector<double>> mean(p.n_regions, std::vector<double>(k, 0.0));
    for (std::uint32_t r = 0; r < p.height; ++r)
        for (std::uint32_t c = 0; c < p.width; ++c)
            for (std::uint32_t ch = 0; ch < k; ++ch)
                mean[p.at(r, c)][ch] += field.at(ch, r, c);
    for (std::uint32_t lab = 0; lab < p.n_regions; ++lab)
        for (std::uint32_t ch = 0; ch < k; ++ch)
            mean[lab][ch] /= static_cast<double>(count[lab]);
    std::vector<std::vector<double>> var(p.n_regions, std::vector<double>(k, 0.0));
    for (std::uint32_t r = 0; r < p.height; ++r)
        for (std::uint32_t c = 0; c < p.width; ++c)
            for (std::uint32_t ch = 0; ch < k; ++ch) {
                const double d = field.at(ch, r, c) - mean[p.at(r, c)][ch];
                var[p.at(r, c)][ch] += d * d;
            }
    for (std::uint32_t lab = 0; lab < p.n_regions; ++lab)
        for (std::uint32_t ch = 0; ch < k; ++ch) var[lab][ch] /= static_cast<double>(count[lab]);

    std::uint64_t boundary = 0;
    for (std::uint32_t r = 0; r < p.height; ++r)
        for (std::uint32_t c = 0; c < p.width; ++c) {
            if (c + 1 < p.width && p.at(r, c) != p.at(r, c + 1)) ++boundary;
            if (r + 1 < p.height && p.at(r, c) != p.at(r + 1, c)) ++boundary;
        }

    const double two_pi_e = 2.0 * M_PI * std::exp(1.0);
    double l_data = 0.0;
    for (std::uint32_t r = 0; r < p.height; ++r)
        for (std::uint32_t c = 0; c < p.width; ++c)
            for (std::uint32_t ch = 0; ch < k; ++ch)
                l_data += 0.5 * std::log2(two_pi_e * var[p.at(r, c)][ch] + eps);
    return static_cast<double>(p.n_regions) * 32.0 * k +
           static_cast<double>(boundary) * bits_per_edge + l_data;
}

// From-scratch merge energy: per-pixel squared deviation from its region mean
// plus lambda times the boundary length.
inline double merge_energy_direct(const strukt::MeasurementField& field, const strukt::Partition& p,
                                  double lambda) {
    const std::uint32_t k = field.channels;
    std::vector<std::uint64_t> count(p.n_regions, 0);
    for (std::uint32_t lab : p.labels) ++count[lab];
    std::vector<std::vector<double>> mean(p.n_regions, std::vector<double>(k, 0.0));
    for (std::uint32_t r = 0; r < p.height; ++r)
        for (std::uint32_t c = 0; c < p.width; ++c)
            for (std::uint32_t ch = 0; ch < k; ++ch)
                mean[p.at(r, c)][ch] += field.at(ch, r, c);
    for (std::uint32_t lab = 0; lab < p.n_regions; ++lab)
        for (std::uint32_t ch = 0; ch < k; ++ch)
            mean[lab][ch] /= static_cast<double>(count[lab]);
    double sse = 0.0;
    for (std::uint32_t r = 0; r < p.height; ++r)
        for (std::uint32_t c = 0; c < p.width; ++c)
            for (std::uint32_t ch = 0; ch < k; ++ch) {
                const double d = field.at(ch, r, c) - mean[p.at(r, c)][ch];
                sse += d * d;
            }
    std::uint64_t boundary = 0;
    for (std::uint32_t r = 0; r < p.height; ++r)
        for (std::uint32_t c = 0; c < p.width; ++c) {
            if (c + 1 < p.width && p.at(r, c) != p.at(r, c + 1)) ++boundary;
            if (r + 1 < p.height && p.at(r, c) != p.at(r + 1, c)) ++boundary;
        }
    return sse + lambda * static_cast<double>(boundary);
}

} // namespace oracle
