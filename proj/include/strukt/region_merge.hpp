#pragma once

#include <cstdint>
#include <queue>
#include <unordered_map>
#include <vector>

#include "strukt/errors.hpp"
#include "strukt/field.hpp"
#include "strukt/products.hpp"

namespace strukt {

enum class MergeStop { local_min, n_levels };

struct MergeParams {
    double lambda = 1.0;
    MergeStop stop = MergeStop::local_min;
    std::uint32_t n_levels = 1;
};

namespace detail {

struct MergeCandidate {
    double delta_e;
    std::uint32_t a, b; // a < b
    std::uint32_t epoch_a, epoch_b;
};

struct CandidateOrder {
    // min-heap on (delta_e, a, b); the id pair is the normative tie-break
    bool operator()(const MergeCandidate& x, const MergeCandidate& y) const {
        if (x.delta_e != y.delta_e) return x.delta_e > y.delta_e;
        if (x.a != y.a) return x.a > y.a;
        return x.b > y.b;
    }
};

inline bool is_power_of_two(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

} // namespace detail

// Greedy best-first merging from the singleton partition under
// E(P) = sum_i SSE(A_i) + lambda * |boundary(P)|.
// Each step merges the adjacent pair with the most negative delta-E
// (Ward form: (na*nb/(na+nb)) * |mu_a-mu_b|^2 minus lambda times the shared
// boundary). Snapshots are recorded at each dyadic region count plus the
// final state. The merged region keeps the smaller id.
inline std::pair<Hierarchy, double> region_merge_hierarchy_impl(const MeasurementField& field,
                                                                const MergeParams& params) {
    if (params.lambda <= 0.0) fail_usage("homogeneity_merge: lambda must be > 0");
    const std::uint32_t k = field.channels;
    const std::size_t n0 = field.pixel_count();
    if (n0 == 0) fail_usage("homogeneity_merge: empty field");

    std::vector<std::uint64_t> count(n0, 1);
    std::vector<double> sums(n0 * k);
    for (std::size_t i = 0; i < n0; ++i)
        for (std::uint32_t ch = 0; ch < k; ++ch)
            sums[i * k + ch] = field.values[static_cast<std::size_t>(ch) * n0 + i];

    std::vector<std::unordered_map<std::uint32_t, std::uint64_t>> adj(n0);
    auto add_edge = [&](std::uint32_t a, std::uint32_t b) {
        ++adj[a][b];
        ++adj[b][a];
    };
    for (std::uint32_t r = 0; r < field.height; ++r) {
        for (std::uint32_t c = 0; c < field.width; ++c) {
            const std::uint32_t i = r * field.width + c;
            if (c + 1 < field.width) add_edge(i, i + 1);
            if (r + 1 < field.height) add_edge(i, i + field.width);
        }
    }

    auto delta_sse = [&](std::uint32_t a, std::uint32_t b) {
        const double na = static_cast<double>(count[a]);
        const double nb = static_cast<double>(count[b]);
        double d2 = 0.0;
        for (std::uint32_t ch = 0; ch < k; ++ch) {
            const double d = sums[static_cast<std::size_t>(a) * k + ch] / na -
                             sums[static_cast<std::size_t>(b) * k + ch] / nb;
            d2 += d * d;
        }
        return na * nb / (na + nb) * d2;
    };
    auto delta_e = [&](std::uint32_t a, std::uint32_t b, std::uint64_t shared) {
        return delta_sse(a, b) - params.lambda * static_cast<double>(shared);
    };

    std::vector<std::uint32_t> epoch(n0, 0);
    std::vector<std::uint32_t> parent(n0);
    for (std::size_t i = 0; i < n0; ++i) parent[i] = static_cast<std::uint32_t>(i);
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    std::priority_queue<detail::MergeCandidate, std::vector<detail::MergeCandidate>,
                        detail::CandidateOrder>
        queue;
    for (std::uint32_t a = 0; a < n0; ++a)
        for (const auto& [b, shared] : adj[a])
            if (a < b) queue.push({delta_e(a, b, shared), a, b, 0, 0});

    Hierarchy h;
    h.height = field.height;
    h.width = field.width;

    auto snapshot = [&]() {
        Partition p;
        p.height = field.height;
        p.width = field.width;
        p.labels.resize(n0);
        for (std::size_t i = 0; i < n0; ++i) p.labels[i] = find(static_cast<std::uint32_t>(i));
        h.levels.push_back(relabel_canonical(p));
    };
    snapshot(); // level 0: the sampling-induced singleton partition

    std::uint64_t total_boundary = static_cast<std::uint64_t>(field.height) * (field.width - 1) +
                                   static_cast<std::uint64_t>(field.width) * (field.height - 1);
    double energy = params.lambda * static_cast<double>(total_boundary);
    std::size_t n_cur = n0;
    const bool until_levels = params.stop == MergeStop::n_levels;

    while (n_cur > 1 && !(until_levels && h.levels.size() >= params.n_levels)) {
        if (queue.empty()) break;
        const auto cand = queue.top();
        queue.pop();
        if (epoch[cand.a] != cand.epoch_a || epoch[cand.b] != cand.epoch_b) continue;
        if (!until_levels && cand.delta_e >= 0.0) break;

        const std::uint32_t a = cand.a, b = cand.b;
        h.merge_log.push_back({static_cast<std::uint32_t>(h.levels.size() - 1), a, b, cand.delta_e});
        energy += cand.delta_e;

        count[a] += count[b];
        for (std::uint32_t ch = 0; ch < k; ++ch)
            sums[static_cast<std::size_t>(a) * k + ch] += sums[static_cast<std::size_t>(b) * k + ch];
        parent[b] = a;
        adj[a].erase(b);
        for (const auto& [c, len] : adj[b]) {
            if (c == a) continue;
            adj[a][c] += len;
            adj[c].erase(b);
            adj[c][a] = adj[a][c];
        }
        adj[b].clear();
        ++epoch[a];
        ++epoch[b];
        --n_cur;

        for (const auto& [c, len] : adj[a]) {
            const std::uint32_t lo = std::min(a, c), hi = std::max(a, c);
            queue.push({delta_e(lo, hi, len), lo, hi, epoch[lo], epoch[hi]});
        }

        if (detail::is_power_of_two(n_cur) && n_cur < n0) snapshot();
    }

    if (h.levels.empty() || h.levels.back().n_regions != n_cur) snapshot();
    return {std::move(h), energy};
}

} // namespace strukt
