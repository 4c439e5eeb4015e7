#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "strukt/canonical.hpp"
#include "strukt/errors.hpp"
#include "strukt/extract.hpp"
#include "strukt/field.hpp"
#include "strukt/perturb.hpp"
#include "strukt/products.hpp"

namespace strukt {

// ---------------------------------------------------------------------------
// Partition distances
// ---------------------------------------------------------------------------

namespace detail {

struct Contingency {
    std::vector<std::uint64_t> row; // sizes of p's regions
    std::vector<std::uint64_t> col; // sizes of q's regions
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> joint;
    std::uint64_t total = 0;
};

inline Contingency contingency_table(const Partition& p, const Partition& q) {
    check_same_dims(p, q);
    Contingency t;
    t.row.assign(p.n_regions, 0);
    t.col.assign(q.n_regions, 0);
    t.total = p.pixel_count();
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        ++t.row[p.labels[i]];
        ++t.col[q.labels[i]];
        ++t.joint[{p.labels[i], q.labels[i]}];
    }
    return t;
}

} // namespace detail

// VI = H(p) + H(q) - 2 I(p;q), natural log, from the exact contingency table.
inline double variation_of_information(const Partition& p, const Partition& q) {
    const auto t = detail::contingency_table(p, q);
    const double n = static_cast<double>(t.total);
    auto entropy = [&](const std::vector<std::uint64_t>& sizes) {
        double h = 0.0;
        for (std::uint64_t s : sizes)
            if (s > 0) {
                const double f = static_cast<double>(s) / n;
                h -= f * std::log(f);
            }
        return h;
    };
    double mutual = 0.0;
    for (const auto& [cell, count] : t.joint) {
        const double f = static_cast<double>(count) / n;
        const double fp = static_cast<double>(t.row[cell.first]) / n;
        const double fq = static_cast<double>(t.col[cell.second]) / n;
        mutual += f * std::log(f / (fp * fq));
    }
    const double vi = entropy(t.row) + entropy(t.col) - 2.0 * mutual;
    return vi < 0.0 ? 0.0 : vi; // roundoff guard for identical partitions
}

// Pair-counting adjusted Rand index. Degenerate denominators (both one-cell
// or both all-singletons) imply identical groupings and score 1.
inline double adjusted_rand(const Partition& p, const Partition& q) {
    const auto t = detail::contingency_table(p, q);
    auto choose2 = [](std::uint64_t m) { return m * (m - 1) / 2; };
    std::uint64_t sum_joint = 0, sum_row = 0, sum_col = 0;
    for (const auto& [cell, count] : t.joint) sum_joint += choose2(count);
    for (std::uint64_t s : t.row) sum_row += choose2(s);
    for (std::uint64_t s : t.col) sum_col += choose2(s);
    const double pairs = static_cast<double>(choose2(t.total));
    if (pairs == 0.0) return 1.0; // single pixel
    const double expected = static_cast<double>(sum_row) * static_cast<double>(sum_col) / pairs;
    const double maximum = 0.5 * (static_cast<double>(sum_row) + static_cast<double>(sum_col));
    if (maximum == expected) return 1.0;
    return (static_cast<double>(sum_joint) - expected) / (maximum - expected);
}

namespace detail {

inline std::vector<std::uint8_t> boundary_mask(const Partition& p) {
    std::vector<std::uint8_t> mask(p.pixel_count(), 0);
    for (std::uint32_t r = 0; r < p.height; ++r) {
        for (std::uint32_t c = 0; c < p.width; ++c) {
            const std::uint32_t lab = p.at(r, c);
            const bool boundary = (r > 0 && p.at(r - 1, c) != lab) ||
                                  (r + 1 < p.height && p.at(r + 1, c) != lab) ||
                                  (c > 0 && p.at(r, c - 1) != lab) ||
                                  (c + 1 < p.width && p.at(r, c + 1) != lab);
            mask[p.index(r, c)] = boundary ? 1 : 0;
        }
    }
    return mask;
}

inline std::uint64_t count_matched(const std::vector<std::uint8_t>& from,
                                   const std::vector<std::uint8_t>& to, std::uint32_t height,
                                   std::uint32_t width, std::uint32_t tol) {
    std::uint64_t matched = 0;
    for (std::uint32_t r = 0; r < height; ++r) {
        for (std::uint32_t c = 0; c < width; ++c) {
            if (!from[static_cast<std::size_t>(r) * width + c]) continue;
            bool hit = false;
            const std::uint32_t r0 = r > tol ? r - tol : 0;
            const std::uint32_t c0 = c > tol ? c - tol : 0;
            const std::uint32_t r1 = std::min(height - 1, r + tol);
            const std::uint32_t c1 = std::min(width - 1, c + tol);
            for (std::uint32_t rr = r0; rr <= r1 && !hit; ++rr)
                for (std::uint32_t cc = c0; cc <= c1 && !hit; ++cc)
                    hit = to[static_cast<std::size_t>(rr) * width + cc] != 0;
            matched += hit;
        }
    }
    return matched;
}

} // namespace detail

// Boundary precision/recall F-measure. Boundary pixels are those with a
// 4-neighbour in another region; matches count within Chebyshev distance
// tol_px. Two empty boundary sets score 1.
inline double boundary_f_measure(const Partition& p, const Partition& q, std::uint32_t tol_px) {
    check_same_dims(p, q);
    const auto bp = detail::boundary_mask(p);
    const auto bq = detail::boundary_mask(q);
    const std::uint64_t np = std::count(bp.begin(), bp.end(), std::uint8_t(1));
    const std::uint64_t nq = std::count(bq.begin(), bq.end(), std::uint8_t(1));
    if (np == 0 && nq == 0) return 1.0;
    if (np == 0 || nq == 0) return 0.0;
    const double precision =
        static_cast<double>(detail::count_matched(bp, bq, p.height, p.width, tol_px)) /
        static_cast<double>(np);
    const double recall =
        static_cast<double>(detail::count_matched(bq, bp, p.height, p.width, tol_px)) /
        static_cast<double>(nq);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

// ---------------------------------------------------------------------------
// Stability envelopes
// ---------------------------------------------------------------------------

struct ReplicateDistances {
    double vi_nats = 0.0;
    double ari = 1.0;
    double boundary_f = 1.0;
};

struct MetricSummary {
    double mean = 0.0, min = 0.0, max = 0.0, std_dev = 0.0;
};

struct StabilityEnvelope {
    std::string perturbation_digest;
    std::string criterion_digest;
    std::string field_hash;
    std::uint32_t n_replicates = 0;
    std::uint32_t boundary_tol_px = 1;
    std::vector<ReplicateDistances> per_replicate;
    MetricSummary vi, ari, boundary_f;
};

// Aggregation order is fixed (replicate index) so stored summaries can be
// recomputed bit-for-bit.
inline MetricSummary summarize_metric(const std::vector<double>& xs) {
    MetricSummary s;
    if (xs.empty()) return s;
    double sum = 0.0;
    s.min = xs[0];
    s.max = xs[0];
    for (double x : xs) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(xs.size()));
    return s;
}

inline void summarize_envelope(StabilityEnvelope& env) {
    std::vector<double> vi, ari, bf;
    for (const auto& r : env.per_replicate) {
        vi.push_back(r.vi_nats);
        ari.push_back(r.ari);
        bf.push_back(r.boundary_f);
    }
    env.vi = summarize_metric(vi);
    env.ari = summarize_metric(ari);
    env.boundary_f = summarize_metric(bf);
}

inline unsigned worker_count() {
    if (const char* env = std::getenv("STRUKT_THREADS")) {
        const unsigned long v = std::strtoul(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Nearest-neighbour projection of a coarse partition back to the full grid.
inline Partition upsample_nearest(const Partition& p, std::uint32_t factor) {
    Partition out;
    out.height = p.height * factor;
    out.width = p.width * factor;
    out.labels.resize(out.pixel_count());
    for (std::uint32_t r = 0; r < out.height; ++r)
        for (std::uint32_t c = 0; c < out.width; ++c)
            out.labels[out.index(r, c)] = p.at(r / factor, c / factor);
    out.n_regions = p.n_regions;
    return relabel_canonical(out);
}

// The partition a criterion family declares for comparisons: partitions pass
// through, hierarchies are taken at `level` (default: final level).
inline Partition comparison_partition(const StructuralProduct& s,
                                      std::optional<std::size_t> level = std::nullopt) {
    if (const auto* p = std::get_if<Partition>(&s)) return *p;
    if (const auto* h = std::get_if<Hierarchy>(&s)) {
        if (h->levels.empty()) fail_internal("hierarchy has no levels");
        return level ? coarsen(*h, *level) : h->levels.back();
    }
    fail_usage("this criterion family does not yield a partition to compare");
}

// Runs the extraction on the base field and on n perturbed replicates
// (replicate r perturbs with seed XOR r) and records VI / ARI / boundary-F
// distances to the base product. Downsampled replicates are projected back to
// the original grid by nearest-neighbour upsampling before comparison.
inline StabilityEnvelope stability_envelope(const MeasurementField& field, const CriterionSpec& cspec,
                                            const PerturbationSpec& pspec, std::uint32_t n_replicates,
                                            std::uint32_t boundary_tol_px = 1,
                                            std::optional<std::size_t> hierarchy_level = std::nullopt) {
    if (n_replicates < 1) fail_usage("stability envelope needs at least one replicate");
    validate_pspec(pspec);

    StabilityEnvelope env;
    env.perturbation_digest = perturbation_hash(pspec);
    env.criterion_digest = criterion_hash(cspec);
    env.field_hash = field.field_hash;
    env.n_replicates = n_replicates;
    env.boundary_tol_px = boundary_tol_px;
    env.per_replicate.resize(n_replicates);

    const Partition base = comparison_partition(extract(field, cspec).product, hierarchy_level);

    auto run_replicate = [&](std::uint32_t r) {
        const PerturbationSpec derived = derive_replicate(pspec, r);
        const PerturbResult perturbed = apply_perturbation(field, derived);
        Partition replica =
            comparison_partition(extract(perturbed.field, cspec).product, hierarchy_level);
        if (pspec.family == PerturbationFamily::downsample && pspec.factor > 1)
            replica = upsample_nearest(replica, pspec.factor);
        ReplicateDistances d;
        d.vi_nats = variation_of_information(base, replica);
        d.ari = adjusted_rand(base, replica);
        d.boundary_f = boundary_f_measure(base, replica, boundary_tol_px);
        env.per_replicate[r] = d;
    };

    const unsigned workers = std::min<unsigned>(worker_count(), n_replicates);
    if (workers <= 1) {
        for (std::uint32_t r = 0; r < n_replicates; ++r) run_replicate(r);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w]() {
                for (std::uint32_t r = w; r < n_replicates; r += workers) run_replicate(r);
            });
        for (auto& t : pool) t.join();
    }
    summarize_envelope(env);
    return env;
}

inline json envelope_to_json(const StabilityEnvelope& env) {
    json rows = json::array();
    for (const auto& r : env.per_replicate) {
        json row;
        row["vi_nats"] = r.vi_nats;
        row["ari"] = r.ari;
        row["boundary_f"] = r.boundary_f;
        rows.push_back(row);
    }
    auto summary = [](const MetricSummary& s) {
        json j;
        j["mean"] = s.mean;
        j["min"] = s.min;
        j["max"] = s.max;
        j["std"] = s.std_dev;
        return j;
    };
    json j;
    j["perturbation_digest"] = env.perturbation_digest;
    j["criterion_digest"] = env.criterion_digest;
    j["field_hash"] = env.field_hash;
    j["n_replicates"] = env.n_replicates;
    j["boundary_tol_px"] = env.boundary_tol_px;
    j["per_replicate"] = rows;
    j["summary"] = {{"vi_nats", summary(env.vi)},
                    {"ari", summary(env.ari)},
                    {"boundary_f", summary(env.boundary_f)}};
    return j;
}

inline StabilityEnvelope envelope_from_json(const json& j) {
    StabilityEnvelope env;
    env.perturbation_digest = j.value("perturbation_digest", "");
    env.criterion_digest = j.value("criterion_digest", "");
    env.field_hash = j.value("field_hash", "");
    env.n_replicates = j.value("n_replicates", 0u);
    env.boundary_tol_px = j.value("boundary_tol_px", 1u);
    for (const auto& row : j.value("per_replicate", json::array())) {
        ReplicateDistances d;
        d.vi_nats = row.value("vi_nats", 0.0);
        d.ari = row.value("ari", 0.0);
        d.boundary_f = row.value("boundary_f", 0.0);
        env.per_replicate.push_back(d);
    }
    auto summary = [](const json& js) {
        MetricSummary s;
        s.mean = js.value("mean", 0.0);
        s.min = js.value("min", 0.0);
        s.max = js.value("max", 0.0);
        s.std_dev = js.value("std", 0.0);
        return s;
    };
    if (j.contains("summary")) {
        env.vi = summary(j["summary"].value("vi_nats", json::object()));
        env.ari = summary(j["summary"].value("ari", json::object()));
        env.boundary_f = summary(j["summary"].value("boundary_f", json::object()));
    }
    return env;
}

inline std::string envelope_to_csv(const StabilityEnvelope& env) {
    std::string csv = "replicate,vi_nats,ari,boundary_f\n";
    for (std::size_t i = 0; i < env.per_replicate.size(); ++i) {
        const auto& r = env.per_replicate[i];
        csv += std::to_string(i) + "," + format_double(r.vi_nats) + "," + format_double(r.ari) + "," +
               format_double(r.boundary_f) + "\n";
    }
    return csv;
}

// ---------------------------------------------------------------------------
// Scale coherence
// ---------------------------------------------------------------------------

// ARI between the full-resolution product and each factor's product projected
// back to the original grid.
inline std::vector<double> scale_coherence(const MeasurementField& field, const CriterionSpec& cspec,
                                           const std::vector<std::uint32_t>& factors,
                                           std::optional<std::size_t> hierarchy_level = std::nullopt) {
    const Partition base = comparison_partition(extract(field, cspec).product, hierarchy_level);
    std::vector<double> out;
    out.reserve(factors.size());
    for (std::uint32_t factor : factors) {
        const MeasurementField small = resample_box(field, factor);
        Partition p = comparison_partition(extract(small, cspec).product, hierarchy_level);
        if (factor > 1) p = upsample_nearest(p, factor);
        out.push_back(adjusted_rand(p, base));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Objective recomputation (global-consistency evidence)
// ---------------------------------------------------------------------------

inline double merge_energy(const MeasurementField& field, const Partition& p, double lambda) {
    if (field.height != p.height || field.width != p.width)
        fail_usage("field/partition dimension mismatch");
    const std::uint32_t k = field.channels;
    std::vector<double> sum(static_cast<std::size_t>(p.n_regions) * k, 0.0);
    std::vector<double> sumsq(static_cast<std::size_t>(p.n_regions) * k, 0.0);
    std::vector<std::uint64_t> count(p.n_regions, 0);
    for (std::uint32_t r = 0; r < p.height; ++r) {
        for (std::uint32_t c = 0; c < p.width; ++c) {
            const std::uint32_t lab = p.at(r, c);
            ++count[lab];
            for (std::uint32_t ch = 0; ch < k; ++ch) {
                const double v = field.at(ch, r, c);
                sum[static_cast<std::size_t>(lab) * k + ch] += v;
                sumsq[static_cast<std::size_t>(lab) * k + ch] += v * v;
            }
        }
    }
    double sse = 0.0;
    for (std::uint32_t lab = 0; lab < p.n_regions; ++lab) {
        for (std::uint32_t ch = 0; ch < k; ++ch) {
            const std::size_t i = static_cast<std::size_t>(lab) * k + ch;
            const double n = static_cast<double>(count[lab]);
            const double part = sumsq[i] - sum[i] * sum[i] / n;
            sse += part > 0.0 ? part : 0.0;
        }
    }
    return sse + lambda * static_cast<double>(boundary_edge_count(p));
}

// Recomputes the criterion's objective from scratch for a given product.
// Families without an energy (scale_coherence) return an empty optional.
inline std::optional<double> objective_value(const MeasurementField& field,
                                             const StructuralProduct& product,
                                             const CriterionSpec& cspec) {
    const auto report = validate_spec(cspec);
    if (!report.ok()) fail_usage("invalid criterion spec:\n" + report.to_text());
    switch (cspec.family) {
        case CriterionFamily::threshold_separation: {
            if (!std::holds_alternative<Partition>(product))
                fail_usage("threshold_separation products are partitions");
            const OtsuParams params = otsu_params_from(cspec);
            std::vector<std::uint64_t> hist(params.bins, 0);
            const std::size_t n = field.pixel_count();
            const std::size_t base = static_cast<std::size_t>(params.channel) * n;
            for (std::size_t i = 0; i < n; ++i)
                ++hist[detail::value_bin(field.values[base + i], params.bins)];
            return detail::otsu_choose_threshold(hist).between_class_variance;
        }
        case CriterionFamily::homogeneity_merge: {
            const Partition p = comparison_partition(product);
            return merge_energy(field, p, merge_params_from(cspec).lambda);
        }
        case CriterionFamily::global_cut: {
            const auto* p = std::get_if<Partition>(&product);
            if (!p || p->n_regions != 2) fail_usage("global_cut products are two-block partitions");
            const detail::PixelGraph g =
                detail::build_pixel_graph(field, spectral_params_from(cspec).sigma_i);
            std::vector<std::uint8_t> side(p->labels.begin(), p->labels.end());
            return detail::ncut_value(g, side);
        }
        case CriterionFamily::scale_coherence: return std::nullopt;
    }
    fail_internal("unknown criterion family");
}

// ---------------------------------------------------------------------------
// Determinacy
// ---------------------------------------------------------------------------

struct DeterminacyReport {
    bool deterministic = false;
    std::string digest_first;
    std::string digest_second;
};

using ExtractFn = std::function<ExtractionResult(const MeasurementField&, const CriterionSpec&)>;

// Runs the operator twice in fresh contexts and compares product hashes. The
// callable overload exists so test fixtures can exercise the negative case.
inline DeterminacyReport determinacy_check_with(const MeasurementField& field,
                                                const CriterionSpec& cspec, const ExtractFn& fn) {
    DeterminacyReport report;
    report.digest_first = product_hash(fn(field, cspec).product);
    report.digest_second = product_hash(fn(field, cspec).product);
    report.deterministic = report.digest_first == report.digest_second;
    return report;
}

inline DeterminacyReport determinacy_check(const MeasurementField& field, const CriterionSpec& cspec) {
    return determinacy_check_with(
        field, cspec,
        [](const MeasurementField& f, const CriterionSpec& c) { return extract(f, c); });
}

} // namespace strukt
