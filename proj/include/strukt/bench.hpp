#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "strukt/canonical.hpp"
#include "strukt/criterion.hpp"
#include "strukt/dobject.hpp"
#include "strukt/errors.hpp"
#include "strukt/extract.hpp"
#include "strukt/field.hpp"
#include "strukt/perturb.hpp"
#include "strukt/products.hpp"
#include "strukt/rng.hpp"
#include "strukt/validate.hpp"

namespace strukt {

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

struct SceneSpec {
    std::uint32_t side = 128;
    std::uint32_t n_blobs = 3;
    double contrast = 0.5;
    double texture_sigma = 0.05;
    std::uint64_t seed = 0;
};

struct SyntheticScene {
    MeasurementField field;
    Partition truth; // background + one region per blob; scores the baseline only
};

namespace detail {

inline std::uint32_t uniform_in(Pcg32& rng, std::uint32_t lo, std::uint32_t hi) {
    return lo + rng.next_u32() % (hi - lo + 1);
}

} // namespace detail

// Disc blobs on a flat background (level 0.2). Blob j sits at
// 0.2 + contrast - j * spacing with a small per-blob level offset so the
// fixed label set of the semantics-first baseline is well defined; optional
// Gaussian texture on top, clamped to [0,1]. Geometry draws from PCG32
// stream 1, texture from stream 2.
inline SyntheticScene make_synthetic(const SceneSpec& spec) {
    if (spec.side < 16) fail_usage("scene side must be >= 16");
    if (spec.n_blobs < 1) fail_usage("scene needs at least one blob");
    if (spec.texture_sigma < 0.0) fail_usage("texture_sigma must be >= 0");
    const std::uint32_t side = spec.side;

    Pcg32 geom(spec.seed, 1);
    struct Disc {
        std::uint32_t row, col, radius;
    };
    std::vector<Disc> discs;
    const std::uint32_t r_lo = std::max<std::uint32_t>(2, side / 16);
    const std::uint32_t r_hi = std::max<std::uint32_t>(r_lo, side / 8);
    for (std::uint32_t b = 0; b < spec.n_blobs; ++b) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            Disc d;
            d.radius = detail::uniform_in(geom, r_lo, r_hi);
            const std::uint32_t margin = d.radius + 2;
            if (side <= 2 * margin) continue;
            d.row = detail::uniform_in(geom, margin, side - margin - 1);
            d.col = detail::uniform_in(geom, margin, side - margin - 1);
            bool overlaps = false;
            for (const auto& other : discs) {
                const double dr = static_cast<double>(d.row) - other.row;
                const double dc = static_cast<double>(d.col) - other.col;
                const double min_dist = static_cast<double>(d.radius) + other.radius + 2.0;
                if (dr * dr + dc * dc <= min_dist * min_dist) overlaps = true;
            }
            if (!overlaps) {
                discs.push_back(d);
                placed = true;
            }
        }
        if (!placed)
            fail_usage("could not place " + std::to_string(spec.n_blobs) +
                       " non-overlapping blobs on a " + std::to_string(side) + "-pixel side");
    }

    constexpr double background = 0.2;
    const double spacing = spec.contrast * std::min(0.05, 0.5 / spec.n_blobs);
    std::vector<float> values(static_cast<std::size_t>(side) * side,
                              static_cast<float>(background));
    Partition truth;
    truth.height = side;
    truth.width = side;
    truth.labels.assign(values.size(), 0);
    for (std::uint32_t b = 0; b < spec.n_blobs; ++b) {
        const auto& d = discs[b];
        const double level = background + spec.contrast - b * spacing;
        const std::int64_t rad = d.radius;
        for (std::int64_t dr = -rad; dr <= rad; ++dr) {
            for (std::int64_t dc = -rad; dc <= rad; ++dc) {
                if (dr * dr + dc * dc > rad * rad) continue;
                const std::size_t i =
                    static_cast<std::size_t>(d.row + dr) * side + (d.col + dc);
                values[i] = static_cast<float>(level);
                truth.labels[i] = b + 1;
            }
        }
    }
    truth.n_regions = spec.n_blobs + 1;
    truth = relabel_canonical(truth);

    std::uint64_t clamped = 0;
    if (spec.texture_sigma > 0.0) {
        GaussianSampler texture(spec.seed, 2);
        for (auto& v : values) {
            const double noisy = v + spec.texture_sigma * texture.next();
            if (noisy < 0.0) {
                v = 0.0f;
                ++clamped;
            } else if (noisy > 1.0) {
                v = 1.0f;
                ++clamped;
            } else {
                v = static_cast<float>(noisy);
            }
        }
    }
    (void)clamped;

    SyntheticScene scene;
    scene.field = make_field(side, side, 1, std::move(values),
                             "synthetic scene seed=" + std::to_string(spec.seed));
    scene.truth = std::move(truth);
    return scene;
}

// ---------------------------------------------------------------------------
// Semantics-first baseline: nearest centroid over a fixed label set
// ---------------------------------------------------------------------------

struct BaselineModel {
    std::vector<std::vector<double>> centroids; // [region][channel]
};

inline BaselineModel baseline_fit(const MeasurementField& field, const Partition& truth) {
    const RegionGraph g = region_graph(field, truth);
    BaselineModel model;
    model.centroids.reserve(g.nodes.size());
    for (const auto& node : g.nodes) model.centroids.push_back(node.mean);
    return model;
}

// Per-pixel nearest centroid (Euclidean, ties to the smallest label id).
inline std::vector<std::uint32_t> baseline_predict(const BaselineModel& model,
                                                   const MeasurementField& field) {
    if (model.centroids.empty()) fail_usage("baseline model has no centroids");
    if (model.centroids[0].size() != field.channels)
        fail_usage("baseline model channel count does not match the field");
    const std::size_t n = field.pixel_count();
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = 0.0;
        std::uint32_t best_label = 0;
        for (std::uint32_t m = 0; m < model.centroids.size(); ++m) {
            double d2 = 0.0;
            for (std::uint32_t ch = 0; ch < field.channels; ++ch) {
                const double d = static_cast<double>(field.values[ch * n + i]) - model.centroids[m][ch];
                d2 += d * d;
            }
            if (m == 0 || d2 < best) {
                best = d2;
                best_label = m;
            }
        }
        labels[i] = best_label;
    }
    return labels;
}

inline double label_agreement(const std::vector<std::uint32_t>& predicted, const Partition& truth) {
    if (predicted.size() != truth.labels.size())
        fail_usage("prediction/truth size mismatch");
    std::size_t same = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) same += predicted[i] == truth.labels[i];
    return static_cast<double>(same) / static_cast<double>(predicted.size());
}

// Majority-vote downsampling of ground truth (ties to the smallest label id).
inline Partition downsample_truth_majority(const Partition& truth, std::uint32_t factor) {
    if (truth.height % factor != 0 || truth.width % factor != 0)
        fail_usage("factor does not divide truth dimensions");
    Partition out;
    out.height = truth.height / factor;
    out.width = truth.width / factor;
    out.labels.resize(static_cast<std::size_t>(out.height) * out.width);
    for (std::uint32_t r = 0; r < out.height; ++r) {
        for (std::uint32_t c = 0; c < out.width; ++c) {
            std::vector<std::uint32_t> counts(truth.n_regions, 0);
            for (std::uint32_t dr = 0; dr < factor; ++dr)
                for (std::uint32_t dc = 0; dc < factor; ++dc)
                    ++counts[truth.at(r * factor + dr, c * factor + dc)];
            std::uint32_t best = 0;
            for (std::uint32_t lab = 1; lab < truth.n_regions; ++lab)
                if (counts[lab] > counts[best]) best = lab;
            out.labels[out.index(r, c)] = best;
        }
    }
    out.n_regions = truth.n_regions;
    return out; // labels keep the truth's ids; not relabeled, scoring only
}

// ---------------------------------------------------------------------------
// Comparative experiment: stable structural product vs brittle labels
// ---------------------------------------------------------------------------

struct Fig2Column {
    std::string name;
    std::string perturbation_digest;
    double structural_vi = 0.0;
    double structural_ari = 1.0;
    double structural_boundary_f = 1.0;
    double baseline_agreement = 1.0;
    std::string do_id;
};

struct Fig2Report {
    std::uint64_t seed = 0;
    std::string criterion_digest;
    std::string field_hash;
    std::string implementation_id;
    std::vector<Fig2Column> columns;
};

namespace detail {

inline std::string fig2_svg(const Fig2Report& report) {
    const int width = 640, height = 360;
    const int plot_left = 60, plot_bottom = 300, plot_top = 40;
    const double bar_w = 40.0;
    const double group_w = static_cast<double>(width - plot_left - 20) /
                           static_cast<double>(report.columns.size());
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"20\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">structural ARI vs "
           "baseline label agreement</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = tick / 4.0;
        const double y = plot_bottom - v * (plot_bottom - plot_top);
        svg += "<line x1=\"" + std::to_string(plot_left) + "\" y1=\"" + format_fixed(y, 1) +
               "\" x2=\"" + std::to_string(width - 20) + "\" y2=\"" + format_fixed(y, 1) +
               "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + std::to_string(plot_left - 36) + "\" y=\"" + format_fixed(y + 4, 1) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + format_fixed(v, 2) + "</text>\n";
    }
    for (std::size_t i = 0; i < report.columns.size(); ++i) {
        const auto& col = report.columns[i];
        const double x0 = plot_left + group_w * i + group_w / 2.0;
        auto bar = [&](double value, double offset, const char* fill) {
            const double h = value * (plot_bottom - plot_top);
            svg += "<rect x=\"" + format_fixed(x0 + offset, 1) + "\" y=\"" +
                   format_fixed(plot_bottom - h, 1) + "\" width=\"" + format_fixed(bar_w, 1) +
                   "\" height=\"" + format_fixed(h, 1) + "\" fill=\"" + fill + "\"/>\n";
        };
        bar(col.structural_ari, -bar_w - 3.0, "#2b6cb0");
        bar(col.baseline_agreement, 3.0, "#c05621");
        svg += "<text x=\"" + format_fixed(x0, 1) + "\" y=\"" + std::to_string(plot_bottom + 18) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + col.name +
               "</text>\n";
    }
    svg += "<rect x=\"" + std::to_string(plot_left) + "\" y=\"330\" width=\"12\" height=\"12\" "
           "fill=\"#2b6cb0\"/><text x=\"" + std::to_string(plot_left + 18) +
           "\" y=\"340\" font-family=\"sans-serif\" font-size=\"11\">structural ARI</text>\n";
    svg += "<rect x=\"" + std::to_string(plot_left + 140) + "\" y=\"330\" width=\"12\" height=\"12\" "
           "fill=\"#c05621\"/><text x=\"" + std::to_string(plot_left + 158) +
           "\" y=\"340\" font-family=\"sans-serif\" font-size=\"11\">baseline agreement</text>\n";
    svg += "</svg>\n";
    return svg;
}

} // namespace detail

inline json fig2_report_to_json(const Fig2Report& r) {
    json cols = json::array();
    for (const auto& c : r.columns) {
        json jc;
        jc["name"] = c.name;
        jc["perturbation_digest"] = c.perturbation_digest;
        jc["structural_vi_nats"] = c.structural_vi;
        jc["structural_ari"] = c.structural_ari;
        jc["structural_boundary_f"] = c.structural_boundary_f;
        jc["baseline_agreement"] = c.baseline_agreement;
        jc["do_id"] = c.do_id;
        cols.push_back(jc);
    }
    json j;
    j["seed"] = r.seed;
    j["criterion_digest"] = r.criterion_digest;
    j["field_hash"] = r.field_hash;
    j["implementation_id"] = r.implementation_id;
    j["columns"] = cols;
    return j;
}

// The comparative reproduction: one seeded scene, one fixed threshold
// criterion across all columns, the three declared perturbations plus
// identity. The structural row never reads the ground truth; the baseline
// trains on the unperturbed scene and predicts on each perturbed field. The
// scene is flat (texture off) so the trained baseline is exact at identity.
// One digital object is exported per extraction.
inline Fig2Report run_fig2(std::uint64_t seed, const std::filesystem::path& out_dir) {
    SceneSpec scene_spec;
    scene_spec.side = 128;
    scene_spec.n_blobs = 3;
    scene_spec.contrast = 0.5;
    scene_spec.texture_sigma = 0.0;
    scene_spec.seed = seed;
    const SyntheticScene scene = make_synthetic(scene_spec);
    const CriterionSpec cspec = make_threshold_criterion(0, 256, 1);

    std::vector<std::pair<std::string, PerturbationSpec>> columns;
    {
        PerturbationSpec identity;
        identity.family = PerturbationFamily::identity;
        columns.emplace_back("identity", identity);
        PerturbationSpec gamma;
        gamma.family = PerturbationFamily::gamma_contrast;
        gamma.gamma = 1.6;
        gamma.gain = 1.0;
        gamma.bias = 0.0;
        columns.emplace_back("contrast", gamma);
        PerturbationSpec covariate;
        covariate.family = PerturbationFamily::covariate_shift;
        covariate.remap_strength = 0.9;
        covariate.mix_angle_deg = 0.0;
        columns.emplace_back("covariate", covariate);
        PerturbationSpec down;
        down.family = PerturbationFamily::downsample;
        down.factor = 2;
        columns.emplace_back("downsample", down);
    }

    const BaselineModel model = baseline_fit(scene.field, scene.truth);

    Fig2Report report;
    report.seed = seed;
    report.criterion_digest = criterion_hash(cspec);
    report.field_hash = scene.field.field_hash;
    report.implementation_id = implementation_id();

    const std::filesystem::path do_dir = out_dir / "dos";
    for (const auto& [name, pspec] : columns) {
        Fig2Column col;
        col.name = name;
        col.perturbation_digest = perturbation_hash(pspec);

        const StabilityEnvelope env = stability_envelope(scene.field, cspec, pspec, 1);
        col.structural_vi = env.per_replicate[0].vi_nats;
        col.structural_ari = env.per_replicate[0].ari;
        col.structural_boundary_f = env.per_replicate[0].boundary_f;

        const PerturbResult perturbed = apply_perturbation(scene.field, pspec);
        const std::vector<std::uint32_t> predicted = baseline_predict(model, perturbed.field);
        if (pspec.family == PerturbationFamily::downsample) {
            const Partition truth_small = downsample_truth_majority(scene.truth, pspec.factor);
            col.baseline_agreement = label_agreement(predicted, truth_small);
        } else {
            col.baseline_agreement = label_agreement(predicted, scene.truth);
        }

        const ExtractionResult extraction = extract(perturbed.field, cspec);
        DoInputs inputs;
        inputs.command_line = "bench fig2 --seed " + std::to_string(seed) + " [" + name + "]";
        inputs.perturbation_digests = {col.perturbation_digest};
        inputs.version = 1;
        col.do_id = export_do(perturbed.field, cspec, extraction, inputs, env, do_dir);

        report.columns.push_back(col);
    }

    const std::string report_bytes = canonical_dump(fig2_report_to_json(report));
    write_file_bytes(out_dir / "report.json", report_bytes);

    std::string csv = "perturbation,structural_vi_nats,structural_ari,structural_boundary_f,"
                      "baseline_agreement\n";
    for (const auto& c : report.columns)
        csv += c.name + "," + format_double(c.structural_vi) + "," + format_double(c.structural_ari) +
               "," + format_double(c.structural_boundary_f) + "," +
               format_double(c.baseline_agreement) + "\n";
    write_file_bytes(out_dir / "fig2.csv", csv);

    const std::string svg = detail::fig2_svg(report);
    write_file_bytes(out_dir / "chart.svg", svg);

    json manifest;
    manifest["report.json"] = sha256_hex(report_bytes);
    manifest["fig2.csv"] = sha256_hex(csv);
    manifest["chart.svg"] = sha256_hex(svg);
    json dos = json::array();
    for (const auto& c : report.columns) dos.push_back(c.do_id);
    manifest["do_ids"] = dos;
    write_file_bytes(out_dir / "fig2_manifest.json", canonical_dump(manifest));
    return report;
}

} // namespace strukt
