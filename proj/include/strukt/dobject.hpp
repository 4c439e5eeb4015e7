#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "strukt/canonical.hpp"
#include "strukt/criterion.hpp"
#include "strukt/errors.hpp"
#include "strukt/extract.hpp"
#include "strukt/field.hpp"
#include "strukt/hexdigest.hpp"
#include "strukt/products.hpp"
#include "strukt/validate.hpp"

namespace strukt {

// Provenance and declarations accompanying an export. The five required
// metadata blocks of a digital object are: (i) the declared criterion,
// (ii) an implementation identifier, (iii) the stability declaration,
// (iv) quality metrics, (v) the stability envelope (which alone may be the
// explicit "none").
struct DoInputs {
    std::string command_line;
    std::vector<std::string> parents; // parent do_ids
    std::int64_t version = 1;         // monotone per lineage
    std::optional<std::uint64_t> seed;
    std::vector<std::string> perturbation_digests; // stability declaration ...
    std::vector<std::uint32_t> scale_factors;      // ... at least one of the two
};

namespace detail {

inline json quality_metrics_json(const MeasurementField& field, const ExtractionResult& result) {
    json q;
    q["objective"] = result.objective ? json(*result.objective) : json(nullptr);
    q["description_length_bits"] = nullptr;
    q["boundary_pixel_edges"] = nullptr;
    q["n_regions"] = nullptr;
    if (const auto* p = std::get_if<Partition>(&result.product)) {
        q["description_length_bits"] = description_length(field, *p);
        q["boundary_pixel_edges"] = boundary_edge_count(*p);
        q["n_regions"] = p->n_regions;
    } else if (const auto* h = std::get_if<Hierarchy>(&result.product)) {
        const Partition& final_level = h->levels.back();
        q["description_length_bits"] = description_length(field, final_level);
        q["boundary_pixel_edges"] = boundary_edge_count(final_level);
        q["n_regions"] = final_level.n_regions;
    }
    return q;
}

inline std::string do_id_of_document(json doc) {
    doc.erase("do_id");
    if (doc.contains("provenance") && doc["provenance"].is_object())
        doc["provenance"]["timestamp_utc"] = "";
    return sha256_hex(canonical_dump(doc));
}

// Writes the product's payload attachments under out_dir/payloads/, each file
// named by its content hash. Returns the relative file list, main attachment
// first.
inline std::vector<std::string> write_do_payloads(const StructuralProduct& s,
                                                  const std::string& prod_hash,
                                                  const std::filesystem::path& out_dir) {
    std::vector<std::string> files;
    const std::filesystem::path dir = out_dir / "payloads";
    if (const auto* p = std::get_if<Partition>(&s)) {
        save_partition(*p, dir / prod_hash);
        files.push_back("payloads/" + prod_hash);
    } else if (const auto* h = std::get_if<Hierarchy>(&s)) {
        write_file_bytes(dir / prod_hash, canonical_dump(hierarchy_to_json(*h)));
        files.push_back("payloads/" + prod_hash);
        for (const auto& level : h->levels) {
            const std::string lh = product_hash(level);
            save_partition(level, dir / lh);
            files.push_back("payloads/" + lh);
        }
    } else if (const auto* g = std::get_if<RegionGraph>(&s)) {
        write_file_bytes(dir / prod_hash, canonical_dump(region_graph_to_json(*g)));
        files.push_back("payloads/" + prod_hash);
    } else if (const auto* f = std::get_if<ScalarStructureField>(&s)) {
        write_file_bytes(dir / prod_hash, ssf_hash_bytes(*f));
        files.push_back("payloads/" + prod_hash);
    }
    return files;
}

} // namespace detail

// Packages an extraction as a versioned, content-addressed digital object:
// canonical JSON document plus payload attachments stored by hash in a
// sibling payloads/ directory, and a manifest entry. The do_id is the SHA-256
// of the canonical document with the timestamp blanked, so identity is
// content-only. Returns the do_id.
inline std::string export_do(const MeasurementField& field, const CriterionSpec& cspec,
                             const ExtractionResult& result, const DoInputs& inputs,
                             const std::optional<StabilityEnvelope>& envelope,
                             const std::filesystem::path& out_dir) {
    if (result.implementation_id.empty())
        fail_usage("incomplete provenance: missing implementation identifier (required item (ii))");
    if (inputs.perturbation_digests.empty() && inputs.scale_factors.empty())
        fail_usage("incomplete provenance: missing stability declaration (required item (iii))");
    const std::string expected_digest = criterion_hash(cspec);
    if (result.criterion_digest != expected_digest)
        fail_usage("extraction result does not match the supplied criterion");

    const std::string prod_hash = product_hash(result.product);
    namespace fs = std::filesystem;
    std::vector<std::string> files = detail::write_do_payloads(result.product, prod_hash, out_dir);

    json stability = json::object();
    if (!inputs.perturbation_digests.empty()) stability["perturbation_digests"] = inputs.perturbation_digests;
    if (!inputs.scale_factors.empty()) stability["scale_factors"] = inputs.scale_factors;

    json doc;
    doc["schema_version"] = "1";
    doc["payload"] = {{"type", product_type_name(result.product)},
                      {"product_hash", prod_hash},
                      {"file", "payloads/" + prod_hash}};
    doc["criterion"] = {{"canonical", json::parse(canonicalize(cspec))}, {"digest", expected_digest}};
    doc["implementation"] = {{"id", result.implementation_id},
                             {"seed", inputs.seed ? json(*inputs.seed) : json(nullptr)}};
    doc["stability_declaration"] = stability;
    doc["quality_metrics"] = detail::quality_metrics_json(field, result);
    doc["envelope"] = envelope ? envelope_to_json(*envelope) : json("none");
    doc["provenance"] = {{"field_hash", field.field_hash},
                         {"command_line", inputs.command_line},
                         {"parents", inputs.parents},
                         {"timestamp_utc", iso8601_utc_now()}};
    doc["version"] = inputs.version;

    const std::string do_id = detail::do_id_of_document(doc);
    doc["do_id"] = do_id;

    const std::string do_file = "do_" + do_id + ".json";
    write_file_bytes(out_dir / do_file, canonical_dump(doc));
    files.insert(files.begin(), do_file);

    // manifest: do_id -> files
    const fs::path manifest_path = out_dir / "manifest.json";
    json manifest = json::object();
    if (fs::exists(manifest_path)) manifest = parse_json_file(manifest_path);
    manifest[do_id] = files;
    write_file_bytes(manifest_path, canonical_dump(manifest));
    return do_id;
}

// ---------------------------------------------------------------------------
// Conformance checking
// ---------------------------------------------------------------------------

struct ConformanceCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ConformanceReport {
    std::vector<ConformanceCheck> checks;
    bool ok() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return !checks.empty();
    }
    std::string to_text() const {
        std::string s;
        for (const auto& c : checks) {
            s += (c.passed ? "[pass] " : "[FAIL] ") + c.name;
            if (!c.detail.empty()) s += ": " + c.detail;
            s += "\n";
        }
        return s;
    }
    json to_json() const {
        json arr = json::array();
        for (const auto& c : checks)
            arr.push_back({{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        return arr;
    }
};

namespace detail {

// Recomputes a partition container's product hash from its own bytes.
inline std::optional<std::string> partition_attachment_hash(const std::string& bytes) {
    const std::size_t nl = bytes.find('\n');
    if (nl == std::string::npos) return std::nullopt;
    std::istringstream header(bytes.substr(0, nl));
    std::string magic, stored;
    std::uint64_t h = 0, w = 0, n = 0;
    header >> magic >> h >> w >> n >> stored;
    if (!header || magic != "SPRT1") return std::nullopt;
    if (bytes.size() - nl - 1 != static_cast<std::size_t>(h) * w * sizeof(std::uint32_t))
        return std::nullopt;
    const std::string hash_input = "SPRT1 " + std::to_string(h) + " " + std::to_string(w) + " " +
                                   std::to_string(n) + "\n" + bytes.substr(nl + 1);
    return sha256_hex(hash_input);
}

inline bool attachment_matches_hash(const std::filesystem::path& file, const std::string& type,
                                    const std::string& expect, std::string& why) {
    if (!std::filesystem::exists(file)) {
        why = "attachment missing: " + file.string();
        return false;
    }
    const std::string bytes = read_file_bytes(file);
    std::string got;
    if (type == "partition") {
        const auto h = partition_attachment_hash(bytes);
        if (!h) {
            why = "attachment is not a valid partition container";
            return false;
        }
        got = *h;
    } else {
        // hierarchy documents, region graphs and scalar fields hash as their
        // exact file bytes
        got = sha256_hex(bytes);
    }
    if (got != expect) {
        why = "recomputed " + got.substr(0, 12) + "..., expected " + expect.substr(0, 12) + "...";
        return false;
    }
    return true;
}

} // namespace detail

// Checks schema validity, do_id recomputation, payload hashes, presence of the
// five required metadata items, and envelope summary recomputation. Returns a
// report; never throws on conformance problems.
inline ConformanceReport verify_do(const std::filesystem::path& do_file) {
    ConformanceReport report;
    auto add = [&](const std::string& name, bool passed, const std::string& detail = "") {
        report.checks.push_back({name, passed, detail});
    };

    if (!std::filesystem::exists(do_file)) {
        add("readable", false, "file not found: " + do_file.string());
        return report;
    }
    json doc = json::parse(read_file_bytes(do_file), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        add("readable", false, "not a JSON object");
        return report;
    }
    add("readable", true);

    // the five required metadata items
    add("criterion_present (item i)", doc.contains("criterion") && doc["criterion"].is_object() &&
                                          doc["criterion"].contains("canonical") &&
                                          doc["criterion"].contains("digest"));
    add("implementation_present (item ii)",
        doc.contains("implementation") && doc["implementation"].is_object() &&
            doc["implementation"].contains("id"));
    add("stability_declaration_present (item iii)",
        doc.contains("stability_declaration") && doc["stability_declaration"].is_object() &&
            !doc["stability_declaration"].empty());
    add("quality_metrics_present (item iv)",
        doc.contains("quality_metrics") && doc["quality_metrics"].is_object());
    add("envelope_present (item v)",
        doc.contains("envelope") && (doc["envelope"].is_object() || doc["envelope"] == json("none")));

    const bool schema_ok = doc.contains("schema_version") && doc.contains("payload") &&
                           doc.contains("provenance") && doc.contains("version") &&
                           doc.contains("do_id");
    add("schema", schema_ok);

    if (doc.contains("do_id") && doc["do_id"].is_string()) {
        const std::string recomputed = detail::do_id_of_document(doc);
        add("do_id_recomputation", recomputed == doc["do_id"].get<std::string>(),
            recomputed == doc["do_id"].get<std::string>() ? "" : "recomputed " + recomputed.substr(0, 12) + "...");
    } else {
        add("do_id_recomputation", false, "do_id missing");
    }

    if (doc.contains("criterion") && doc["criterion"].is_object() &&
        doc["criterion"].contains("canonical") && doc["criterion"].contains("digest")) {
        const std::string digest = sha256_hex(canonical_dump(doc["criterion"]["canonical"]));
        add("criterion_digest", digest == doc["criterion"]["digest"].get<std::string>());
    }

    if (doc.contains("payload") && doc["payload"].is_object() && doc["payload"].contains("file") &&
        doc["payload"].contains("product_hash") && doc["payload"].contains("type")) {
        const std::string type = doc["payload"]["type"].get<std::string>();
        const std::string expect = doc["payload"]["product_hash"].get<std::string>();
        const std::filesystem::path file = do_file.parent_path() / doc["payload"]["file"].get<std::string>();
        std::string why;
        bool ok = detail::attachment_matches_hash(file, type, expect, why);
        if (ok && type == "hierarchy") {
            const json h = json::parse(read_file_bytes(file), nullptr, false);
            if (h.is_discarded()) {
                ok = false;
                why = "hierarchy document is not valid JSON";
            } else {
                for (const auto& level : h.value("levels", json::array())) {
                    const std::string lh = level.value("product_hash", "");
                    const std::filesystem::path lf = do_file.parent_path() / "payloads" / lh;
                    std::string lwhy;
                    if (!detail::attachment_matches_hash(lf, "partition", lh, lwhy)) {
                        ok = false;
                        why = "level attachment: " + lwhy;
                        break;
                    }
                }
            }
        }
        add("payload_hash", ok, why);
    } else {
        add("payload_hash", false, "payload block missing or incomplete");
    }

    if (doc.contains("envelope") && doc["envelope"].is_object()) {
        StabilityEnvelope env = envelope_from_json(doc["envelope"]);
        const MetricSummary vi = env.vi, ari = env.ari, bf = env.boundary_f;
        summarize_envelope(env);
        auto same = [](const MetricSummary& a, const MetricSummary& b) {
            return a.mean == b.mean && a.min == b.min && a.max == b.max && a.std_dev == b.std_dev;
        };
        add("envelope_summary_recomputation",
            same(vi, env.vi) && same(ari, env.ari) && same(bf, env.boundary_f));
        add("envelope_replicate_count",
            env.per_replicate.size() == static_cast<std::size_t>(env.n_replicates));
    }

    return report;
}

// ---------------------------------------------------------------------------
// Lineage
// ---------------------------------------------------------------------------

struct LineageGraph {
    std::vector<std::string> nodes; // do_ids, sorted
    std::vector<std::pair<std::string, std::string>> edges; // parent -> child
    std::vector<std::string> external_parents; // referenced but not in the set
};

// Directed acyclic lineage over a set of DO documents. Cycles and version
// regressions are errors.
inline LineageGraph do_lineage(const std::vector<json>& docs) {
    std::map<std::string, std::int64_t> version;
    std::map<std::string, std::vector<std::string>> parents;
    for (const auto& doc : docs) {
        if (!doc.contains("do_id")) fail_usage("lineage: document without do_id");
        const std::string id = doc["do_id"].get<std::string>();
        version[id] = doc.value("version", std::int64_t(0));
        for (const auto& p : doc.value("provenance", json::object()).value("parents", json::array()))
            parents[id].push_back(p.get<std::string>());
    }

    LineageGraph g;
    std::set<std::string> external;
    for (const auto& [id, ps] : parents) {
        for (const auto& p : ps) {
            if (!version.count(p)) {
                external.insert(p);
                continue;
            }
            if (version[id] <= version[p])
                fail_validation("lineage: version of " + id.substr(0, 12) +
                                "... does not increase over parent " + p.substr(0, 12) + "...");
            g.edges.emplace_back(p, id);
        }
    }
    for (const auto& [id, v] : version) g.nodes.push_back(id);
    g.external_parents.assign(external.begin(), external.end());

    // cycle detection (iterative DFS, white/grey/black)
    std::map<std::string, int> state;
    std::map<std::string, std::vector<std::string>> children;
    for (const auto& [p, c] : g.edges) children[p].push_back(c);
    for (const auto& start : g.nodes) {
        if (state[start] != 0) continue;
        std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
        state[start] = 1;
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            const auto& kids = children[node];
            if (next < kids.size()) {
                const std::string child = kids[next++];
                if (state[child] == 1) fail_validation("lineage: cycle detected through " + child.substr(0, 12) + "...");
                if (state[child] == 0) {
                    state[child] = 1;
                    stack.emplace_back(child, 0);
                }
            } else {
                state[node] = 2;
                stack.pop_back();
            }
        }
    }
    return g;
}

} // namespace strukt
