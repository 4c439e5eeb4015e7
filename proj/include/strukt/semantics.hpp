#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "strukt/canonical.hpp"
#include "strukt/errors.hpp"
#include "strukt/field.hpp"
#include "strukt/hexdigest.hpp"
#include "strukt/products.hpp"

namespace strukt {

// Downstream, purpose-bound vocabulary. "unmapped" is a reserved sentinel
// available in every ontology and may not be declared as a regular term.
inline constexpr const char* kUnmappedTerm = "unmapped";

struct OntologyTerm {
    std::string id;
    std::string display_name;
};

struct Ontology {
    std::string ontology_id;
    std::string version;
    std::vector<OntologyTerm> terms;

    bool has_term(const std::string& term_id) const {
        if (term_id == kUnmappedTerm) return true;
        for (const auto& t : terms)
            if (t.id == term_id) return true;
        return false;
    }
};

inline void validate_ontology(const Ontology& o) {
    if (o.ontology_id.empty()) fail_usage("ontology_id must be non-empty");
    if (o.terms.empty()) fail_usage("ontology must declare at least one term");
    std::set<std::string> seen;
    for (const auto& t : o.terms) {
        if (t.id.empty()) fail_usage("ontology term ids must be non-empty");
        if (t.id == kUnmappedTerm) fail_usage("'unmapped' is reserved and cannot be declared");
        if (!seen.insert(t.id).second) fail_usage("duplicate ontology term id: " + t.id);
    }
}

// Rule predicates test region statistics only: per-channel mean ranges and
// pixel-count ranges. Declarative by construction; no code hooks.
struct RuleCondition {
    enum class Stat { mean, pixel_count };
    Stat stat = Stat::mean;
    std::uint32_t channel = 0; // for mean
    double min = -1e300;
    double max = 1e300;
};

struct MappingRule {
    std::vector<RuleCondition> conditions; // conjunctive
    std::string term;
};

struct SemanticMapping {
    std::string mapping_id;
    std::string ontology_id;
    std::string ontology_version;
    std::vector<MappingRule> rules; // evaluated in order, first match wins
    std::string default_term = kUnmappedTerm;
};

inline void validate_mapping(const SemanticMapping& m, const Ontology& o) {
    validate_ontology(o);
    if (m.mapping_id.empty()) fail_usage("mapping_id must be non-empty");
    if (m.ontology_id != o.ontology_id || m.ontology_version != o.version)
        fail_usage("mapping targets ontology " + m.ontology_id + "@" + m.ontology_version +
                   " but got " + o.ontology_id + "@" + o.version);
    for (const auto& rule : m.rules)
        if (!o.has_term(rule.term)) fail_validation("rule term not in ontology: " + rule.term);
    if (!o.has_term(m.default_term)) fail_validation("default term not in ontology: " + m.default_term);
}

// A semantic layer over a structural product. The product itself is
// referenced by hash and never modified.
struct LabeledProduct {
    std::string product_hash;
    std::vector<std::string> region_terms; // indexed by region id
    std::string mapping_id;
    std::string ontology_id;
    std::string ontology_version;
    std::vector<std::string> applied_crosswalks; // provenance
};

struct Crosswalk {
    enum class UnmappedPolicy { strict, to_unmapped };
    std::string source_ontology_id, source_version;
    std::string target_ontology_id, target_version;
    std::map<std::string, std::string> term_map;
    UnmappedPolicy policy = UnmappedPolicy::strict;
};

inline LabeledProduct apply_mapping(const MeasurementField& field, const Partition& p,
                                    const SemanticMapping& m, const Ontology& o) {
    validate_mapping(m, o);
    const RegionGraph g = region_graph(field, p);
    LabeledProduct lp;
    lp.product_hash = product_hash(p);
    lp.mapping_id = m.mapping_id;
    lp.ontology_id = m.ontology_id;
    lp.ontology_version = m.ontology_version;
    lp.region_terms.reserve(g.nodes.size());
    for (const auto& node : g.nodes) {
        std::string term = m.default_term;
        for (const auto& rule : m.rules) {
            bool all = true;
            for (const auto& cond : rule.conditions) {
                double value;
                if (cond.stat == RuleCondition::Stat::mean) {
                    if (cond.channel >= node.mean.size())
                        fail_usage("mapping rule references channel " + std::to_string(cond.channel) +
                                   " beyond the field's channel count");
                    value = node.mean[cond.channel];
                } else {
                    value = static_cast<double>(node.pixel_count);
                }
                if (!(value >= cond.min && value <= cond.max)) {
                    all = false;
                    break;
                }
            }
            if (all) {
                term = rule.term;
                break;
            }
        }
        lp.region_terms.push_back(term);
    }
    return lp;
}

// Term-by-term translation into another ontology; the underlying product
// hash is untouched and both mapping and crosswalk are recorded.
inline LabeledProduct apply_crosswalk(const LabeledProduct& lp, const Crosswalk& cw) {
    if (lp.ontology_id != cw.source_ontology_id || lp.ontology_version != cw.source_version)
        fail_usage("crosswalk source " + cw.source_ontology_id + "@" + cw.source_version +
                   " does not match labeled product ontology " + lp.ontology_id + "@" +
                   lp.ontology_version);
    LabeledProduct out = lp;
    out.ontology_id = cw.target_ontology_id;
    out.ontology_version = cw.target_version;
    out.applied_crosswalks.push_back(cw.source_ontology_id + "@" + cw.source_version + "->" +
                                     cw.target_ontology_id + "@" + cw.target_version);
    for (auto& term : out.region_terms) {
        if (term == kUnmappedTerm) continue;
        auto it = cw.term_map.find(term);
        if (it != cw.term_map.end()) {
            term = it->second;
        } else if (cw.policy == Crosswalk::UnmappedPolicy::strict) {
            fail_validation("crosswalk has no target for term: " + term);
        } else {
            term = kUnmappedTerm;
        }
    }
    return out;
}

// Fraction of regions assigned the same term by two labelings of the same
// structural product.
inline double mapping_agreement(const LabeledProduct& a, const LabeledProduct& b) {
    if (a.product_hash != b.product_hash)
        fail_usage("mapping_agreement requires labelings of the same structural product");
    if (a.region_terms.size() != b.region_terms.size())
        fail_internal("labelings of one product disagree on region count");
    if (a.region_terms.empty()) return 1.0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.region_terms.size(); ++i)
        same += a.region_terms[i] == b.region_terms[i];
    return static_cast<double>(same) / static_cast<double>(a.region_terms.size());
}

// ---------------------------------------------------------------------------
// JSON documents (each is its own content-hashed artifact)
// ---------------------------------------------------------------------------

inline json ontology_to_json(const Ontology& o) {
    json terms = json::array();
    for (const auto& t : o.terms) terms.push_back({{"id", t.id}, {"name", t.display_name}});
    json j;
    j["ontology_id"] = o.ontology_id;
    j["version"] = o.version;
    j["terms"] = terms;
    return j;
}

inline Ontology ontology_from_json(const json& j) {
    Ontology o;
    o.ontology_id = j.value("ontology_id", "");
    o.version = j.value("version", "");
    for (const auto& t : j.value("terms", json::array()))
        o.terms.push_back({t.value("id", ""), t.value("name", "")});
    validate_ontology(o);
    return o;
}

inline json mapping_to_json(const SemanticMapping& m) {
    json rules = json::array();
    for (const auto& rule : m.rules) {
        json conds = json::array();
        for (const auto& c : rule.conditions) {
            json jc;
            jc["stat"] = c.stat == RuleCondition::Stat::mean ? "mean" : "pixel_count";
            if (c.stat == RuleCondition::Stat::mean) jc["channel"] = c.channel;
            jc["min"] = c.min;
            jc["max"] = c.max;
            conds.push_back(jc);
        }
        rules.push_back({{"conditions", conds}, {"term", rule.term}});
    }
    json j;
    j["mapping_id"] = m.mapping_id;
    j["ontology"] = {{"id", m.ontology_id}, {"version", m.ontology_version}};
    j["rules"] = rules;
    j["default_term"] = m.default_term;
    return j;
}

inline SemanticMapping mapping_from_json(const json& j) {
    SemanticMapping m;
    m.mapping_id = j.value("mapping_id", "");
    if (j.contains("ontology")) {
        m.ontology_id = j["ontology"].value("id", "");
        m.ontology_version = j["ontology"].value("version", "");
    }
    m.default_term = j.value("default_term", std::string(kUnmappedTerm));
    for (const auto& jr : j.value("rules", json::array())) {
        MappingRule rule;
        rule.term = jr.value("term", "");
        for (const auto& jc : jr.value("conditions", json::array())) {
            RuleCondition c;
            c.stat = jc.value("stat", "mean") == std::string("pixel_count")
                         ? RuleCondition::Stat::pixel_count
                         : RuleCondition::Stat::mean;
            c.channel = jc.value("channel", 0u);
            c.min = jc.value("min", -1e300);
            c.max = jc.value("max", 1e300);
            rule.conditions.push_back(c);
        }
        m.rules.push_back(rule);
    }
    return m;
}

inline json crosswalk_to_json(const Crosswalk& cw) {
    json j;
    j["source"] = {{"id", cw.source_ontology_id}, {"version", cw.source_version}};
    j["target"] = {{"id", cw.target_ontology_id}, {"version", cw.target_version}};
    j["term_map"] = cw.term_map;
    j["unmapped_policy"] = cw.policy == Crosswalk::UnmappedPolicy::strict ? "strict" : "to_unmapped";
    return j;
}

inline Crosswalk crosswalk_from_json(const json& j) {
    Crosswalk cw;
    if (j.contains("source")) {
        cw.source_ontology_id = j["source"].value("id", "");
        cw.source_version = j["source"].value("version", "");
    }
    if (j.contains("target")) {
        cw.target_ontology_id = j["target"].value("id", "");
        cw.target_version = j["target"].value("version", "");
    }
    if (j.contains("term_map"))
        for (const auto& [k, v] : j["term_map"].items()) cw.term_map[k] = v.get<std::string>();
    cw.policy = j.value("unmapped_policy", "strict") == std::string("to_unmapped")
                    ? Crosswalk::UnmappedPolicy::to_unmapped
                    : Crosswalk::UnmappedPolicy::strict;
    return cw;
}

inline json labeled_product_to_json(const LabeledProduct& lp) {
    json table = json::array();
    for (std::size_t i = 0; i < lp.region_terms.size(); ++i)
        table.push_back({{"region", i}, {"term", lp.region_terms[i]}});
    json j;
    j["product_hash"] = lp.product_hash;
    j["mapping_id"] = lp.mapping_id;
    j["ontology"] = {{"id", lp.ontology_id}, {"version", lp.ontology_version}};
    j["regions"] = table;
    j["applied_crosswalks"] = lp.applied_crosswalks;
    return j;
}

inline LabeledProduct labeled_product_from_json(const json& j) {
    LabeledProduct lp;
    lp.product_hash = j.value("product_hash", "");
    lp.mapping_id = j.value("mapping_id", "");
    if (j.contains("ontology")) {
        lp.ontology_id = j["ontology"].value("id", "");
        lp.ontology_version = j["ontology"].value("version", "");
    }
    for (const auto& row : j.value("regions", json::array()))
        lp.region_terms.push_back(row.value("term", ""));
    for (const auto& c : j.value("applied_crosswalks", json::array()))
        lp.applied_crosswalks.push_back(c.get<std::string>());
    return lp;
}

} // namespace strukt
