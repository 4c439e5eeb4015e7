#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "strukt/canonical.hpp"
#include "strukt/errors.hpp"
#include "strukt/hexdigest.hpp"

namespace strukt {

enum class CriterionFamily {
    threshold_separation,
    homogeneity_merge,
    global_cut,
    scale_coherence,
};

inline const char* to_string(CriterionFamily f) {
    switch (f) {
        case CriterionFamily::threshold_separation: return "threshold_separation";
        case CriterionFamily::homogeneity_merge: return "homogeneity_merge";
        case CriterionFamily::global_cut: return "global_cut";
        case CriterionFamily::scale_coherence: return "scale_coherence";
    }
    fail_internal("unknown criterion family");
}

inline CriterionFamily criterion_family_from_string(const std::string& s) {
    if (s == "threshold_separation") return CriterionFamily::threshold_separation;
    if (s == "homogeneity_merge") return CriterionFamily::homogeneity_merge;
    if (s == "global_cut") return CriterionFamily::global_cut;
    if (s == "scale_coherence") return CriterionFamily::scale_coherence;
    fail_usage("unknown criterion family: " + s);
}

// Parameter values are numeric, or a member of a per-family enum of
// algorithmic choices. Free-form strings (label names, ontology terms) are
// rejected by validation, which keeps criteria semantics-free by construction.
using ParamValue = std::variant<std::int64_t, double, std::string>;

struct CriterionSpec {
    CriterionFamily family = CriterionFamily::threshold_separation;
    std::map<std::string, ParamValue> params;
    std::string schema_version = "1";
};

namespace detail {

struct ParamRule {
    enum class Type { integer, real, choice };
    Type type = Type::real;
    double min = -std::numeric_limits<double>::infinity();
    bool min_exclusive = false;
    std::vector<std::string> choices;
};

inline const std::map<std::string, ParamRule>& family_schema(CriterionFamily f) {
    using T = ParamRule::Type;
    static const std::map<std::string, ParamRule> threshold{
        {"channel", {T::integer, 0.0, false, {}}},
        {"bins", {T::integer, 2.0, false, {}}},
        {"min_region", {T::integer, 1.0, false, {}}},
    };
    static const std::map<std::string, ParamRule> merge{
        {"lambda", {T::real, 0.0, true, {}}},
        {"stop", {T::choice, 0.0, false, {"local_min", "n_levels"}}},
        {"n_levels", {T::integer, 1.0, false, {}}},
    };
    static const std::map<std::string, ParamRule> cut{
        {"sigma_I", {T::real, 0.0, true, {}}},
        {"sweep", {T::integer, 1.0, false, {}}},
        {"max_iter", {T::integer, 1.0, false, {}}},
        {"tol", {T::real, 0.0, true, {}}},
    };
    static const std::map<std::string, ParamRule> scale{
        {"channel", {T::integer, 0.0, false, {}}},
        {"n_scales", {T::integer, 2.0, false, {}}},
        {"base_sigma", {T::real, 0.0, true, {}}},
    };
    switch (f) {
        case CriterionFamily::threshold_separation: return threshold;
        case CriterionFamily::homogeneity_merge: return merge;
        case CriterionFamily::global_cut: return cut;
        case CriterionFamily::scale_coherence: return scale;
    }
    fail_internal("unknown criterion family");
}

} // namespace detail

struct SpecValidationReport {
    std::vector<std::string> missing;
    std::vector<std::string> extra;
    std::vector<std::string> out_of_range; // "name: reason" entries
    bool ok() const { return missing.empty() && extra.empty() && out_of_range.empty(); }
    std::string to_text() const {
        if (ok()) return "valid";
        std::string s;
        for (const auto& m : missing) s += "missing parameter: " + m + "\n";
        for (const auto& e : extra) s += "unexpected parameter: " + e + "\n";
        for (const auto& r : out_of_range) s += "out of range: " + r + "\n";
        return s;
    }
};

inline SpecValidationReport validate_spec(const CriterionSpec& spec) {
    SpecValidationReport report;
    const auto& schema = detail::family_schema(spec.family);
    for (const auto& [name, rule] : schema)
        if (!spec.params.count(name)) report.missing.push_back(name);
    for (const auto& [name, value] : spec.params) {
        auto it = schema.find(name);
        if (it == schema.end()) {
            report.extra.push_back(name);
            continue;
        }
        const auto& rule = it->second;
        using T = detail::ParamRule::Type;
        if (rule.type == T::choice) {
            const auto* s = std::get_if<std::string>(&value);
            if (!s) {
                report.out_of_range.push_back(name + ": expected one of the declared choices");
                continue;
            }
            bool found = false;
            for (const auto& c : rule.choices)
                if (c == *s) found = true;
            if (!found) report.out_of_range.push_back(name + ": '" + *s + "' is not a declared choice");
            continue;
        }
        double num;
        if (const auto* i = std::get_if<std::int64_t>(&value)) {
            num = static_cast<double>(*i);
        } else if (const auto* d = std::get_if<double>(&value)) {
            num = *d;
            if (rule.type == T::integer && *d != std::floor(*d)) {
                report.out_of_range.push_back(name + ": must be an integer");
                continue;
            }
        } else {
            report.out_of_range.push_back(name + ": must be numeric");
            continue;
        }
        if (!std::isfinite(num)) {
            report.out_of_range.push_back(name + ": must be finite");
            continue;
        }
        if (rule.min_exclusive ? (num <= rule.min) : (num < rule.min))
            report.out_of_range.push_back(name + ": must be " + (rule.min_exclusive ? "> " : ">= ") +
                                          format_double(rule.min));
    }
    return report;
}

namespace detail {

// Normalizes each parameter to its schema type so that value-equal specs
// canonicalize identically (integer-valued reals for int params become
// integers; int literals for real params become doubles).
inline json params_to_canonical_json(const CriterionSpec& spec) {
    const auto& schema = family_schema(spec.family);
    json out = json::object();
    for (const auto& [name, value] : spec.params) {
        const auto& rule = schema.at(name);
        using T = ParamRule::Type;
        switch (rule.type) {
            case T::integer: {
                if (const auto* i = std::get_if<std::int64_t>(&value)) out[name] = *i;
                else out[name] = static_cast<std::int64_t>(std::get<double>(value));
                break;
            }
            case T::real: {
                if (const auto* d = std::get_if<double>(&value)) out[name] = *d;
                else out[name] = static_cast<double>(std::get<std::int64_t>(value));
                break;
            }
            case T::choice: out[name] = std::get<std::string>(value); break;
        }
    }
    return out;
}

} // namespace detail

// Deterministic byte form: sorted keys, shortest round-trip numbers, no
// insignificant whitespace. This is the citable criterion artifact.
inline std::string canonicalize(const CriterionSpec& spec) {
    const auto report = validate_spec(spec);
    if (!report.ok()) fail_usage("invalid criterion spec:\n" + report.to_text());
    json j;
    j["family"] = to_string(spec.family);
    j["params"] = detail::params_to_canonical_json(spec);
    j["schema_version"] = spec.schema_version;
    return canonical_dump(j);
}

inline std::string criterion_hash(const CriterionSpec& spec) { return sha256_hex(canonicalize(spec)); }

inline CriterionSpec criterion_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family") || !j.contains("params"))
        fail_usage("criterion document must be an object with 'family' and 'params'");
    CriterionSpec spec;
    spec.family = criterion_family_from_string(j.at("family").get<std::string>());
    if (j.contains("schema_version")) spec.schema_version = j.at("schema_version").get<std::string>();
    if (!j.at("params").is_object()) fail_usage("criterion 'params' must be an object");
    for (const auto& [name, value] : j.at("params").items()) {
        if (value.is_number_integer())
            spec.params[name] = value.get<std::int64_t>();
        else if (value.is_number_float())
            spec.params[name] = value.get<double>();
        else if (value.is_string())
            spec.params[name] = value.get<std::string>();
        else
            fail_usage("criterion parameter '" + name + "' must be a number or declared choice");
    }
    return spec;
}

inline CriterionSpec load_criterion_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail_io("criterion file not found: " + path.string());
    return criterion_from_json(parse_json_file(path));
}

inline void save_criterion_file(const CriterionSpec& spec, const std::filesystem::path& path) {
    write_file_bytes(path, canonicalize(spec));
}

// Convenience builders for the four shipped families.
inline CriterionSpec make_threshold_criterion(std::int64_t channel, std::int64_t bins,
                                              std::int64_t min_region = 1) {
    CriterionSpec s;
    s.family = CriterionFamily::threshold_separation;
    s.params = {{"channel", channel}, {"bins", bins}, {"min_region", min_region}};
    return s;
}

inline CriterionSpec make_merge_criterion(double lambda, const std::string& stop = "local_min",
                                          std::int64_t n_levels = 1) {
    CriterionSpec s;
    s.family = CriterionFamily::homogeneity_merge;
    s.params = {{"lambda", lambda}, {"stop", stop}, {"n_levels", n_levels}};
    return s;
}

inline CriterionSpec make_cut_criterion(double sigma_i, std::int64_t sweep = 32,
                                        std::int64_t max_iter = 5000, double tol = 1e-8) {
    CriterionSpec s;
    s.family = CriterionFamily::global_cut;
    s.params = {{"sigma_I", sigma_i}, {"sweep", sweep}, {"max_iter", max_iter}, {"tol", tol}};
    return s;
}

inline CriterionSpec make_scale_criterion(std::int64_t channel, std::int64_t n_scales,
                                          double base_sigma) {
    CriterionSpec s;
    s.family = CriterionFamily::scale_coherence;
    s.params = {{"channel", channel}, {"n_scales", n_scales}, {"base_sigma", base_sigma}};
    return s;
}

} // namespace strukt
