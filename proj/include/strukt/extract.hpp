#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "strukt/criterion.hpp"
#include "strukt/errors.hpp"
#include "strukt/field.hpp"
#include "strukt/otsu.hpp"
#include "strukt/products.hpp"
#include "strukt/region_merge.hpp"
#include "strukt/scale_persistence.hpp"
#include "strukt/spectral_cut.hpp"
#include "strukt/version.hpp"

namespace strukt {

struct ExtractionResult {
    StructuralProduct product;
    std::optional<double> objective; // absent for families without an energy
    std::string criterion_digest;
    std::string implementation_id;
};

namespace detail {

inline std::int64_t param_int(const CriterionSpec& spec, const std::string& name) {
    const auto& v = spec.params.at(name);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    return static_cast<std::int64_t>(std::get<double>(v));
}

inline double param_real(const CriterionSpec& spec, const std::string& name) {
    const auto& v = spec.params.at(name);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return static_cast<double>(std::get<std::int64_t>(v));
}

inline std::string param_choice(const CriterionSpec& spec, const std::string& name) {
    return std::get<std::string>(spec.params.at(name));
}

} // namespace detail

inline OtsuParams otsu_params_from(const CriterionSpec& spec) {
    OtsuParams p;
    p.channel = static_cast<std::uint32_t>(detail::param_int(spec, "channel"));
    p.bins = static_cast<std::uint32_t>(detail::param_int(spec, "bins"));
    p.min_region = static_cast<std::uint32_t>(detail::param_int(spec, "min_region"));
    return p;
}

inline MergeParams merge_params_from(const CriterionSpec& spec) {
    MergeParams p;
    p.lambda = detail::param_real(spec, "lambda");
    p.stop = detail::param_choice(spec, "stop") == "n_levels" ? MergeStop::n_levels
                                                              : MergeStop::local_min;
    p.n_levels = static_cast<std::uint32_t>(detail::param_int(spec, "n_levels"));
    return p;
}

inline SpectralParams spectral_params_from(const CriterionSpec& spec) {
    SpectralParams p;
    p.sigma_i = detail::param_real(spec, "sigma_I");
    p.sweep = static_cast<std::uint32_t>(detail::param_int(spec, "sweep"));
    p.max_iter = static_cast<std::uint32_t>(detail::param_int(spec, "max_iter"));
    p.tol = detail::param_real(spec, "tol");
    return p;
}

inline ScalePersistenceParams scale_params_from(const CriterionSpec& spec) {
    ScalePersistenceParams p;
    p.channel = static_cast<std::uint32_t>(detail::param_int(spec, "channel"));
    p.n_scales = static_cast<std::uint32_t>(detail::param_int(spec, "n_scales"));
    p.base_sigma = detail::param_real(spec, "base_sigma");
    return p;
}

// S_C(X): dispatches to the family operator. Every operator is a seedless
// pure function of (field bytes, canonical criterion bytes); repeated calls
// return byte-identical products.
inline ExtractionResult extract(const MeasurementField& field, const CriterionSpec& spec) {
    const auto report = validate_spec(spec);
    if (!report.ok()) fail_usage("invalid criterion spec:\n" + report.to_text());

    ExtractionResult result;
    result.criterion_digest = criterion_hash(spec);
    result.implementation_id = implementation_id();
    switch (spec.family) {
        case CriterionFamily::threshold_separation: {
            auto [p, objective] = otsu_partition_impl(field, otsu_params_from(spec));
            result.product = std::move(p);
            result.objective = objective;
            break;
        }
        case CriterionFamily::homogeneity_merge: {
            auto [h, objective] = region_merge_hierarchy_impl(field, merge_params_from(spec));
            result.product = std::move(h);
            result.objective = objective;
            break;
        }
        case CriterionFamily::global_cut: {
            auto [p, objective] = spectral_bipartition_impl(field, spectral_params_from(spec));
            result.product = std::move(p);
            result.objective = objective;
            break;
        }
        case CriterionFamily::scale_coherence: {
            auto [f, ignored] = scale_persistence_field_impl(field, scale_params_from(spec));
            (void)ignored;
            result.product = std::move(f);
            result.objective = std::nullopt;
            break;
        }
    }
    return result;
}

inline ExtractionResult otsu_partition(const MeasurementField& field, const CriterionSpec& spec) {
    if (spec.family != CriterionFamily::threshold_separation)
        fail_usage("otsu_partition requires a threshold_separation criterion");
    return extract(field, spec);
}

inline ExtractionResult region_merge_hierarchy(const MeasurementField& field,
                                               const CriterionSpec& spec) {
    if (spec.family != CriterionFamily::homogeneity_merge)
        fail_usage("region_merge_hierarchy requires a homogeneity_merge criterion");
    return extract(field, spec);
}

inline ExtractionResult spectral_bipartition(const MeasurementField& field,
                                             const CriterionSpec& spec) {
    if (spec.family != CriterionFamily::global_cut)
        fail_usage("spectral_bipartition requires a global_cut criterion");
    return extract(field, spec);
}

inline ExtractionResult scale_persistence_field(const MeasurementField& field,
                                                const CriterionSpec& spec) {
    if (spec.family != CriterionFamily::scale_coherence)
        fail_usage("scale_persistence_field requires a scale_coherence criterion");
    return extract(field, spec);
}

} // namespace strukt
