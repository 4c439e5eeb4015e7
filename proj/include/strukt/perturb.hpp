#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

#include "strukt/canonical.hpp"
#include "strukt/errors.hpp"
#include "strukt/field.hpp"
#include "strukt/hexdigest.hpp"
#include "strukt/rng.hpp"

namespace strukt {

enum class PerturbationFamily {
    identity,
    gaussian_noise,
    gamma_contrast,
    covariate_shift,
    downsample,
};

inline const char* to_string(PerturbationFamily f) {
    switch (f) {
        case PerturbationFamily::identity: return "identity";
        case PerturbationFamily::gaussian_noise: return "gaussian_noise";
        case PerturbationFamily::gamma_contrast: return "gamma_contrast";
        case PerturbationFamily::covariate_shift: return "covariate_shift";
        case PerturbationFamily::downsample: return "downsample";
    }
    fail_internal("unknown perturbation family");
}

inline PerturbationFamily perturbation_family_from_string(const std::string& s) {
    if (s == "identity") return PerturbationFamily::identity;
    if (s == "gaussian_noise") return PerturbationFamily::gaussian_noise;
    if (s == "gamma_contrast") return PerturbationFamily::gamma_contrast;
    if (s == "covariate_shift") return PerturbationFamily::covariate_shift;
    if (s == "downsample") return PerturbationFamily::downsample;
    fail_usage("unknown perturbation family: " + s);
}

struct PerturbationSpec {
    PerturbationFamily family = PerturbationFamily::identity;
    double sigma = 0.0;           // gaussian_noise
    double gamma = 1.0;           // gamma_contrast
    double gain = 1.0;            // gamma_contrast
    double bias = 0.0;            // gamma_contrast
    double remap_strength = 0.0;  // covariate_shift
    double mix_angle_deg = 0.0;   // covariate_shift, channels >= 2 only
    std::uint32_t factor = 1;     // downsample
    std::uint64_t seed = 0;       // used only by gaussian_noise
};

inline void validate_pspec(const PerturbationSpec& p) {
    switch (p.family) {
        case PerturbationFamily::identity: break;
        case PerturbationFamily::gaussian_noise:
            if (!(p.sigma >= 0.0)) fail_usage("gaussian_noise: sigma must be >= 0");
            break;
        case PerturbationFamily::gamma_contrast:
            if (!(p.gamma > 0.0)) fail_usage("gamma_contrast: gamma must be > 0");
            if (!std::isfinite(p.gain) || !std::isfinite(p.bias))
                fail_usage("gamma_contrast: gain and bias must be finite");
            break;
        case PerturbationFamily::covariate_shift:
            if (!(p.remap_strength >= 0.0 && p.remap_strength <= 1.0))
                fail_usage("covariate_shift: remap_strength must be in [0,1]");
            if (!std::isfinite(p.mix_angle_deg)) fail_usage("covariate_shift: mix angle must be finite");
            break;
        case PerturbationFamily::downsample:
            if (p.factor < 1) fail_usage("downsample: factor must be >= 1");
            break;
    }
}

inline std::string canonicalize(const PerturbationSpec& p) {
    validate_pspec(p);
    json params = json::object();
    switch (p.family) {
        case PerturbationFamily::identity: break;
        case PerturbationFamily::gaussian_noise: params["sigma"] = p.sigma; break;
        case PerturbationFamily::gamma_contrast:
            params["gamma"] = p.gamma;
            params["gain"] = p.gain;
            params["bias"] = p.bias;
            break;
        case PerturbationFamily::covariate_shift:
            params["remap_strength"] = p.remap_strength;
            params["mix_angle_deg"] = p.mix_angle_deg;
            break;
        case PerturbationFamily::downsample: params["factor"] = p.factor; break;
    }
    json j;
    j["family"] = to_string(p.family);
    j["params"] = params;
    j["schema_version"] = "1";
    j["seed"] = p.seed;
    return canonical_dump(j);
}

inline std::string perturbation_hash(const PerturbationSpec& p) { return sha256_hex(canonicalize(p)); }

inline PerturbationSpec perturbation_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family"))
        fail_usage("perturbation document must be an object with 'family'");
    PerturbationSpec p;
    p.family = perturbation_family_from_string(j.at("family").get<std::string>());
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    const json params = j.value("params", json::object());
    auto real = [&](const char* name, double dflt) { return params.value(name, dflt); };
    switch (p.family) {
        case PerturbationFamily::identity: break;
        case PerturbationFamily::gaussian_noise: p.sigma = real("sigma", 0.0); break;
        case PerturbationFamily::gamma_contrast:
            p.gamma = real("gamma", 1.0);
            p.gain = real("gain", 1.0);
            p.bias = real("bias", 0.0);
            break;
        case PerturbationFamily::covariate_shift:
            p.remap_strength = real("remap_strength", 0.0);
            p.mix_angle_deg = real("mix_angle_deg", 0.0);
            break;
        case PerturbationFamily::downsample:
            p.factor = params.value("factor", 1u);
            break;
    }
    validate_pspec(p);
    return p;
}

inline PerturbationSpec load_perturbation_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail_io("perturbation file not found: " + path.string());
    return perturbation_from_json(parse_json_file(path));
}

inline void save_perturbation_file(const PerturbationSpec& p, const std::filesystem::path& path) {
    write_file_bytes(path, canonicalize(p));
}

// Replicate r of a stability run perturbs with seed XOR r.
inline PerturbationSpec derive_replicate(PerturbationSpec p, std::uint64_t replicate_index) {
    p.seed ^= replicate_index;
    return p;
}

struct PerturbResult {
    MeasurementField field;
    std::uint64_t clamped = 0; // samples clipped back into [0,1]
};

namespace detail {

inline float clamp_unit(double v, std::uint64_t& clamped) {
    if (v < 0.0) {
        ++clamped;
        return 0.0f;
    }
    if (v > 1.0) {
        ++clamped;
        return 1.0f;
    }
    return static_cast<float>(v);
}

inline double smoothstep(double v) { return v * v * (3.0 - 2.0 * v); }

} // namespace detail

// Applies the declared perturbation. identity and sigma=0 noise are
// byte-identical copies; every output satisfies the field invariants.
inline PerturbResult apply_perturbation(const MeasurementField& field, const PerturbationSpec& pspec) {
    validate_pspec(pspec);
    PerturbResult out;
    switch (pspec.family) {
        case PerturbationFamily::identity: {
            out.field = field;
            return out;
        }
        case PerturbationFamily::gaussian_noise: {
            if (pspec.sigma == 0.0) {
                out.field = field;
                return out;
            }
            GaussianSampler gauss(pspec.seed);
            std::vector<float> values(field.values.size());
            for (std::size_t i = 0; i < values.size(); ++i)
                values[i] = detail::clamp_unit(
                    static_cast<double>(field.values[i]) + pspec.sigma * gauss.next(), out.clamped);
            out.field = make_field(field.height, field.width, field.channels, std::move(values),
                                   "gaussian_noise(sigma=" + format_double(pspec.sigma) +
                                       ", seed=" + std::to_string(pspec.seed) + ") of " +
                                       field.field_hash.substr(0, 12));
            return out;
        }
        case PerturbationFamily::gamma_contrast: {
            if (pspec.gamma == 1.0 && pspec.gain == 1.0 && pspec.bias == 0.0) {
                out.field = field;
                return out;
            }
            std::vector<float> values(field.values.size());
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double v = field.values[i];
                values[i] =
                    detail::clamp_unit(pspec.gain * std::pow(v, pspec.gamma) + pspec.bias, out.clamped);
            }
            out.field = make_field(field.height, field.width, field.channels, std::move(values),
                                   "gamma_contrast of " + field.field_hash.substr(0, 12));
            return out;
        }
        case PerturbationFamily::covariate_shift: {
            const double s = pspec.remap_strength;
            std::vector<float> values(field.values.size());
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double v = field.values[i];
                values[i] = static_cast<float>((1.0 - s) * v + s * detail::smoothstep(v));
            }
            if (field.channels >= 2 && pspec.mix_angle_deg != 0.0) {
                const double rad = pspec.mix_angle_deg * 3.14159265358979323846 / 180.0;
                const double ca = std::cos(rad), sa = std::sin(rad);
                const std::size_t n = field.pixel_count();
                for (std::size_t i = 0; i < n; ++i) {
                    const double a = values[i];
                    const double b = values[n + i];
                    values[i] = detail::clamp_unit(ca * a - sa * b, out.clamped);
                    values[n + i] = detail::clamp_unit(sa * a + ca * b, out.clamped);
                }
            }
            out.field = make_field(field.height, field.width, field.channels, std::move(values),
                                   "covariate_shift of " + field.field_hash.substr(0, 12));
            return out;
        }
        case PerturbationFamily::downsample: {
            out.field = resample_box(field, pspec.factor);
            return out;
        }
    }
    fail_internal("unknown perturbation family");
}

} // namespace strukt
