#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "strukt/canonical.hpp"
#include "strukt/errors.hpp"
#include "strukt/hexdigest.hpp"

namespace strukt {

static_assert(std::endian::native == std::endian::little,
              "field containers store little-endian float32 payloads");

// A measurement field on a 2-D grid: `channels` planes of height x width
// float32 samples, channel-major then row-major. Values are unit-interval by
// convention (enforced on import, not as an invariant). Immutable after
// construction; the hash covers dimensions and exact payload bytes.
struct MeasurementField {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 1;
    std::vector<float> values;
    std::string provenance_note;
    std::string field_hash;

    std::size_t index(std::uint32_t channel, std::uint32_t row, std::uint32_t col) const {
        return (static_cast<std::size_t>(channel) * height + row) * width + col;
    }
    float at(std::uint32_t channel, std::uint32_t row, std::uint32_t col) const {
        return values[index(channel, row, col)];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

namespace detail {

inline std::string field_header_prefix(std::uint32_t h, std::uint32_t w, std::uint32_t c) {
    return "MFLD1 " + std::to_string(h) + " " + std::to_string(w) + " " + std::to_string(c) + "\n";
}

} // namespace detail

inline std::string compute_field_hash(std::uint32_t h, std::uint32_t w, std::uint32_t c,
                                      const std::vector<float>& values) {
    std::string bytes = detail::field_header_prefix(h, w, c);
    const std::size_t off = bytes.size();
    bytes.resize(off + values.size() * sizeof(float));
    if (!values.empty()) std::memcpy(bytes.data() + off, values.data(), values.size() * sizeof(float));
    return sha256_hex(bytes.data(), bytes.size());
}

inline MeasurementField make_field(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                                   std::vector<float> values, std::string provenance_note = "") {
    if (height == 0 || width == 0 || channels == 0)
        fail_usage("field dimensions must be positive");
    const std::size_t expect = static_cast<std::size_t>(height) * width * channels;
    if (values.size() != expect)
        fail_usage("field sample count mismatch: expected " + std::to_string(expect) + ", got " +
                   std::to_string(values.size()));
    for (float v : values)
        if (!std::isfinite(v)) fail_usage("field contains a non-finite sample");
    MeasurementField f;
    f.height = height;
    f.width = width;
    f.channels = channels;
    f.values = std::move(values);
    f.provenance_note = std::move(provenance_note);
    f.field_hash = compute_field_hash(height, width, channels, f.values);
    return f;
}

inline void save_field(const MeasurementField& f, const std::filesystem::path& path) {
    std::string bytes = "MFLD1 " + std::to_string(f.height) + " " + std::to_string(f.width) + " " +
                        std::to_string(f.channels) + " " + f.field_hash + "\n";
    const std::size_t off = bytes.size();
    bytes.resize(off + f.values.size() * sizeof(float));
    if (!f.values.empty())
        std::memcpy(bytes.data() + off, f.values.data(), f.values.size() * sizeof(float));
    write_file_bytes(path, bytes);
}

inline MeasurementField load_field(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail_io("field file not found: " + path.string());
    const std::string bytes = read_file_bytes(path);
    const std::size_t nl = bytes.find('\n');
    if (nl == std::string::npos) fail_usage("malformed field header (no newline): " + path.string());

    std::istringstream header(bytes.substr(0, nl));
    std::string magic, stored_hash;
    std::uint64_t h = 0, w = 0, c = 0;
    header >> magic >> h >> w >> c >> stored_hash;
    if (!header || magic != "MFLD1" || !is_hex_digest(stored_hash))
        fail_usage("malformed field header: " + path.string());
    if (h == 0 || w == 0 || c == 0 || h > 0xffffffffULL || w > 0xffffffffULL || c > 0xffffffffULL)
        fail_usage("field header declares invalid dimensions: " + path.string());

    const std::size_t expect = static_cast<std::size_t>(h) * w * c;
    const std::size_t payload = bytes.size() - nl - 1;
    if (payload != expect * sizeof(float))
        fail_usage("field sample count mismatch: header declares " + std::to_string(expect) +
                   " samples, payload holds " + std::to_string(payload / sizeof(float)));

    std::vector<float> values(expect);
    if (expect > 0) std::memcpy(values.data(), bytes.data() + nl + 1, payload);
    for (float v : values)
        if (!std::isfinite(v)) fail_usage("field payload contains a non-finite sample: " + path.string());

    const std::string recomputed = compute_field_hash(static_cast<std::uint32_t>(h),
                                                      static_cast<std::uint32_t>(w),
                                                      static_cast<std::uint32_t>(c), values);
    if (recomputed != stored_hash)
        fail_validation("field hash mismatch: stored " + stored_hash + ", recomputed " + recomputed);

    MeasurementField f;
    f.height = static_cast<std::uint32_t>(h);
    f.width = static_cast<std::uint32_t>(w);
    f.channels = static_cast<std::uint32_t>(c);
    f.values = std::move(values);
    f.field_hash = stored_hash;
    f.provenance_note = "loaded from " + path.filename().string();
    return f;
}

namespace detail {

// PGM tokenizer: skips whitespace and '#' comments in the header.
inline std::string pgm_token(const std::string& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) fail_usage("malformed PGM: truncated header");
    return bytes.substr(start, pos - start);
}

inline std::uint64_t pgm_number(const std::string& bytes, std::size_t& pos) {
    const std::string tok = pgm_token(bytes, pos);
    std::uint64_t v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        fail_usage("malformed PGM: expected a number, got '" + tok + "'");
    return v;
}

} // namespace detail

// Binary (P5) or ASCII (P2) PGM, maxval in [1, 65535]; samples normalized to
// [0,1] as raw/maxval. Two-byte binary samples are big-endian per the format.
inline MeasurementField import_pgm(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail_io("PGM file not found: " + path.string());
    const std::string bytes = read_file_bytes(path);
    std::size_t pos = 0;
    const std::string magic = detail::pgm_token(bytes, pos);
    if (magic != "P5" && magic != "P2") fail_usage("unsupported PGM magic: " + magic);
    const std::uint64_t w = detail::pgm_number(bytes, pos);
    const std::uint64_t h = detail::pgm_number(bytes, pos);
    const std::uint64_t maxval = detail::pgm_number(bytes, pos);
    if (w == 0 || h == 0) fail_usage("malformed PGM: zero dimensions");
    if (maxval == 0) fail_usage("malformed PGM: maxval 0");
    if (maxval > 65535) fail_usage("unsupported PGM maxval " + std::to_string(maxval));

    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<float> values(n);
    if (magic == "P5") {
        ++pos; // single whitespace byte after maxval
        const std::size_t bpp = maxval > 255 ? 2 : 1;
        if (bytes.size() - pos < n * bpp) fail_usage("malformed PGM: truncated payload");
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t raw;
            if (bpp == 1) {
                raw = static_cast<unsigned char>(bytes[pos + i]);
            } else {
                raw = (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + 2 * i])) << 8) |
                      static_cast<unsigned char>(bytes[pos + 2 * i + 1]);
            }
            if (raw > maxval) fail_usage("malformed PGM: sample exceeds maxval");
            values[i] = static_cast<float>(static_cast<double>(raw) / static_cast<double>(maxval));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t raw = detail::pgm_number(bytes, pos);
            if (raw > maxval) fail_usage("malformed PGM: sample exceeds maxval");
            values[i] = static_cast<float>(static_cast<double>(raw) / static_cast<double>(maxval));
        }
    }
    return make_field(static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w), 1,
                      std::move(values), "imported from " + path.filename().string());
}

// Block-mean downsampling by an integer factor that divides both dimensions.
// Factor 1 reproduces the payload bytes exactly.
inline MeasurementField resample_box(const MeasurementField& f, std::uint32_t factor) {
    if (factor < 1) fail_usage("resample factor must be >= 1");
    if (f.height % factor != 0 || f.width % factor != 0)
        fail_usage("resample factor " + std::to_string(factor) + " does not divide " +
                   std::to_string(f.height) + "x" + std::to_string(f.width));
    if (factor == 1) {
        MeasurementField out = f;
        out.provenance_note = "resample_box(1) of " + f.field_hash.substr(0, 12);
        return out;
    }
    const std::uint32_t oh = f.height / factor;
    const std::uint32_t ow = f.width / factor;
    std::vector<float> values(static_cast<std::size_t>(oh) * ow * f.channels);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (std::uint32_t c = 0; c < f.channels; ++c) {
        for (std::uint32_t r = 0; r < oh; ++r) {
            for (std::uint32_t col = 0; col < ow; ++col) {
                double sum = 0.0;
                for (std::uint32_t dr = 0; dr < factor; ++dr)
                    for (std::uint32_t dc = 0; dc < factor; ++dc)
                        sum += f.at(c, r * factor + dr, col * factor + dc);
                values[(static_cast<std::size_t>(c) * oh + r) * ow + col] =
                    static_cast<float>(sum * inv);
            }
        }
    }
    return make_field(oh, ow, f.channels, std::move(values),
                      "resample_box(" + std::to_string(factor) + ") of " + f.field_hash.substr(0, 12));
}

inline double grand_mean(const MeasurementField& f) {
    double sum = 0.0;
    for (float v : f.values) sum += v;
    return f.values.empty() ? 0.0 : sum / static_cast<double>(f.values.size());
}

} // namespace strukt
