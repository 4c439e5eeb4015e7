#pragma once

#include <charconv>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "strukt/errors.hpp"

namespace strukt {

// Canonical JSON: nlohmann::json with the default std::map object type already
// sorts keys lexicographically and renders doubles in shortest round-trip form,
// so dump() of a compact document is the canonical byte sequence.
using json = nlohmann::json;

inline std::string canonical_dump(const json& j) { return j.dump(); }

// Locale-independent shortest round-trip rendering for CSV/SVG output.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int precision) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail_io("read error: " + path.string());
    return data;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view data) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open file for writing: " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) fail_io("write error: " + path.string());
}

inline json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_file_bytes(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail_usage("malformed JSON: " + path.string());
    return j;
}

inline std::string iso8601_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

} // namespace strukt
