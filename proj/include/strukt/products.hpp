#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "strukt/canonical.hpp"
#include "strukt/errors.hpp"
#include "strukt/field.hpp"
#include "strukt/hexdigest.hpp"

namespace strukt {

// ---------------------------------------------------------------------------
// Product types
// ---------------------------------------------------------------------------

// Canonical form: dense region ids 0..n-1 ordered by first occurrence in a
// row-major scan. All library operations emit canonical partitions.
struct Partition {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::uint32_t> labels; // row-major
    std::uint32_t n_regions = 0;

    std::size_t index(std::uint32_t row, std::uint32_t col) const {
        return static_cast<std::size_t>(row) * width + col;
    }
    std::uint32_t at(std::uint32_t row, std::uint32_t col) const { return labels[index(row, col)]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

struct MergeEvent {
    std::uint32_t level = 0; // index of the last recorded level at merge time
    std::uint32_t region_a = 0;
    std::uint32_t region_b = 0;
    double delta_e = 0.0;
};

// Levels ordered finest to coarsest; each coarser cell is a union of finer
// cells and the region count is strictly decreasing.
struct Hierarchy {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<Partition> levels;
    std::vector<MergeEvent> merge_log;
};

struct RegionNode {
    std::uint32_t id = 0;
    std::uint64_t pixel_count = 0;
    std::vector<double> mean; // per channel
    std::uint32_t bbox[4] = {0, 0, 0, 0}; // min_row, min_col, max_row, max_col
};

struct RegionEdge {
    std::uint32_t a = 0;
    std::uint32_t b = 0; // a < b
    std::uint64_t boundary_len = 0; // shared 4-adjacency pixel edges
};

struct RegionGraph {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<RegionNode> nodes; // sorted by id
    std::vector<RegionEdge> edges; // sorted by (a, b)
};

struct ScalarStructureField {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> values; // row-major, in [0,1]
};

using StructuralProduct = std::variant<Partition, Hierarchy, RegionGraph, ScalarStructureField>;

inline const char* product_type_name(const StructuralProduct& s) {
    struct V {
        const char* operator()(const Partition&) const { return "partition"; }
        const char* operator()(const Hierarchy&) const { return "hierarchy"; }
        const char* operator()(const RegionGraph&) const { return "region_graph"; }
        const char* operator()(const ScalarStructureField&) const { return "scalar_structure_field"; }
    };
    return std::visit(V{}, s);
}

// ---------------------------------------------------------------------------
// Partition operations
// ---------------------------------------------------------------------------

inline void check_same_dims(const Partition& p, const Partition& q) {
    if (p.height != q.height || p.width != q.width)
        fail_usage("partition dimension mismatch: " + std::to_string(p.height) + "x" +
                   std::to_string(p.width) + " vs " + std::to_string(q.height) + "x" +
                   std::to_string(q.width));
}

// First-occurrence relabeling. Accepts sparse or permuted ids; idempotent.
inline Partition relabel_canonical(const Partition& p) {
    if (p.labels.size() != p.pixel_count())
        fail_usage("partition label count does not match dimensions");
    Partition out;
    out.height = p.height;
    out.width = p.width;
    out.labels.resize(p.labels.size());
    std::map<std::uint32_t, std::uint32_t> remap;
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        auto [it, inserted] = remap.try_emplace(p.labels[i], next);
        if (inserted) ++next;
        out.labels[i] = it->second;
    }
    out.n_regions = next;
    return out;
}

inline bool is_canonical(const Partition& p) {
    if (p.labels.size() != p.pixel_count()) return false;
    std::uint32_t next = 0;
    for (std::uint32_t lab : p.labels) {
        if (lab == next) {
            ++next;
        } else if (lab > next) {
            return false;
        }
    }
    return next == p.n_regions;
}

// True iff every region of `fine` lies inside exactly one region of `coarse`.
inline bool is_refinement(const Partition& fine, const Partition& coarse) {
    check_same_dims(fine, coarse);
    constexpr std::uint32_t unset = 0xffffffffu;
    std::vector<std::uint32_t> assigned(fine.n_regions, unset);
    for (std::size_t i = 0; i < fine.labels.size(); ++i) {
        const std::uint32_t f = fine.labels[i];
        const std::uint32_t c = coarse.labels[i];
        if (f >= assigned.size()) fail_usage("partition labels exceed declared region count");
        if (assigned[f] == unset) assigned[f] = c;
        else if (assigned[f] != c) return false;
    }
    return true;
}

inline const Partition& coarsen(const Hierarchy& h, std::size_t level) {
    if (level >= h.levels.size())
        fail_usage("hierarchy level " + std::to_string(level) + " out of range (have " +
                   std::to_string(h.levels.size()) + ")");
    return h.levels[level];
}

inline Partition singleton_partition(std::uint32_t height, std::uint32_t width) {
    Partition p;
    p.height = height;
    p.width = width;
    p.labels.resize(static_cast<std::size_t>(height) * width);
    for (std::size_t i = 0; i < p.labels.size(); ++i) p.labels[i] = static_cast<std::uint32_t>(i);
    p.n_regions = static_cast<std::uint32_t>(p.labels.size());
    return p;
}

inline Partition one_cell_partition(std::uint32_t height, std::uint32_t width) {
    Partition p;
    p.height = height;
    p.width = width;
    p.labels.assign(static_cast<std::size_t>(height) * width, 0);
    p.n_regions = 1;
    return p;
}

// Total boundary length: 4-adjacent pixel pairs with different labels.
inline std::uint64_t boundary_edge_count(const Partition& p) {
    std::uint64_t count = 0;
    for (std::uint32_t r = 0; r < p.height; ++r) {
        for (std::uint32_t c = 0; c < p.width; ++c) {
            const std::uint32_t lab = p.at(r, c);
            if (c + 1 < p.width && lab != p.at(r, c + 1)) ++count;
            if (r + 1 < p.height && lab != p.at(r + 1, c)) ++count;
        }
    }
    return count;
}

inline RegionGraph region_graph(const MeasurementField& field, const Partition& p) {
    if (field.height != p.height || field.width != p.width)
        fail_usage("field/partition dimension mismatch");
    if (p.labels.size() != p.pixel_count())
        fail_usage("partition label count does not match dimensions");

    RegionGraph g;
    g.height = p.height;
    g.width = p.width;
    g.nodes.resize(p.n_regions);
    std::vector<std::vector<double>> sums(p.n_regions, std::vector<double>(field.channels, 0.0));
    for (std::uint32_t i = 0; i < p.n_regions; ++i) {
        g.nodes[i].id = i;
        g.nodes[i].bbox[0] = p.height;
        g.nodes[i].bbox[1] = p.width;
    }
    for (std::uint32_t r = 0; r < p.height; ++r) {
        for (std::uint32_t c = 0; c < p.width; ++c) {
            const std::uint32_t lab = p.at(r, c);
            if (lab >= p.n_regions) fail_usage("partition labels exceed declared region count");
            auto& node = g.nodes[lab];
            ++node.pixel_count;
            node.bbox[0] = std::min(node.bbox[0], r);
            node.bbox[1] = std::min(node.bbox[1], c);
            node.bbox[2] = std::max(node.bbox[2], r);
            node.bbox[3] = std::max(node.bbox[3], c);
            for (std::uint32_t ch = 0; ch < field.channels; ++ch)
                sums[lab][ch] += field.at(ch, r, c);
        }
    }
    for (std::uint32_t i = 0; i < p.n_regions; ++i) {
        if (g.nodes[i].pixel_count == 0) fail_usage("partition has an empty region id");
        g.nodes[i].mean.resize(field.channels);
        for (std::uint32_t ch = 0; ch < field.channels; ++ch)
            g.nodes[i].mean[ch] = sums[i][ch] / static_cast<double>(g.nodes[i].pixel_count);
    }

    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> shared;
    auto touch = [&](std::uint32_t a, std::uint32_t b) {
        if (a == b) return;
        if (a > b) std::swap(a, b);
        ++shared[{a, b}];
    };
    for (std::uint32_t r = 0; r < p.height; ++r) {
        for (std::uint32_t c = 0; c < p.width; ++c) {
            if (c + 1 < p.width) touch(p.at(r, c), p.at(r, c + 1));
            if (r + 1 < p.height) touch(p.at(r, c), p.at(r + 1, c));
        }
    }
    g.edges.reserve(shared.size());
    for (const auto& [key, len] : shared) g.edges.push_back({key.first, key.second, len});
    return g;
}

// ---------------------------------------------------------------------------
// Description length (two-part code)
// ---------------------------------------------------------------------------

// L_model = n_regions * 32 * k + |boundary| * bits_per_boundary_edge
// L_data  = sum over pixels and channels of 0.5*log2(2*pi*e*var + eps),
// with per-region per-channel population variance and floor eps.
inline double description_length(const MeasurementField& field, const Partition& p,
                                 double bits_per_boundary_edge = 2.0, double variance_floor = 1e-6) {
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
    constexpr double two_pi_e = 2.0 * 3.14159265358979323846 * 2.718281828459045235360287;
    double l_data = 0.0;
    for (std::uint32_t lab = 0; lab < p.n_regions; ++lab) {
        const double n = static_cast<double>(count[lab]);
        if (n == 0.0) fail_usage("partition has an empty region id");
        for (std::uint32_t ch = 0; ch < k; ++ch) {
            const std::size_t i = static_cast<std::size_t>(lab) * k + ch;
            double var = sumsq[i] / n - (sum[i] / n) * (sum[i] / n);
            if (var < 0.0) var = 0.0; // cancellation guard
            l_data += n * 0.5 * std::log2(two_pi_e * var + variance_floor);
        }
    }
    const double l_model = static_cast<double>(p.n_regions) * 32.0 * k +
                           static_cast<double>(boundary_edge_count(p)) * bits_per_boundary_edge;
    return l_model + l_data;
}

// ---------------------------------------------------------------------------
// Canonical serialization and hashing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string partition_hash_bytes(const Partition& p) {
    std::string bytes = "SPRT1 " + std::to_string(p.height) + " " + std::to_string(p.width) + " " +
                        std::to_string(p.n_regions) + "\n";
    const std::size_t off = bytes.size();
    bytes.resize(off + p.labels.size() * sizeof(std::uint32_t));
    if (!p.labels.empty())
        std::memcpy(bytes.data() + off, p.labels.data(), p.labels.size() * sizeof(std::uint32_t));
    return bytes;
}

inline std::string ssf_hash_bytes(const ScalarStructureField& f) {
    std::string bytes = "SSF1 " + std::to_string(f.height) + " " + std::to_string(f.width) + "\n";
    const std::size_t off = bytes.size();
    bytes.resize(off + f.values.size() * sizeof(float));
    if (!f.values.empty())
        std::memcpy(bytes.data() + off, f.values.data(), f.values.size() * sizeof(float));
    return bytes;
}

} // namespace detail

inline std::string product_hash(const Partition& p) {
    if (!is_canonical(p)) fail_usage("product_hash requires a canonical partition");
    return sha256_hex(detail::partition_hash_bytes(p));
}

inline std::string product_hash(const ScalarStructureField& f) {
    if (f.values.size() != static_cast<std::size_t>(f.height) * f.width)
        fail_usage("scalar structure field value count does not match dimensions");
    return sha256_hex(detail::ssf_hash_bytes(f));
}

// Canonical document form: nodes sorted by id, edges normalized to a < b and
// sorted, independent of in-memory construction order.
inline json region_graph_to_json(const RegionGraph& g) {
    RegionGraph sorted = g;
    std::sort(sorted.nodes.begin(), sorted.nodes.end(),
              [](const RegionNode& a, const RegionNode& b) { return a.id < b.id; });
    for (auto& e : sorted.edges)
        if (e.a > e.b) std::swap(e.a, e.b);
    std::sort(sorted.edges.begin(), sorted.edges.end(), [](const RegionEdge& x, const RegionEdge& y) {
        return std::pair(x.a, x.b) < std::pair(y.a, y.b);
    });
    json nodes = json::array();
    for (const auto& n : sorted.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["pixel_count"] = n.pixel_count;
        jn["mean"] = n.mean;
        jn["bbox"] = {n.bbox[0], n.bbox[1], n.bbox[2], n.bbox[3]};
        nodes.push_back(jn);
    }
    json edges = json::array();
    for (const auto& e : sorted.edges) edges.push_back({e.a, e.b, e.boundary_len});
    json j;
    j["type"] = "region_graph";
    j["height"] = g.height;
    j["width"] = g.width;
    j["nodes"] = nodes;
    j["edges"] = edges;
    return j;
}

inline std::string product_hash(const RegionGraph& g) {
    return sha256_hex(canonical_dump(region_graph_to_json(g)));
}

inline json hierarchy_to_json(const Hierarchy& h) {
    json levels = json::array();
    for (const auto& level : h.levels) {
        json jl;
        jl["n_regions"] = level.n_regions;
        jl["product_hash"] = product_hash(level);
        levels.push_back(jl);
    }
    json log = json::array();
    for (const auto& ev : h.merge_log) log.push_back({ev.level, ev.region_a, ev.region_b, ev.delta_e});
    json j;
    j["type"] = "hierarchy";
    j["height"] = h.height;
    j["width"] = h.width;
    j["levels"] = levels;
    j["merge_log"] = log;
    return j;
}

inline std::string product_hash(const Hierarchy& h) {
    return sha256_hex(canonical_dump(hierarchy_to_json(h)));
}

inline std::string product_hash(const StructuralProduct& s) {
    return std::visit([](const auto& v) { return product_hash(v); }, s);
}

// ---------------------------------------------------------------------------
// File forms
// ---------------------------------------------------------------------------

inline void save_partition(const Partition& p, const std::filesystem::path& path) {
    if (!is_canonical(p)) fail_usage("save_partition requires a canonical partition");
    std::string bytes = "SPRT1 " + std::to_string(p.height) + " " + std::to_string(p.width) + " " +
                        std::to_string(p.n_regions) + " " + product_hash(p) + "\n";
    const std::size_t off = bytes.size();
    bytes.resize(off + p.labels.size() * sizeof(std::uint32_t));
    if (!p.labels.empty())
        std::memcpy(bytes.data() + off, p.labels.data(), p.labels.size() * sizeof(std::uint32_t));
    write_file_bytes(path, bytes);
}

inline Partition load_partition(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail_io("partition file not found: " + path.string());
    const std::string bytes = read_file_bytes(path);
    const std::size_t nl = bytes.find('\n');
    if (nl == std::string::npos) fail_usage("malformed partition header: " + path.string());
    std::istringstream header(bytes.substr(0, nl));
    std::string magic, stored_hash;
    std::uint64_t h = 0, w = 0, n = 0;
    header >> magic >> h >> w >> n >> stored_hash;
    if (!header || magic != "SPRT1" || !is_hex_digest(stored_hash))
        fail_usage("malformed partition header: " + path.string());
    const std::size_t expect = static_cast<std::size_t>(h) * w;
    if (bytes.size() - nl - 1 != expect * sizeof(std::uint32_t))
        fail_usage("partition payload size mismatch: " + path.string());
    Partition p;
    p.height = static_cast<std::uint32_t>(h);
    p.width = static_cast<std::uint32_t>(w);
    p.n_regions = static_cast<std::uint32_t>(n);
    p.labels.resize(expect);
    if (expect > 0) std::memcpy(p.labels.data(), bytes.data() + nl + 1, expect * sizeof(std::uint32_t));
    if (!is_canonical(p)) fail_validation("partition file is not in canonical form: " + path.string());
    if (product_hash(p) != stored_hash)
        fail_validation("partition hash mismatch in " + path.string());
    return p;
}

inline json ssf_to_json(const ScalarStructureField& f) {
    json j;
    j["type"] = "scalar_structure_field";
    j["height"] = f.height;
    j["width"] = f.width;
    j["product_hash"] = product_hash(f);
    return j;
}

// Writes a product into `dir`. The main document lands at dir/<stem>.<ext>;
// hierarchy levels and scalar payloads go to dir/payloads/<hash> so every
// reference in a JSON document resolves to a sibling attachment.
struct WrittenProduct {
    std::filesystem::path main_file;
    std::vector<std::filesystem::path> attachments;
};

inline WrittenProduct write_product(const StructuralProduct& s, const std::filesystem::path& dir,
                                    const std::string& stem = "product") {
    namespace fs = std::filesystem;
    WrittenProduct out;
    std::error_code ec;
    fs::create_directories(dir, ec);
    struct V {
        const fs::path& dir;
        const std::string& stem;
        WrittenProduct& out;
        void operator()(const Partition& p) const {
            out.main_file = dir / (stem + ".sprt");
            save_partition(p, out.main_file);
        }
        void operator()(const Hierarchy& h) const {
            for (const auto& level : h.levels) {
                const fs::path att = dir / "payloads" / product_hash(level);
                save_partition(level, att);
                out.attachments.push_back(att);
            }
            out.main_file = dir / (stem + ".json");
            write_file_bytes(out.main_file, canonical_dump(hierarchy_to_json(h)));
        }
        void operator()(const RegionGraph& g) const {
            out.main_file = dir / (stem + ".json");
            write_file_bytes(out.main_file, canonical_dump(region_graph_to_json(g)));
        }
        void operator()(const ScalarStructureField& f) const {
            const fs::path att = dir / "payloads" / product_hash(f);
            write_file_bytes(att, detail::ssf_hash_bytes(f));
            out.attachments.push_back(att);
            out.main_file = dir / (stem + ".json");
            write_file_bytes(out.main_file, canonical_dump(ssf_to_json(f)));
        }
    };
    std::visit(V{dir, stem, out}, s);
    return out;
}

} // namespace strukt
