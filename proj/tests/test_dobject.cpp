#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "strukt/bench.hpp"
#include "strukt/dobject.hpp"
#include "strukt/extract.hpp"

namespace fs = std::filesystem;
using strukt::DoInputs;
using strukt::json;

namespace {

struct Fixture {
    fs::path dir;
    strukt::SyntheticScene scene;
    strukt::CriterionSpec cspec;
    strukt::ExtractionResult result;
    DoInputs inputs;

    explicit Fixture(const std::string& name, std::uint64_t seed = 3)
        : dir(fs::temp_directory_path() / "strukt_do_tests" / name),
          scene(strukt::make_synthetic({32, 2, 0.5, 0.05, seed})),
          cspec(strukt::make_threshold_criterion(0, 256)),
          result(strukt::extract(scene.field, cspec)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        inputs.command_line = "test export";
        inputs.scale_factors = {1, 2};
    }

    std::string do_export() {
        return strukt::export_do(scene.field, cspec, result, inputs, std::nullopt, dir);
    }
    fs::path do_path(const std::string& id) const { return dir / ("do_" + id + ".json"); }
};

} // namespace

TEST_CASE("re-export of identical inputs yields an identical do_id") {
    Fixture fx("reexport");
    const std::string a = fx.do_export();
    const std::string b = fx.do_export();
    REQUIRE(a == b);
    REQUIRE(fs::exists(fx.do_path(a)));
}

TEST_CASE("do_id covers metadata, not just the payload") {
    Fixture fx("metadata");
    const std::string a = fx.do_export();
    auto modified = fx;
    modified.inputs.scale_factors = {1, 4};
    const std::string b =
        strukt::export_do(fx.scene.field, fx.cspec, fx.result, modified.inputs, std::nullopt, fx.dir);
    REQUIRE(a != b);
}

TEST_CASE("fresh exports pass conformance verification") {
    Fixture fx("verify");
    const std::string id = fx.do_export();
    const auto report = strukt::verify_do(fx.do_path(id));
    INFO(report.to_text());
    REQUIRE(report.ok());
}

TEST_CASE("hierarchy exports attach every level and verify") {
    Fixture fx("hierarchy");
    fx.cspec = strukt::make_merge_criterion(0.5);
    fx.result = strukt::extract(fx.scene.field, fx.cspec);
    const std::string id = fx.do_export();
    const auto report = strukt::verify_do(fx.do_path(id));
    INFO(report.to_text());
    REQUIRE(report.ok());
}

TEST_CASE("deleting any required metadata item fails, naming the item") {
    const char* items[] = {"criterion", "implementation", "stability_declaration",
                           "quality_metrics", "envelope"};
    const char* check_names[] = {"criterion_present (item i)", "implementation_present (item ii)",
                                 "stability_declaration_present (item iii)",
                                 "quality_metrics_present (item iv)", "envelope_present (item v)"};
    for (int i = 0; i < 5; ++i) {
        Fixture fx(std::string("delete_") + items[i]);
        const std::string id = fx.do_export();
        json doc = strukt::parse_json_file(fx.do_path(id));
        doc.erase(items[i]);
        strukt::write_file_bytes(fx.do_path(id), strukt::canonical_dump(doc));
        const auto report = strukt::verify_do(fx.do_path(id));
        REQUIRE_FALSE(report.ok());
        bool named = false;
        for (const auto& check : report.checks)
            if (check.name == check_names[i] && !check.passed) named = true;
        REQUIRE(named);
    }
}

TEST_CASE("payload tampering is detected while other checks still run") {
    Fixture fx("tamper");
    const std::string id = fx.do_export();
    const json doc = strukt::parse_json_file(fx.do_path(id));
    const fs::path payload = fx.dir / doc["payload"]["file"].get<std::string>();
    std::string bytes = strukt::read_file_bytes(payload);
    bytes[bytes.size() - 1] ^= 0x01;
    strukt::write_file_bytes(payload, bytes);

    const auto report = strukt::verify_do(fx.do_path(id));
    REQUIRE_FALSE(report.ok());
    bool payload_failed = false, id_ok = false;
    for (const auto& check : report.checks) {
        if (check.name == "payload_hash") payload_failed = !check.passed;
        if (check.name == "do_id_recomputation") id_ok = check.passed;
    }
    REQUIRE(payload_failed);
    REQUIRE(id_ok); // independent checks report independently
}

TEST_CASE("hand-edited envelope summaries fail recomputation") {
    Fixture fx("envelope");
    strukt::PerturbationSpec identity;
    const auto env = strukt::stability_envelope(fx.scene.field, fx.cspec, identity, 2);
    const std::string id =
        strukt::export_do(fx.scene.field, fx.cspec, fx.result, fx.inputs, env, fx.dir);
    json doc = strukt::parse_json_file(fx.do_path(id));
    doc["envelope"]["summary"]["ari"]["mean"] = 0.123;
    strukt::write_file_bytes(fx.do_path(id), strukt::canonical_dump(doc));
    const auto report = strukt::verify_do(fx.do_path(id));
    bool env_failed = false;
    for (const auto& check : report.checks)
        if (check.name == "envelope_summary_recomputation" && !check.passed) env_failed = true;
    REQUIRE(env_failed);
}

TEST_CASE("incomplete provenance is refused at export, naming the item") {
    Fixture fx("incomplete");
    fx.inputs.scale_factors.clear(); // no stability declaration at all
    try {
        fx.do_export();
        FAIL("expected an export error");
    } catch (const strukt::Error& e) {
        REQUIRE(std::string(e.what()).find("(iii)") != std::string::npos);
    }

    Fixture fx2("noimpl");
    fx2.result.implementation_id.clear();
    try {
        fx2.do_export();
        FAIL("expected an export error");
    } catch (const strukt::Error& e) {
        REQUIRE(std::string(e.what()).find("(ii)") != std::string::npos);
    }
}

TEST_CASE("do_id is independent of key insertion order") {
    Fixture fx("keyorder");
    const std::string id = fx.do_export();
    json doc = strukt::parse_json_file(fx.do_path(id));
    // rebuild the document inserting keys in reverse order
    std::vector<std::string> keys;
    for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
    json shuffled;
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) shuffled[*it] = doc[*it];
    REQUIRE(strukt::detail::do_id_of_document(shuffled) == id);
}

TEST_CASE("verify reports unreadable files instead of throwing") {
    const auto report = strukt::verify_do(fs::temp_directory_path() / "no_such_do.json");
    REQUIRE_FALSE(report.ok());
    REQUIRE(report.checks.size() == 1);
    REQUIRE(report.checks[0].name == "readable");
}

TEST_CASE("manifest accumulates do_id to file lists") {
    Fixture fx("manifest");
    const std::string a = fx.do_export();
    auto other = fx.inputs;
    other.version = 2;
    other.parents = {a};
    const std::string b =
        strukt::export_do(fx.scene.field, fx.cspec, fx.result, other, std::nullopt, fx.dir);
    const json manifest = strukt::parse_json_file(fx.dir / "manifest.json");
    REQUIRE(manifest.contains(a));
    REQUIRE(manifest.contains(b));
    REQUIRE(manifest[a][0].get<std::string>() == "do_" + a + ".json");
}

TEST_CASE("lineage builds chains, flags externals, and rejects cycles") {
    json v1 = {{"do_id", "aaa"}, {"version", 1}, {"provenance", {{"parents", json::array()}}}};
    json v2 = {{"do_id", "bbb"}, {"version", 2}, {"provenance", {{"parents", {"aaa"}}}}};
    json v3 = {{"do_id", "ccc"}, {"version", 3}, {"provenance", {{"parents", {"bbb"}}}}};
    const auto g = strukt::do_lineage({v1, v2, v3});
    REQUIRE(g.nodes.size() == 3);
    REQUIRE(g.edges.size() == 2);
    REQUIRE(g.external_parents.empty());

    // single node, no parents
    const auto single = strukt::do_lineage({v1});
    REQUIRE(single.nodes.size() == 1);
    REQUIRE(single.edges.empty());

    // external parent is flagged
    const auto ext = strukt::do_lineage({v3});
    REQUIRE(ext.external_parents == std::vector<std::string>{"bbb"});

    // two DOs citing each other
    json x = {{"do_id", "xxx"}, {"version", 1}, {"provenance", {{"parents", {"yyy"}}}}};
    json y = {{"do_id", "yyy"}, {"version", 2}, {"provenance", {{"parents", {"xxx"}}}}};
    REQUIRE_THROWS_AS(strukt::do_lineage({x, y}), strukt::Error);

    // version regression
    json bad = {{"do_id", "ddd"}, {"version", 1}, {"provenance", {{"parents", {"ccc"}}}}};
    REQUIRE_THROWS_AS(strukt::do_lineage({v3, bad}), strukt::Error);
}
