#include <catch2/catch_amalgamated.hpp>

#include "strukt/extract.hpp"
#include "strukt/semantics.hpp"

using strukt::Crosswalk;
using strukt::make_field;
using strukt::Ontology;
using strukt::Partition;
using strukt::SemanticMapping;

namespace {

strukt::MeasurementField halves_field() {
    std::vector<float> values(64);
    for (std::uint32_t r = 0; r < 8; ++r)
        for (std::uint32_t c = 0; c < 8; ++c) values[r * 8 + c] = c < 4 ? 0.1f : 0.9f;
    return make_field(8, 8, 1, values);
}

Partition halves_partition() {
    Partition p;
    p.height = 8;
    p.width = 8;
    p.labels.resize(64);
    for (std::uint32_t r = 0; r < 8; ++r)
        for (std::uint32_t c = 0; c < 8; ++c) p.labels[p.index(r, c)] = c < 4 ? 0 : 1;
    p.n_regions = 2;
    return p;
}

Ontology tone_ontology() {
    Ontology o;
    o.ontology_id = "tones";
    o.version = "1";
    o.terms = {{"dark", "Dark"}, {"bright", "Bright"}};
    return o;
}

SemanticMapping tone_mapping() {
    SemanticMapping m;
    m.mapping_id = "tone-rules";
    m.ontology_id = "tones";
    m.ontology_version = "1";
    strukt::MappingRule dark;
    dark.conditions = {{strukt::RuleCondition::Stat::mean, 0, -1.0, 0.5}};
    dark.term = "dark";
    strukt::MappingRule bright;
    bright.term = "bright"; // unconditional fallback rule
    m.rules = {dark, bright};
    return m;
}

} // namespace

TEST_CASE("mean-based rules label the halves dark and bright") {
    const auto lp =
        strukt::apply_mapping(halves_field(), halves_partition(), tone_mapping(), tone_ontology());
    REQUIRE(lp.region_terms == std::vector<std::string>{"dark", "bright"});
    REQUIRE(lp.product_hash == strukt::product_hash(halves_partition()));
}

TEST_CASE("empty rule list maps everything to the default sentinel") {
    SemanticMapping m;
    m.mapping_id = "empty";
    m.ontology_id = "tones";
    m.ontology_version = "1";
    const auto lp = strukt::apply_mapping(halves_field(), halves_partition(), m, tone_ontology());
    REQUIRE(lp.region_terms == std::vector<std::string>{"unmapped", "unmapped"});
}

TEST_CASE("two mappings of one product reference the identical hash") {
    const auto field = halves_field();
    const auto p = halves_partition();
    const auto a = strukt::apply_mapping(field, p, tone_mapping(), tone_ontology());
    SemanticMapping pixel_rule;
    pixel_rule.mapping_id = "size-rules";
    pixel_rule.ontology_id = "tones";
    pixel_rule.ontology_version = "1";
    strukt::MappingRule big;
    big.conditions = {{strukt::RuleCondition::Stat::pixel_count, 0, 16.0, 1e18}};
    big.term = "bright";
    pixel_rule.rules = {big};
    const auto b = strukt::apply_mapping(field, p, pixel_rule, tone_ontology());
    REQUIRE(a.product_hash == b.product_hash);
    REQUIRE(a.mapping_id != b.mapping_id);
}

TEST_CASE("rules evaluate in order, first match wins") {
    SemanticMapping m = tone_mapping();
    // prepend an unconditional rule; it must shadow the rest
    strukt::MappingRule all;
    all.term = "dark";
    m.rules.insert(m.rules.begin(), all);
    const auto lp = strukt::apply_mapping(halves_field(), halves_partition(), m, tone_ontology());
    REQUIRE(lp.region_terms == std::vector<std::string>{"dark", "dark"});
}

TEST_CASE("mapping terms must exist in the ontology") {
    SemanticMapping m = tone_mapping();
    m.rules[0].term = "water";
    try {
        strukt::apply_mapping(halves_field(), halves_partition(), m, tone_ontology());
        FAIL("expected a validation error");
    } catch (const strukt::Error& e) {
        REQUIRE(std::string(e.what()).find("water") != std::string::npos);
        REQUIRE(e.kind() == strukt::ErrorKind::validation);
    }
}

TEST_CASE("crosswalks remap terms without touching the product hash") {
    const auto lp =
        strukt::apply_mapping(halves_field(), halves_partition(), tone_mapping(), tone_ontology());

    Crosswalk cw;
    cw.source_ontology_id = "tones";
    cw.source_version = "1";
    cw.target_ontology_id = "cover";
    cw.target_version = "2";
    cw.term_map = {{"dark", "water"}, {"bright", "land"}};
    const auto out = strukt::apply_crosswalk(lp, cw);
    REQUIRE(out.region_terms == std::vector<std::string>{"water", "land"});
    REQUIRE(out.product_hash == lp.product_hash);
    REQUIRE(out.applied_crosswalks.size() == 1);

    // identity crosswalk leaves the table unchanged
    Crosswalk identity;
    identity.source_ontology_id = "tones";
    identity.source_version = "1";
    identity.target_ontology_id = "tones";
    identity.target_version = "1";
    identity.term_map = {{"dark", "dark"}, {"bright", "bright"}};
    REQUIRE(strukt::apply_crosswalk(lp, identity).region_terms == lp.region_terms);
}

TEST_CASE("strict crosswalks fail on missing terms, naming them") {
    const auto lp =
        strukt::apply_mapping(halves_field(), halves_partition(), tone_mapping(), tone_ontology());
    Crosswalk cw;
    cw.source_ontology_id = "tones";
    cw.source_version = "1";
    cw.target_ontology_id = "cover";
    cw.target_version = "2";
    cw.term_map = {{"bright", "land"}}; // no entry for "dark"
    try {
        strukt::apply_crosswalk(lp, cw);
        FAIL("expected a strict-policy error");
    } catch (const strukt::Error& e) {
        REQUIRE(std::string(e.what()).find("dark") != std::string::npos);
    }
    cw.policy = Crosswalk::UnmappedPolicy::to_unmapped;
    const auto out = strukt::apply_crosswalk(lp, cw);
    REQUIRE(out.region_terms == std::vector<std::string>{"unmapped", "land"});

    // ontology mismatch is refused outright
    Crosswalk wrong;
    wrong.source_ontology_id = "other";
    wrong.source_version = "9";
    REQUIRE_THROWS_AS(strukt::apply_crosswalk(lp, wrong), strukt::Error);
}

TEST_CASE("mapping agreement counts matching regions") {
    const auto field = halves_field();
    const auto p = halves_partition();
    const auto a = strukt::apply_mapping(field, p, tone_mapping(), tone_ontology());
    REQUIRE(strukt::mapping_agreement(a, a) == 1.0);

    SemanticMapping inverted = tone_mapping();
    inverted.mapping_id = "inverted";
    inverted.rules[0].term = "bright";
    inverted.rules[1].term = "dark";
    const auto b = strukt::apply_mapping(field, p, inverted, tone_ontology());
    REQUIRE(strukt::mapping_agreement(a, b) == 0.0);

    SemanticMapping half = tone_mapping();
    half.mapping_id = "half";
    half.rules[1].term = "dark"; // bright half relabeled dark
    const auto c = strukt::apply_mapping(field, p, half, tone_ontology());
    REQUIRE(strukt::mapping_agreement(a, c) == 0.5);

    // different products are refused
    auto other = strukt::apply_mapping(field, strukt::one_cell_partition(8, 8), tone_mapping(),
                                       tone_ontology());
    REQUIRE_THROWS_AS(strukt::mapping_agreement(a, other), strukt::Error);
}

TEST_CASE("ontology documents validate and round-trip") {
    const auto o = tone_ontology();
    const auto round = strukt::ontology_from_json(
        strukt::json::parse(strukt::canonical_dump(strukt::ontology_to_json(o))));
    REQUIRE(round.ontology_id == o.ontology_id);
    REQUIRE(round.terms.size() == o.terms.size());

    Ontology dup = o;
    dup.terms.push_back({"dark", "Again"});
    REQUIRE_THROWS_AS(strukt::validate_ontology(dup), strukt::Error);
    Ontology reserved = o;
    reserved.terms.push_back({"unmapped", "Reserved"});
    REQUIRE_THROWS_AS(strukt::validate_ontology(reserved), strukt::Error);

    const auto m = tone_mapping();
    const auto mr = strukt::mapping_from_json(
        strukt::json::parse(strukt::canonical_dump(strukt::mapping_to_json(m))));
    REQUIRE(mr.rules.size() == m.rules.size());
    REQUIRE(mr.rules[0].conditions[0].max == 0.5);

    Crosswalk cw;
    cw.source_ontology_id = "tones";
    cw.source_version = "1";
    cw.target_ontology_id = "cover";
    cw.target_version = "2";
    cw.term_map = {{"dark", "water"}};
    cw.policy = Crosswalk::UnmappedPolicy::to_unmapped;
    const auto cr = strukt::crosswalk_from_json(
        strukt::json::parse(strukt::canonical_dump(strukt::crosswalk_to_json(cw))));
    REQUIRE(cr.term_map.at("dark") == "water");
    REQUIRE(cr.policy == Crosswalk::UnmappedPolicy::to_unmapped);
}
