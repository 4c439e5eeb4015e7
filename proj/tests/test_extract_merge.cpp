#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "strukt/extract.hpp"
#include "strukt/rng.hpp"
#include "strukt/validate.hpp"

using strukt::Hierarchy;
using strukt::make_field;
using strukt::Partition;
using strukt::Pcg32;

namespace {

strukt::MeasurementField halves_field(std::uint32_t side, float lo, float hi) {
    std::vector<float> values(static_cast<std::size_t>(side) * side);
    for (std::uint32_t r = 0; r < side; ++r)
        for (std::uint32_t c = 0; c < side; ++c)
            values[r * side + c] = c < side / 2 ? lo : hi;
    return make_field(side, side, 1, values);
}

} // namespace

TEST_CASE("constant image merges to one region for any positive lambda") {
    const auto f = make_field(8, 8, 1, std::vector<float>(64, 0.3f));
    for (double lambda : {0.01, 1.0, 10.0}) {
        const auto result = strukt::extract(f, strukt::make_merge_criterion(lambda));
        const auto& h = std::get<Hierarchy>(result.product);
        REQUIRE(h.levels.back().n_regions == 1);
        for (const auto& ev : h.merge_log) REQUIRE(ev.delta_e < 0.0);
    }
}

TEST_CASE("8x8 half/half: lambda decides whether the halves merge") {
    const auto f = halves_field(8, 0.0f, 1.0f);

    // merged SSE = 64*(0.5)^2 = 16, internal boundary 8: delta = 16 - 8*lambda
    const auto stay = strukt::extract(f, strukt::make_merge_criterion(1.0));
    const auto& h_stay = std::get<Hierarchy>(stay.product);
    REQUIRE(h_stay.levels.back().n_regions == 2);
    REQUIRE(stay.objective.value() == Catch::Approx(8.0).margin(1e-9)); // E = 0 + 1*8

    const auto merge = strukt::extract(f, strukt::make_merge_criterion(3.0));
    const auto& h_merge = std::get<Hierarchy>(merge.product);
    REQUIRE(h_merge.levels.back().n_regions == 1);
    REQUIRE(merge.objective.value() == Catch::Approx(16.0).margin(1e-9)); // E = SSE only

    // the 2-region level is exactly the left/right split
    const auto& final_stay = h_stay.levels.back();
    for (std::uint32_t r = 0; r < 8; ++r)
        for (std::uint32_t c = 0; c < 8; ++c)
            REQUIRE(final_stay.at(r, c) == (c < 4 ? 0u : 1u));
}

TEST_CASE("hierarchy levels form a refinement chain with decreasing region counts") {
    Pcg32 rng(31);
    std::vector<float> values(16 * 16);
    for (auto& v : values) v = static_cast<float>(rng.next_double());
    const auto f = make_field(16, 16, 1, values);
    const auto result = strukt::extract(f, strukt::make_merge_criterion(0.5));
    const auto& h = std::get<Hierarchy>(result.product);

    REQUIRE(h.levels.size() >= 2);
    REQUIRE(h.levels.front().n_regions == 256); // singleton start
    for (std::size_t j = 0; j + 1 < h.levels.size(); ++j) {
        REQUIRE(h.levels[j].n_regions > h.levels[j + 1].n_regions);
        REQUIRE(strukt::is_refinement(strukt::coarsen(h, j), strukt::coarsen(h, j + 1)));
    }
    // snapshots at dyadic counts
    for (std::size_t j = 1; j + 1 < h.levels.size(); ++j) {
        const auto n = h.levels[j].n_regions;
        REQUIRE((n & (n - 1)) == 0);
    }
}

TEST_CASE("every accepted merge decreases the energy by the recorded delta") {
    // replay the merge log against from-scratch energies on a small instance
    Pcg32 rng(77);
    std::vector<float> values(8 * 8);
    for (auto& v : values) v = static_cast<float>(rng.next_double() < 0.5 ? 0.1 : 0.8);
    const auto f = make_field(8, 8, 1, values);
    const double lambda = 0.5;
    const auto result = strukt::extract(f, strukt::make_merge_criterion(lambda));
    const auto& h = std::get<Hierarchy>(result.product);

    // reconstruct the merge sequence over pixel ids
    std::vector<std::uint32_t> parent(64);
    for (std::uint32_t i = 0; i < 64; ++i) parent[i] = i;
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) x = parent[x];
        return x;
    };
    auto snapshot = [&]() {
        Partition p;
        p.height = 8;
        p.width = 8;
        p.labels.resize(64);
        for (std::uint32_t i = 0; i < 64; ++i) p.labels[i] = find(i);
        return strukt::relabel_canonical(p);
    };

    double prev_energy = oracle::merge_energy_direct(f, snapshot(), lambda);
    for (const auto& ev : h.merge_log) {
        REQUIRE(ev.delta_e < 0.0); // local_min accepts only improving merges
        parent[ev.region_b] = ev.region_a;
        const double next_energy = oracle::merge_energy_direct(f, snapshot(), lambda);
        const double recomputed_delta = next_energy - prev_energy;
        REQUIRE(std::abs(recomputed_delta - ev.delta_e) <=
                1e-6 * std::max({1.0, std::abs(recomputed_delta), std::abs(ev.delta_e)}));
        REQUIRE(next_energy < prev_energy);
        prev_energy = next_energy;
    }
    REQUIRE(result.objective.value() ==
            Catch::Approx(oracle::merge_energy_direct(f, h.levels.back(), lambda)).margin(1e-6));
}

TEST_CASE("n_levels stop mode records the requested number of levels") {
    const auto f = halves_field(8, 0.2f, 0.9f);
    const auto result = strukt::extract(f, strukt::make_merge_criterion(0.5, "n_levels", 3));
    const auto& h = std::get<Hierarchy>(result.product);
    REQUIRE(h.levels.size() == 3);

    strukt::CriterionSpec bad = strukt::make_merge_criterion(0.5, "until_done", 3);
    REQUIRE_THROWS_AS(strukt::extract(f, bad), strukt::Error);
}

TEST_CASE("multichannel fields merge on joint distance") {
    // channel 0 constant, channel 1 split: boundary must follow channel 1
    std::vector<float> values(2 * 36, 0.5f);
    for (std::uint32_t r = 0; r < 6; ++r)
        for (std::uint32_t c = 0; c < 6; ++c) values[36 + r * 6 + c] = c < 3 ? 0.0f : 1.0f;
    const auto f = make_field(6, 6, 2, values);
    const auto result = strukt::extract(f, strukt::make_merge_criterion(1.0));
    const auto& h = std::get<Hierarchy>(result.product);
    REQUIRE(h.levels.back().n_regions == 2);
}
