#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chainlens/analytics.hpp"
#include "chainlens/synth.hpp"

#include "helpers.hpp"

#include <cmath>

using namespace chainlens;
using testutil::graph_of;
using testutil::run_scenario;

static const char* kMixed = R"(
    seed = 1001
    blocks = 700
    fee_per_tx = 10000
    [miner]
    weight = 2
    increment = 5
    reset_period = 200
    [pattern]
    kind = churn
    start = 110
    end = 699
    degree = 2
    txs_per_block = 3
    same_block_frac = 0.2
    [pattern]
    kind = spam_out
    start = 300
    end = 420
    degree = 25
    txs_per_block = 6
    [pattern]
    kind = spam_in
    start = 460
    end = 520
    degree = 30
    txs_per_block = 5
    [pattern]
    kind = distribute
    start = 240
    end = 280
    degree = 8
    txs_per_block = 1
)";

TEST_CASE("same spec produces identical bytes and manifest") {
    auto a = run_scenario(kMixed);
    auto b = run_scenario(kMixed);
    REQUIRE(a.files.size() == b.files.size());
    for (size_t i = 0; i < a.files.size(); ++i) CHECK(a.files[i] == b.files[i]);
    CHECK(a.manifest.to_json() == b.manifest.to_json());
}

TEST_CASE("manifest survives its json round trip") {
    auto chain = run_scenario(kMixed);
    std::string text = chain.manifest.to_json();
    Manifest back = Manifest::from_json(text);
    CHECK(back.to_json() == text);
    CHECK(back.stats == chain.manifest.stats);
    CHECK(back.flow.size() == chain.manifest.flow.size());
    for (size_t i = 0; i < back.flow.size(); ++i)
        CHECK(back.flow[i].fraction == chain.manifest.flow[i].fraction);
}

TEST_CASE("every manifest quantity is recomputable from the bytes") {
    auto chain = run_scenario(kMixed);
    ChainGraph g = graph_of(chain);
    const Manifest& m = chain.manifest;

    CHECK(g.stats() == m.stats);

    REQUIRE(g.blocks().size() == m.block_counts.size());
    for (uint32_t h = 0; h < g.blocks().size(); ++h) {
        const BlockRecord& b = g.block_at(h);
        const BlockCounts& c = m.block_counts[h];
        CHECK(b.txs.size() == c.tx_count);
        uint32_t ins = 0, outs = 0;
        for (const TxRecord& tx : b.txs) {
            ins += uint32_t(tx.inputs.size());
            outs += uint32_t(tx.outputs.size());
        }
        CHECK(ins == c.input_count);
        CHECK(outs == c.output_count);
    }

    SUBCASE("flow cells match exactly") {
        auto cells = flow_matrix(g);
        REQUIRE(cells.size() == m.flow.size());
        for (size_t i = 0; i < cells.size(); ++i) {
            CHECK(cells[i].src_height == m.flow[i].src_height);
            CHECK(cells[i].dst_height == m.flow[i].dst_height);
            CHECK(std::abs(cells[i].fraction - m.flow[i].fraction) <=
                  1e-9 * m.flow[i].fraction);
        }
    }
    SUBCASE("dwell points match") {
        auto points = dwell_series(g);
        REQUIRE(points.size() == m.dwell.size());
        for (size_t i = 0; i < points.size(); ++i) {
            CHECK(points[i].height == m.dwell[i].height);
            CHECK(points[i].included_satoshis == m.dwell[i].included_satoshis);
            CHECK(std::abs(points[i].dwell - m.dwell[i].dwell) <=
                  1e-9 * std::max(1.0, m.dwell[i].dwell));
        }
    }
    SUBCASE("degree bins match") {
        auto bins = degree_spectrogram(g);
        REQUIRE(bins.size() == m.degrees.size());
        for (size_t i = 0; i < bins.size(); ++i) CHECK(bins[i] == m.degrees[i]);
    }
    SUBCASE("extranonce samples match") {
        auto series = extranonce_series(g);
        REQUIRE(series.size() == m.extranonce.size());
        for (size_t i = 0; i < series.size(); ++i) {
            CHECK(series[i].height == m.extranonce[i].height);
            CHECK(series[i].extranonce == m.extranonce[i].extranonce);
            CHECK(series[i].spend_height == m.extranonce[i].spend_height);
        }
    }
    SUBCASE("episodes match") {
        auto episodes = spam_episodes(degree_spectrogram(g));
        CHECK(episodes == m.episodes);
    }
    SUBCASE("fees match") {
        VerifyReport rep = g.verify();
        CHECK(rep.ok());
        CHECK(rep.block_fees == m.block_fees);
    }
    SUBCASE("planted runs are recovered") {
        auto runs = miner_runs(extranonce_series(g));
        REQUIRE(runs.size() == m.runs.size());
        for (size_t i = 0; i < runs.size(); ++i) {
            CHECK(runs[i].start_height == m.runs[i].start_height);
            CHECK(runs[i].end_height == m.runs[i].end_height);
            CHECK(std::abs(runs[i].slope - m.runs[i].slope) <= 0.1);
        }
    }
}

TEST_CASE("emitted files respect the size limit") {
    auto chain = run_scenario(R"(
        seed = 2002
        blocks = 900
        file_size_mb = 1
        [pattern]
        kind = churn
        start = 110
        end = 899
        degree = 2
        txs_per_block = 8
    )");
    CHECK(chain.files.size() > 1);
    for (const auto& f : chain.files) CHECK(f.size() <= (1u << 20));
    // and the split chain still parses into one contiguous graph
    ChainGraph g = graph_of(chain);
    CHECK(g.blocks().size() == 900);
    CHECK(g.verify().ok());
}

TEST_CASE("coinbase outputs stay locked for 100 blocks") {
    auto chain = run_scenario(R"(
        seed = 2003
        blocks = 420
        [pattern]
        kind = churn
        start = 110
        end = 419
        degree = 2
        txs_per_block = 4
        [pattern]
        kind = consolidate
        start = 150
        end = 400
        degree = 10
        txs_per_block = 1
    )");
    ChainGraph g = graph_of(chain);
    for (uint32_t h = 0; h < g.blocks().size(); ++h) {
        auto spent = g.first_spend_height(h);
        if (spent) CHECK(*spent >= h + 100);
    }
}

TEST_CASE("infeasible scenarios are refused") {
    SUBCASE("spending before any coinbase matures") {
        CHECK_THROWS_AS(run_scenario(R"(
            seed = 1
            blocks = 60
            [pattern]
            kind = churn
            start = 10
            end = 50
            degree = 2
            txs_per_block = 1
        )"),
                        Error);
        try {
            run_scenario(R"(
                seed = 1
                blocks = 60
                [pattern]
                kind = churn
                start = 10
                end = 50
                degree = 2
                txs_per_block = 1
            )");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::infeasible_scenario);
        }
    }
    SUBCASE("spam_in with no dust to collect") {
        CHECK_THROWS_AS(run_scenario(R"(
            seed = 1
            blocks = 300
            [pattern]
            kind = spam_in
            start = 200
            end = 250
            degree = 20
            txs_per_block = 2
        )"),
                        Error);
    }
    SUBCASE("pattern range out of bounds") {
        CHECK_THROWS_AS(run_scenario(R"(
            seed = 1
            blocks = 100
            [pattern]
            kind = churn
            start = 50
            end = 100
            degree = 2
            txs_per_block = 1
        )"),
                        Error);
    }
    SUBCASE("malformed scenario text") {
        CHECK_THROWS_AS(ScenarioSpec::parse("blocks = ten\n"), Error);
        CHECK_THROWS_AS(ScenarioSpec::parse("blocks = 10\nnope\n"), Error);
        CHECK_THROWS_AS(ScenarioSpec::parse("blocks = 10\n[what]\n"), Error);
        CHECK_THROWS_AS(
            ScenarioSpec::parse("blocks = 10\n[pattern]\nkind = sideways\n"),
            Error);
    }
}

TEST_CASE("halving schedule applies to the subsidy") {
    auto chain = run_scenario(R"(
        seed = 5
        blocks = 30
        halving_interval = 10
    )");
    ChainGraph g = graph_of(chain);
    CHECK(g.block_at(0).txs[0].outputs[0].value == 50 * kCoin);
    CHECK(g.block_at(10).txs[0].outputs[0].value == 25 * kCoin);
    CHECK(g.block_at(20).txs[0].outputs[0].value == 12'50000000ULL);
}

TEST_CASE("timestamps advance ten minutes with bounded jitter") {
    auto chain = run_scenario("seed = 6\nblocks = 300\n");
    ChainGraph g = graph_of(chain);
    for (uint32_t h = 1; h < g.blocks().size(); ++h) {
        int64_t step = int64_t(g.block_at(h).header.timestamp) -
                       int64_t(g.block_at(h - 1).header.timestamp);
        CHECK(step >= 480);
        CHECK(step <= 720);
    }
}
