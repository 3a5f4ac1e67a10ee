#pragma once

#include "chainlens/analytics.hpp"
#include "chainlens/chaingraph.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chainlens {

struct MinerSpec {
    double weight = 1.0;
    uint32_t increment = 1;
    uint32_t reset_period = 0; // 0 = never reset
    bool randomize = false;
    bool text_schema = false; // free-form comment instead of the push schema
    int64_t start = 0;        // active height range, inclusive
    int64_t end = -1;         // -1 = chain end
};

enum class PatternKind { churn, consolidate, distribute, spam_out, spam_in, plant };

struct PlantSource {
    uint32_t height = 0;
    uint64_t amount = 0;
};

struct PatternSpec {
    PatternKind kind = PatternKind::churn;
    uint32_t start = 0;
    uint32_t end = 0;
    uint32_t degree = 2;
    uint32_t txs_per_block = 1;
    // churn: target input age = age_base + age_slope * (height - start);
    // same_block_frac of its txs chain onto an output of the same block
    double age_base = 1.0;
    double age_slope = 0.0;
    double same_block_frac = 0.0;
    // consolidate: sweep these coinbase outputs instead of pool picks
    int64_t sweep_from = -1;
    int64_t sweep_to = -1;
    // plant: exact (source height, amount) inputs joined at `start`
    std::vector<PlantSource> sources;
};

struct ScenarioSpec {
    uint64_t seed = 1;
    uint32_t n_blocks = 0;
    uint64_t file_size_limit = 128ull << 20;
    uint64_t fee_per_tx = 10'000;
    uint64_t initial_reward = 50 * kCoin;
    uint32_t halving_interval = 210'000;
    std::vector<MinerSpec> miners;
    std::vector<PatternSpec> patterns;

    static ScenarioSpec parse(const std::string& text);
    static ScenarioSpec load(const std::string& path);
    void validate() const; // throws Error{infeasible_scenario}
};

struct BlockCounts {
    uint32_t height = 0;
    uint32_t tx_count = 0;
    uint32_t input_count = 0;
    uint32_t output_count = 0;

    bool operator==(const BlockCounts&) const = default;
};

// Generation-time ground truth, recomputable from the emitted bytes by
// the parse -> graph -> analytics pipeline.
struct Manifest {
    uint64_t seed = 0;
    uint32_t n_blocks = 0;
    GraphStats stats;
    std::vector<BlockCounts> block_counts;
    std::vector<uint64_t> block_fees; // per height
    std::vector<FlowCell> flow;
    std::vector<DwellPoint> dwell;
    std::vector<ExtranonceSample> extranonce;
    std::vector<DegreeBin> degrees;
    std::vector<SpamEpisode> episodes;
    std::vector<MinerRun> runs; // planted lines (exclusive-era miners)
    std::optional<double> planted_trend_slope;

    std::string to_json() const;
    static Manifest from_json(const std::string& text);
};

struct GeneratedChain {
    std::vector<std::vector<uint8_t>> files;
    Manifest manifest;
};

// Deterministic: identical spec yields identical bytes and manifest.
GeneratedChain generate_chain(const ScenarioSpec& spec);

// splitmix64; stable across platforms, unlike <random> distributions.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    uint64_t below(uint64_t n) {
        return uint64_t((unsigned __int128)next() * n >> 64);
    }
    double unit() { return double(next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

} // namespace chainlens
