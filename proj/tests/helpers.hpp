#pragma once

#include "chainlens/chaingraph.hpp"
#include "chainlens/synth.hpp"

#include <string>

namespace testutil {

inline chainlens::Hash256 h256_internal(const std::string& hex) {
    auto raw = chainlens::hex_decode(hex);
    chainlens::Hash256 h;
    std::copy(raw->begin(), raw->end(), h.bytes.begin());
    return h;
}

inline std::vector<chainlens::BlockRecord> records_of(
    const chainlens::GeneratedChain& chain) {
    std::vector<chainlens::BlockRecord> records;
    for (size_t i = 0; i < chain.files.size(); ++i)
        for (auto& r : chainlens::scan_file(chain.files[i], uint32_t(i)))
            records.push_back(std::move(r));
    return records;
}

// full byte path: emitted files -> scan -> graph
inline chainlens::ChainGraph graph_of(const chainlens::GeneratedChain& chain) {
    return chainlens::ChainGraph::build(records_of(chain));
}

inline chainlens::GeneratedChain run_scenario(const std::string& text) {
    return chainlens::generate_chain(chainlens::ScenarioSpec::parse(text));
}

} // namespace testutil
