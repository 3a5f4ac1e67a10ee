#pragma once

#include "chainlens/analytics.hpp"

#include <span>
#include <string>

namespace chainlens {

// CSV schemas, headers exactly as exported by the CLI.
std::string flow_csv(std::span<const FlowCell> cells);
std::string dwell_csv(std::span<const DwellPoint> points);
std::string extranonce_csv(std::span<const ExtranonceSample> samples);
std::string degrees_csv(std::span<const DegreeBin> bins);
std::string episodes_csv(std::span<const SpamEpisode> episodes);

// JSON variants with the same field names the manifest uses.
std::string flow_json(std::span<const FlowCell> cells);
std::string dwell_json(std::span<const DwellPoint> points);
std::string extranonce_json(std::span<const ExtranonceSample> samples);
std::string degrees_json(std::span<const DegreeBin> bins);
std::string episodes_json(std::span<const SpamEpisode> episodes);
std::string stats_json(const GraphStats& stats);

// Single-file pan/zoom view of the flow adjacency matrix.
std::string matrix_html(std::span<const FlowCell> cells, uint64_t n_blocks);

} // namespace chainlens
