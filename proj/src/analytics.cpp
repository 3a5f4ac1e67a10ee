#include "chainlens/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace chainlens {

const char* direction_name(Direction d) {
    return d == Direction::inbound ? "in" : "out";
}

std::vector<FlowCell> flow_matrix(const ChainGraph& graph) {
    std::vector<FlowCell> cells;
    for (uint32_t h = 0; h < graph.blocks().size(); ++h) {
        std::map<uint32_t, uint64_t> by_source;
        uint64_t total = 0;
        for (const InputOrigin& in : graph.inputs_with_source_height(h)) {
            if (!in.resolved || in.coinbase || in.same_block) continue;
            if (in.amount == 0) continue;
            by_source[uint32_t(in.source_height)] += in.amount;
            total += in.amount;
        }
        if (total == 0) continue;
        for (auto [src, amount] : by_source)
            cells.push_back({src, h, double(amount) / double(total)});
    }
    return cells;
}

std::optional<DwellPoint> dwell_time(const ChainGraph& graph, uint32_t height) {
    unsigned __int128 numerator = 0;
    uint64_t denominator = 0;
    for (const InputOrigin& in : graph.inputs_with_source_height(height)) {
        if (!in.resolved || in.coinbase) continue;
        uint64_t distance = height - uint64_t(in.source_height);
        numerator += (unsigned __int128)distance * in.amount;
        denominator += in.amount;
    }
    if (denominator == 0) return std::nullopt;
    return DwellPoint{height, double(numerator) / double(denominator),
                      denominator};
}

std::vector<DwellPoint> dwell_series(const ChainGraph& graph) {
    std::vector<DwellPoint> out;
    for (uint32_t h = 0; h < graph.blocks().size(); ++h)
        if (auto p = dwell_time(graph, h)) out.push_back(*p);
    return out;
}

TrendFit dwell_trend(std::span<const DwellPoint> points) {
    if (points.size() < 2)
        throw Error(Errc::insufficient_data,
                    "trend fit needs at least two points");
    double n = double(points.size());
    double mean_x = 0, mean_y = 0;
    for (const DwellPoint& p : points) {
        mean_x += p.height;
        mean_y += p.dwell;
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0, sxy = 0;
    for (const DwellPoint& p : points) {
        double dx = p.height - mean_x;
        sxx += dx * dx;
        sxy += dx * (p.dwell - mean_y);
    }
    TrendFit fit;
    fit.n_points = points.size();
    fit.slope = sxx == 0 ? 0.0 : sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    return fit;
}

std::optional<uint32_t> extranonce_from_coinbase(
    std::span<const uint8_t> s) {
    // first push: exactly 4 bytes
    if (s.size() < 5 || s[0] != 0x04) return std::nullopt;
    // second push: 1..4 bytes, little-endian
    if (s.size() < 6) return std::nullopt;
    uint8_t len = s[5];
    if (len < 1 || len > 4) return std::nullopt;
    if (s.size() < size_t(6) + len) return std::nullopt;
    uint32_t value = 0;
    for (int i = 0; i < len; ++i) value |= uint32_t(s[6 + i]) << (8 * i);
    return value;
}

std::vector<ExtranonceSample> extranonce_series(const ChainGraph& graph) {
    std::vector<ExtranonceSample> out;
    out.reserve(graph.blocks().size());
    for (uint32_t h = 0; h < graph.blocks().size(); ++h) {
        const TxRecord& coinbase = graph.block_at(h).txs.front();
        ExtranonceSample s;
        s.height = h;
        s.extranonce = extranonce_from_coinbase(coinbase.inputs[0].script_sig);
        s.spend_height = graph.first_spend_height(h);
        out.push_back(s);
    }
    return out;
}

namespace {

struct Member {
    uint32_t height;
    uint32_t value;
};

void close_run(std::vector<Member>& members, const MinerRunParams& params,
               std::vector<MinerRun>& out) {
    if (members.size() >= 3) {
        double n = double(members.size());
        double mean_x = 0, mean_y = 0;
        for (const Member& m : members) {
            mean_x += m.height;
            mean_y += m.value;
        }
        mean_x /= n;
        mean_y /= n;
        double sxx = 0, sxy = 0;
        for (const Member& m : members) {
            double dx = m.height - mean_x;
            sxx += dx * dx;
            sxy += dx * (m.value - mean_y);
        }
        double slope = sxx == 0 ? 0.0 : sxy / sxx;
        double intercept = mean_y - slope * mean_x;
        double ss = 0;
        for (const Member& m : members) {
            double r = m.value - (intercept + slope * m.height);
            ss += r * r;
        }
        double rms = std::sqrt(ss / n);
        if (rms <= params.max_residual)
            out.push_back({members.front().height, members.back().height,
                           slope, rms, uint32_t(members.size())});
    }
    members.clear();
}

} // namespace

std::vector<MinerRun> miner_runs(std::span<const ExtranonceSample> samples,
                                 const MinerRunParams& params) {
    std::vector<MinerRun> out;
    std::vector<Member> members;
    for (const ExtranonceSample& s : samples) {
        if (!s.extranonce) continue;
        uint32_t v = *s.extranonce;
        if (members.empty()) {
            members.push_back({s.height, v});
            continue;
        }
        uint32_t prev = members.back().value;
        if (v >= prev) {
            members.push_back({s.height, v});
        } else if (double(v) < params.reset_threshold * double(prev)) {
            close_run(members, params, out);
            members.push_back({s.height, v});
        }
        // small dip: an interloper between two of this miner's blocks
    }
    close_run(members, params, out);
    return out;
}

std::vector<DegreeBin> degree_spectrogram(const ChainGraph& graph) {
    std::vector<DegreeBin> bins;
    for (uint32_t h = 0; h < graph.blocks().size(); ++h) {
        std::map<int32_t, uint32_t> counts;
        for (const TxRecord& tx : graph.block_at(h).txs) {
            counts[int32_t(tx.inputs.size())] += 1;
            counts[-int32_t(tx.outputs.size())] += 1;
        }
        for (auto [deg, count] : counts) bins.push_back({h, deg, count});
    }
    return bins;
}

std::vector<SpamEpisode> spam_episodes(std::span<const DegreeBin> bins,
                                       const SpamParams& params) {
    // heights per anomalous signed degree
    std::map<int32_t, std::vector<std::pair<uint32_t, uint32_t>>> by_degree;
    for (const DegreeBin& b : bins) {
        if (uint32_t(std::abs(b.signed_degree)) < params.min_degree) continue;
        by_degree[b.signed_degree].emplace_back(b.height, b.count);
    }

    std::vector<SpamEpisode> episodes;
    for (auto& [deg, rows] : by_degree) {
        std::sort(rows.begin(), rows.end());
        std::optional<uint32_t> start, last;
        auto flush = [&]() {
            if (!start) return;
            SpamEpisode e;
            e.direction = deg > 0 ? Direction::inbound : Direction::outbound;
            e.signature_degree = uint32_t(std::abs(deg));
            e.start_height = *start;
            e.end_height = *last;
            for (auto [h, c] : rows)
                if (h >= e.start_height && h <= e.end_height) e.tx_count += c;
            episodes.push_back(e);
            start.reset();
            last.reset();
        };
        for (auto [h, c] : rows) {
            if (c < params.min_count) continue;
            if (start && h - *last - 1 > params.max_gap) flush();
            if (!start) start = h;
            last = h;
        }
        flush();
    }
    std::sort(episodes.begin(), episodes.end(),
              [](const SpamEpisode& a, const SpamEpisode& b) {
                  if (a.start_height != b.start_height)
                      return a.start_height < b.start_height;
                  if (a.direction != b.direction)
                      return a.direction < b.direction;
                  return a.signature_degree < b.signature_degree;
              });
    return episodes;
}

} // namespace chainlens
