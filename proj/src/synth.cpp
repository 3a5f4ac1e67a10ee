#include "chainlens/synth.hpp"

#include "chainlens/script.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace chainlens {

using nlohmann::json;

// ---------------------------------------------------------------- scenario

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        uint64_t r = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw Error(Errc::infeasible_scenario,
                    "scenario: bad integer for '" + key + "': " + v);
    }
}

double parse_f64(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw Error(Errc::infeasible_scenario,
                    "scenario: bad number for '" + key + "': " + v);
    }
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(Errc::infeasible_scenario,
                "scenario: bad boolean for '" + key + "': " + v);
}

PatternKind parse_kind(const std::string& v) {
    if (v == "churn") return PatternKind::churn;
    if (v == "consolidate") return PatternKind::consolidate;
    if (v == "distribute") return PatternKind::distribute;
    if (v == "spam_out") return PatternKind::spam_out;
    if (v == "spam_in") return PatternKind::spam_in;
    if (v == "plant") return PatternKind::plant;
    throw Error(Errc::infeasible_scenario, "scenario: unknown kind: " + v);
}

} // namespace

ScenarioSpec ScenarioSpec::parse(const std::string& text) {
    ScenarioSpec spec;
    std::istringstream in(text);
    std::string line;
    enum class Section { global, miner, pattern } section = Section::global;

    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line == "[miner]") {
                spec.miners.emplace_back();
                section = Section::miner;
            } else if (line == "[pattern]") {
                spec.patterns.emplace_back();
                section = Section::pattern;
            } else {
                throw Error(Errc::infeasible_scenario,
                            "scenario: unknown section " + line);
            }
            continue;
        }

        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::infeasible_scenario,
                        "scenario: expected key = value, got: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (section == Section::global) {
            if (key == "seed") spec.seed = parse_u64(value, key);
            else if (key == "blocks") spec.n_blocks = uint32_t(parse_u64(value, key));
            else if (key == "file_size_mb")
                spec.file_size_limit = parse_u64(value, key) << 20;
            else if (key == "fee_per_tx") spec.fee_per_tx = parse_u64(value, key);
            else if (key == "initial_reward")
                spec.initial_reward = parse_u64(value, key);
            else if (key == "halving_interval")
                spec.halving_interval = uint32_t(parse_u64(value, key));
            else
                throw Error(Errc::infeasible_scenario,
                            "scenario: unknown key " + key);
        } else if (section == Section::miner) {
            MinerSpec& m = spec.miners.back();
            if (key == "weight") m.weight = parse_f64(value, key);
            else if (key == "increment") m.increment = uint32_t(parse_u64(value, key));
            else if (key == "reset_period")
                m.reset_period = uint32_t(parse_u64(value, key));
            else if (key == "randomize") m.randomize = parse_bool(value, key);
            else if (key == "schema") {
                if (value == "push") m.text_schema = false;
                else if (value == "text") m.text_schema = true;
                else
                    throw Error(Errc::infeasible_scenario,
                                "scenario: unknown schema " + value);
            } else if (key == "start") m.start = int64_t(parse_u64(value, key));
            else if (key == "end") m.end = int64_t(parse_u64(value, key));
            else
                throw Error(Errc::infeasible_scenario,
                            "scenario: unknown miner key " + key);
        } else {
            PatternSpec& p = spec.patterns.back();
            if (key == "kind") p.kind = parse_kind(value);
            else if (key == "start") p.start = uint32_t(parse_u64(value, key));
            else if (key == "end") p.end = uint32_t(parse_u64(value, key));
            else if (key == "at")
                p.start = p.end = uint32_t(parse_u64(value, key));
            else if (key == "degree") p.degree = uint32_t(parse_u64(value, key));
            else if (key == "txs_per_block")
                p.txs_per_block = uint32_t(parse_u64(value, key));
            else if (key == "age_base") p.age_base = parse_f64(value, key);
            else if (key == "age_slope") p.age_slope = parse_f64(value, key);
            else if (key == "same_block_frac")
                p.same_block_frac = parse_f64(value, key);
            else if (key == "sweep_from")
                p.sweep_from = int64_t(parse_u64(value, key));
            else if (key == "sweep_to") p.sweep_to = int64_t(parse_u64(value, key));
            else if (key == "source") {
                size_t colon = value.find(':');
                if (colon == std::string::npos)
                    throw Error(Errc::infeasible_scenario,
                                "scenario: source wants height:amount");
                PlantSource s;
                s.height = uint32_t(parse_u64(trim(value.substr(0, colon)), key));
                s.amount = parse_u64(trim(value.substr(colon + 1)), key);
                p.sources.push_back(s);
            } else
                throw Error(Errc::infeasible_scenario,
                            "scenario: unknown pattern key " + key);
        }
    }
    spec.validate();
    return spec;
}

ScenarioSpec ScenarioSpec::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(Errc::infeasible_scenario,
                    "scenario: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

void ScenarioSpec::validate() const {
    if (n_blocks == 0)
        throw Error(Errc::infeasible_scenario, "scenario: blocks must be >= 1");
    if (file_size_limit < (1 << 20) || file_size_limit > (128ull << 20))
        throw Error(Errc::infeasible_scenario,
                    "scenario: file_size_mb must be within [1, 128]");
    for (const MinerSpec& m : miners) {
        if (m.weight <= 0)
            throw Error(Errc::infeasible_scenario,
                        "scenario: miner weight must be positive");
        uint64_t span = m.reset_period ? m.reset_period - 1 : n_blocks - 1;
        if (!m.randomize && uint64_t(m.increment) * span > 0xFFFFFFFFULL)
            throw Error(Errc::infeasible_scenario,
                        "scenario: extranonce counter would overflow 32 bits");
    }
    for (const PatternSpec& p : patterns) {
        if (p.degree < 1)
            throw Error(Errc::infeasible_scenario,
                        "scenario: pattern degree must be >= 1");
        if (p.txs_per_block < 1)
            throw Error(Errc::infeasible_scenario,
                        "scenario: txs_per_block must be >= 1");
        if (p.start > p.end || p.end >= n_blocks)
            throw Error(Errc::infeasible_scenario,
                        "scenario: pattern range must satisfy start <= end < blocks");
        if (p.kind == PatternKind::spam_out && p.degree < 2)
            throw Error(Errc::infeasible_scenario,
                        "scenario: spam_out needs degree >= 2");
        if (p.kind == PatternKind::plant) {
            if (p.sources.empty())
                throw Error(Errc::infeasible_scenario,
                            "scenario: plant needs at least one source");
            if (p.start != p.end)
                throw Error(Errc::infeasible_scenario,
                            "scenario: plant wants a single 'at' height");
            for (const PlantSource& s : p.sources)
                if (s.height >= p.start || s.amount == 0 ||
                    s.amount > kMaxMoney)
                    throw Error(Errc::infeasible_scenario,
                                "scenario: plant source must precede 'at' and "
                                "carry a valid amount");
        }
        if (p.kind == PatternKind::consolidate && p.sweep_from >= 0) {
            if (p.sweep_to < p.sweep_from || p.start != p.end)
                throw Error(Errc::infeasible_scenario,
                            "scenario: sweep wants sweep_from <= sweep_to and a "
                            "single height");
            if (p.sweep_to + 100 > int64_t(p.start))
                throw Error(Errc::infeasible_scenario,
                            "scenario: swept coinbases would not be mature");
        }
    }
}

// --------------------------------------------------------------- generator

namespace {

constexpr uint64_t kDust = 1000;
constexpr uint64_t kMinOut = 1000;
constexpr uint32_t kMaturity = 100;

struct Utxo {
    Hash256 txid;
    uint32_t vout = 0;
    uint64_t value = 0;
    uint32_t creation_height = 0;
    bool coinbase = false;
};

struct TruthInput {
    uint64_t amount = 0;
    uint32_t source_height = 0;
    bool same_block = false;
};

class Generator {
public:
    explicit Generator(const ScenarioSpec& spec)
        : spec_(spec), rng_(spec.seed), by_height_(spec.n_blocks) {
        if (spec_.miners.empty()) spec_.miners.emplace_back();
        for (MinerSpec& m : spec_.miners)
            if (m.end < 0) m.end = int64_t(spec_.n_blocks) - 1;
        for (size_t i = 0; i < spec_.miners.size(); ++i) {
            std::array<uint8_t, 20> a;
            for (auto& b : a) b = uint8_t(rng_.next());
            miner_addresses_.push_back(a);
        }
        for (int i = 0; i < 1020; ++i) {
            std::array<uint8_t, 20> a;
            for (auto& b : a) b = uint8_t(rng_.next());
            spam_addresses_.push_back(a);
        }
        spam_change_.assign(spec_.patterns.size(), std::nullopt);
        plant_change_.assign(spec_.patterns.size(), std::nullopt);
        plant_prepared_.resize(spec_.patterns.size());
        for (size_t i = 0; i < spec_.patterns.size(); ++i)
            plant_prepared_[i].resize(spec_.patterns[i].sources.size());
    }

    GeneratedChain run();

private:
    ScenarioSpec spec_;
    Rng rng_;

    // live non-coinbase outputs bucketed by creation height
    std::vector<std::vector<Utxo>> by_height_;
    uint64_t live_count_ = 0;
    uint32_t oldest_hint_ = 0;
    std::map<uint32_t, Utxo> coinbase_pool_; // height -> single output
    std::deque<Utxo> dust_pool_;

    std::vector<std::array<uint8_t, 20>> miner_addresses_;
    std::vector<std::array<uint8_t, 20>> spam_addresses_;
    size_t spam_addr_cursor_ = 0;
    std::vector<std::optional<Utxo>> spam_change_;
    std::vector<std::optional<Utxo>> plant_change_;
    std::vector<std::vector<std::optional<Utxo>>> plant_prepared_;

    // per-block working state
    uint32_t height_ = 0;
    std::vector<Utxo> staged_;       // outputs of this block's earlier txs
    std::vector<Utxo> staged_dust_;
    std::vector<TruthInput> truth_;

    // manifest accumulation
    std::unordered_set<std::string> distinct_addresses_;
    Manifest manifest_;
    std::vector<std::vector<TruthInput>> truth_by_block_;
    std::map<uint32_t, uint32_t> first_spend_;

    uint64_t subsidy(uint32_t h) const {
        uint32_t halvings = h / spec_.halving_interval;
        if (halvings >= 64) return 0;
        return spec_.initial_reward >> halvings;
    }

    std::array<uint8_t, 20> fresh_address() {
        std::array<uint8_t, 20> a;
        for (auto& b : a) b = uint8_t(rng_.next());
        return a;
    }

    std::vector<uint8_t> fake_sig() {
        std::vector<uint8_t> s;
        s.reserve(107);
        s.push_back(0x47);
        for (int i = 0; i < 0x47; ++i) s.push_back(uint8_t(rng_.next()));
        s.push_back(0x21);
        for (int i = 0; i < 0x21; ++i) s.push_back(uint8_t(rng_.next()));
        return s;
    }

    void note_address(const std::array<uint8_t, 20>& a) {
        distinct_addresses_.emplace(reinterpret_cast<const char*>(a.data()),
                                    a.size());
    }

    void record_spend(const Utxo& u) {
        truth_.push_back({u.value, u.creation_height,
                          u.creation_height == height_});
        if (u.coinbase) first_spend_.try_emplace(u.creation_height, height_);
    }

    std::optional<Utxo> pick_by_age(uint32_t target);
    std::optional<Utxo> pick_oldest();
    std::optional<Utxo> take_mature_coinbase(uint64_t min_value);
    std::optional<Utxo> take_staged(uint64_t min_value);

    // collects inputs totalling at least `need`, age-targeted first,
    // mature coinbases as the fallback
    std::vector<Utxo> gather(uint64_t need, std::optional<uint32_t> age_target);

    TxIn spend_input(const Utxo& u) {
        TxIn in;
        in.prev_txid = u.txid;
        in.prev_vout = u.vout;
        in.script_sig = fake_sig();
        in.sequence = 0xFFFFFFFF;
        record_spend(u);
        return in;
    }

    TxRecord finish_tx(TxRecord tx) {
        tx.version = 1;
        tx.locktime = 0;
        tx.txid = txid(tx);
        return tx;
    }

    Utxo out_of(const TxRecord& tx, uint32_t vout) const {
        return Utxo{tx.txid, vout, tx.outputs[vout].value, height_, false};
    }

    TxOut pay_to(uint64_t value, const std::array<uint8_t, 20>& addr) {
        note_address(addr);
        return TxOut{value, make_p2pkh_script(addr)};
    }

    TxRecord churn_tx(const PatternSpec& p);
    TxRecord consolidate_tx(const PatternSpec& p);
    TxRecord sweep_tx(const PatternSpec& p);
    TxRecord distribute_tx(const PatternSpec& p);
    TxRecord spam_out_tx(const PatternSpec& p, size_t pattern_idx);
    TxRecord spam_in_tx(const PatternSpec& p);
    TxRecord plant_funding_tx(size_t pattern_idx, size_t source_idx);
    TxRecord plant_spend_tx(const PatternSpec& p, size_t pattern_idx);
    TxRecord coinbase_tx(size_t miner_idx, uint64_t fees);

    size_t choose_miner();
    std::optional<uint32_t> miner_extranonce(size_t idx);

    void finalize_manifest();
};

std::optional<Utxo> Generator::pick_by_age(uint32_t target) {
    if (live_count_ == 0 || height_ == 0) return std::nullopt;
    uint32_t max_h = height_ - 1;
    if (target > max_h) target = max_h;
    for (uint32_t delta = 0;; ++delta) {
        bool any = false;
        if (delta <= target) {
            auto& bucket = by_height_[target - delta];
            any = true;
            if (!bucket.empty()) {
                Utxo u = bucket.back();
                bucket.pop_back();
                --live_count_;
                return u;
            }
        }
        if (delta > 0 && target + delta <= max_h) {
            auto& bucket = by_height_[target + delta];
            any = true;
            if (!bucket.empty()) {
                Utxo u = bucket.back();
                bucket.pop_back();
                --live_count_;
                return u;
            }
        }
        if (!any && delta > target) return std::nullopt;
    }
}

std::optional<Utxo> Generator::pick_oldest() {
    if (live_count_ == 0) return std::nullopt;
    while (oldest_hint_ < by_height_.size() && by_height_[oldest_hint_].empty())
        ++oldest_hint_;
    if (oldest_hint_ >= by_height_.size()) return std::nullopt;
    auto& bucket = by_height_[oldest_hint_];
    Utxo u = bucket.back();
    bucket.pop_back();
    --live_count_;
    return u;
}

std::optional<Utxo> Generator::take_mature_coinbase(uint64_t min_value) {
    if (height_ < kMaturity) return std::nullopt;
    uint32_t latest = height_ - kMaturity;
    for (auto it = coinbase_pool_.begin();
         it != coinbase_pool_.end() && it->first <= latest; ++it) {
        if (it->second.value >= min_value) {
            Utxo u = it->second;
            coinbase_pool_.erase(it);
            return u;
        }
    }
    return std::nullopt;
}

std::optional<Utxo> Generator::take_staged(uint64_t min_value) {
    for (auto it = staged_.rbegin(); it != staged_.rend(); ++it) {
        if (it->value >= min_value) {
            Utxo u = *it;
            staged_.erase(std::next(it).base());
            return u;
        }
    }
    return std::nullopt;
}

std::vector<Utxo> Generator::gather(uint64_t need,
                                    std::optional<uint32_t> age_target) {
    std::vector<Utxo> ins;
    uint64_t sum = 0;
    for (int i = 0; i < 16 && sum < need; ++i) {
        std::optional<Utxo> u = age_target ? pick_by_age(*age_target)
                                           : pick_oldest();
        if (!u) break;
        sum += u->value;
        ins.push_back(*u);
    }
    while (sum < need) {
        auto cb = take_mature_coinbase(0);
        if (!cb)
            throw Error(Errc::infeasible_scenario,
                        "pattern needs unavailable funds at height " +
                            std::to_string(height_));
        sum += cb->value;
        ins.push_back(*cb);
    }
    return ins;
}

TxRecord Generator::churn_tx(const PatternSpec& p) {
    uint64_t need = spec_.fee_per_tx + uint64_t(p.degree) * kMinOut;
    TxRecord tx;

    bool same_block = !staged_.empty() && rng_.unit() < p.same_block_frac;
    std::vector<Utxo> ins;
    if (same_block) {
        if (auto u = take_staged(need)) ins.push_back(*u);
    }
    if (ins.empty()) {
        double age = p.age_base + p.age_slope * double(height_ - p.start);
        uint32_t target = 0;
        if (double(height_) > age)
            target = uint32_t(std::llround(double(height_) - age));
        ins = gather(need, target);
    }

    uint64_t sum = 0;
    for (const Utxo& u : ins) {
        sum += u.value;
        tx.inputs.push_back(spend_input(u));
    }
    uint64_t available = sum - spec_.fee_per_tx;
    uint64_t share = available / p.degree;
    uint64_t first_extra = available - share * p.degree;
    for (uint32_t i = 0; i < p.degree; ++i)
        tx.outputs.push_back(pay_to(share + (i == 0 ? first_extra : 0),
                                    fresh_address()));
    return finish_tx(tx);
}

TxRecord Generator::consolidate_tx(const PatternSpec& p) {
    TxRecord tx;
    std::vector<Utxo> ins;
    uint64_t sum = 0;
    for (uint32_t i = 0; i < p.degree; ++i) {
        auto u = pick_oldest();
        if (!u) break;
        sum += u->value;
        ins.push_back(*u);
    }
    if (ins.empty() || sum <= spec_.fee_per_tx) {
        auto cb = take_mature_coinbase(spec_.fee_per_tx + kMinOut);
        if (!cb)
            throw Error(Errc::infeasible_scenario,
                        "consolidate has nothing to spend at height " +
                            std::to_string(height_));
        sum += cb->value;
        ins.push_back(*cb);
    }
    for (const Utxo& u : ins) tx.inputs.push_back(spend_input(u));
    tx.outputs.push_back(pay_to(sum - spec_.fee_per_tx, fresh_address()));
    return finish_tx(tx);
}

TxRecord Generator::sweep_tx(const PatternSpec& p) {
    TxRecord tx;
    uint64_t sum = 0;
    for (int64_t h = p.sweep_from; h <= p.sweep_to; ++h) {
        auto it = coinbase_pool_.find(uint32_t(h));
        if (it == coinbase_pool_.end())
            throw Error(Errc::infeasible_scenario,
                        "sweep: coinbase of height " + std::to_string(h) +
                            " is not available");
        sum += it->second.value;
        tx.inputs.push_back(spend_input(it->second));
        coinbase_pool_.erase(it);
    }
    if (sum <= spec_.fee_per_tx)
        throw Error(Errc::infeasible_scenario, "sweep total below fee");
    tx.outputs.push_back(pay_to(sum - spec_.fee_per_tx, fresh_address()));
    return finish_tx(tx);
}

TxRecord Generator::distribute_tx(const PatternSpec& p) {
    uint64_t need = spec_.fee_per_tx + uint64_t(p.degree) * kMinOut;
    TxRecord tx;
    std::vector<Utxo> ins;
    uint64_t sum = 0;
    if (auto cb = take_mature_coinbase(need)) {
        sum = cb->value;
        ins.push_back(*cb);
    } else {
        ins = gather(need, std::nullopt);
        for (const Utxo& u : ins) sum += u.value;
    }
    for (const Utxo& u : ins) tx.inputs.push_back(spend_input(u));
    uint64_t available = sum - spec_.fee_per_tx;
    uint64_t share = available / p.degree;
    uint64_t first_extra = available - share * p.degree;
    for (uint32_t i = 0; i < p.degree; ++i)
        tx.outputs.push_back(pay_to(share + (i == 0 ? first_extra : 0),
                                    fresh_address()));
    return finish_tx(tx);
}

TxRecord Generator::spam_out_tx(const PatternSpec& p, size_t pattern_idx) {
    uint64_t need = spec_.fee_per_tx + uint64_t(p.degree - 1) * kDust + kMinOut;
    TxRecord tx;
    std::vector<Utxo> ins;
    uint64_t sum = 0;
    auto& change = spam_change_[pattern_idx];
    if (change) {
        sum += change->value;
        ins.push_back(*change);
        change.reset();
    }
    while (sum < need) {
        auto cb = take_mature_coinbase(0);
        if (!cb)
            throw Error(Errc::infeasible_scenario,
                        "spam_out cannot refill its wallet at height " +
                            std::to_string(height_));
        sum += cb->value;
        ins.push_back(*cb);
    }
    for (const Utxo& u : ins) tx.inputs.push_back(spend_input(u));

    for (uint32_t i = 0; i + 1 < p.degree; ++i) {
        const auto& addr = spam_addresses_[spam_addr_cursor_];
        spam_addr_cursor_ = (spam_addr_cursor_ + 1) % spam_addresses_.size();
        tx.outputs.push_back(pay_to(kDust, addr));
    }
    uint64_t change_value = sum - spec_.fee_per_tx - uint64_t(p.degree - 1) * kDust;
    tx.outputs.push_back(pay_to(change_value, fresh_address()));
    tx = finish_tx(tx);

    for (uint32_t i = 0; i + 1 < p.degree; ++i) {
        Utxo u = out_of(tx, i);
        staged_dust_.push_back(u);
    }
    spam_change_[pattern_idx] = out_of(tx, p.degree - 1);
    return tx;
}

TxRecord Generator::spam_in_tx(const PatternSpec& p) {
    if (dust_pool_.size() < p.degree)
        throw Error(Errc::infeasible_scenario,
                    "spam_in ran out of dust at height " +
                        std::to_string(height_));
    TxRecord tx;
    uint64_t sum = 0;
    for (uint32_t i = 0; i < p.degree; ++i) {
        Utxo u = dust_pool_.front();
        dust_pool_.pop_front();
        sum += u.value;
        tx.inputs.push_back(spend_input(u));
    }
    if (sum <= spec_.fee_per_tx)
        throw Error(Errc::infeasible_scenario,
                    "spam_in degree too small to cover the fee");
    tx.outputs.push_back(pay_to(sum - spec_.fee_per_tx, fresh_address()));
    return finish_tx(tx);
}

TxRecord Generator::plant_funding_tx(size_t pattern_idx, size_t source_idx) {
    const PlantSource& s = spec_.patterns[pattern_idx].sources[source_idx];
    uint64_t need = s.amount + spec_.fee_per_tx;
    TxRecord tx;
    std::vector<Utxo> ins;
    uint64_t sum = 0;
    auto& change = plant_change_[pattern_idx];
    if (change && change->value >= need) {
        sum = change->value;
        ins.push_back(*change);
        change.reset();
    } else {
        if (change) {
            sum += change->value;
            ins.push_back(*change);
            change.reset();
        }
        while (sum < need) {
            auto cb = take_mature_coinbase(0);
            if (!cb)
                throw Error(Errc::infeasible_scenario,
                            "plant cannot fund " + std::to_string(s.amount) +
                                " at height " + std::to_string(height_));
            sum += cb->value;
            ins.push_back(*cb);
        }
    }
    for (const Utxo& u : ins) tx.inputs.push_back(spend_input(u));
    tx.outputs.push_back(pay_to(s.amount, fresh_address()));
    uint64_t change_value = sum - need;
    if (change_value > 0) tx.outputs.push_back(pay_to(change_value, fresh_address()));
    tx = finish_tx(tx);

    plant_prepared_[pattern_idx][source_idx] = out_of(tx, 0);
    if (change_value > 0) plant_change_[pattern_idx] = out_of(tx, 1);
    return tx;
}

TxRecord Generator::plant_spend_tx(const PatternSpec& p, size_t pattern_idx) {
    TxRecord tx;
    uint64_t sum = 0;
    for (size_t i = 0; i < p.sources.size(); ++i) {
        auto& prepared = plant_prepared_[pattern_idx][i];
        if (!prepared)
            throw Error(Errc::infeasible_scenario,
                        "plant source was never prepared");
        sum += prepared->value;
        tx.inputs.push_back(spend_input(*prepared));
        prepared.reset();
    }
    if (sum <= spec_.fee_per_tx)
        throw Error(Errc::infeasible_scenario, "plant total below fee");
    tx.outputs.push_back(pay_to(sum - spec_.fee_per_tx, fresh_address()));
    return finish_tx(tx);
}

size_t Generator::choose_miner() {
    double total = 0;
    for (const MinerSpec& m : spec_.miners)
        if (int64_t(height_) >= m.start && int64_t(height_) <= m.end)
            total += m.weight;
    if (total <= 0)
        throw Error(Errc::infeasible_scenario,
                    "no miner active at height " + std::to_string(height_));
    double r = rng_.unit() * total;
    for (size_t i = 0; i < spec_.miners.size(); ++i) {
        const MinerSpec& m = spec_.miners[i];
        if (int64_t(height_) < m.start || int64_t(height_) > m.end) continue;
        if (r < m.weight) return i;
        r -= m.weight;
    }
    for (size_t i = spec_.miners.size(); i-- > 0;) {
        const MinerSpec& m = spec_.miners[i];
        if (int64_t(height_) >= m.start && int64_t(height_) <= m.end) return i;
    }
    return 0;
}

std::optional<uint32_t> Generator::miner_extranonce(size_t idx) {
    const MinerSpec& m = spec_.miners[idx];
    if (m.text_schema) return std::nullopt;
    if (m.randomize) return uint32_t(rng_.below(1ull << 32));
    uint64_t phase = m.reset_period ? height_ % m.reset_period : height_;
    return uint32_t(uint64_t(m.increment) * phase);
}

TxRecord Generator::coinbase_tx(size_t miner_idx, uint64_t fees) {
    const MinerSpec& m = spec_.miners[miner_idx];
    TxRecord tx;
    TxIn in;
    in.prev_txid = Hash256{};
    in.prev_vout = 0xFFFFFFFF;
    in.sequence = 0xFFFFFFFF;

    std::optional<uint32_t> extranonce = miner_extranonce(miner_idx);
    if (m.text_schema) {
        static const char* words = "abcdefghijklmnopqrstuvwxyz ";
        uint32_t len = 8 + uint32_t(rng_.below(24));
        in.script_sig.push_back(uint8_t(len));
        for (uint32_t i = 0; i < len; ++i)
            in.script_sig.push_back(uint8_t(words[rng_.below(27)]));
    } else {
        in.script_sig.push_back(0x04);
        uint32_t bits = 0x1D00FFFF;
        for (int i = 0; i < 4; ++i)
            in.script_sig.push_back(uint8_t(bits >> (8 * i)));
        uint32_t v = *extranonce;
        int len = 1;
        while (len < 4 && (v >> (8 * len)) != 0) ++len;
        in.script_sig.push_back(uint8_t(len));
        for (int i = 0; i < len; ++i)
            in.script_sig.push_back(uint8_t(v >> (8 * i)));
    }
    tx.inputs.push_back(std::move(in));
    tx.outputs.push_back(pay_to(subsidy(height_) + fees,
                                miner_addresses_[miner_idx]));

    ExtranonceSample sample;
    sample.height = height_;
    sample.extranonce = extranonce;
    manifest_.extranonce.push_back(sample);
    return finish_tx(tx);
}

GeneratedChain Generator::run() {
    GeneratedChain out;
    std::vector<uint8_t> current_file;
    Hash256 prev_hash{};
    uint32_t ts = 1231006505;

    manifest_.seed = spec_.seed;
    manifest_.n_blocks = spec_.n_blocks;
    manifest_.block_fees.assign(spec_.n_blocks, 0);
    truth_by_block_.resize(spec_.n_blocks);

    for (height_ = 0; height_ < spec_.n_blocks; ++height_) {
        ts += 480 + uint32_t(rng_.below(241)); // 600s +- 120s
        size_t miner = choose_miner();
        staged_.clear();
        staged_dust_.clear();
        truth_.clear();

        std::vector<TxRecord> pattern_txs;
        uint64_t fees = 0;
        auto add_tx = [&](TxRecord tx) {
            uint64_t in_sum = 0, out_sum = 0;
            for (const TruthInput& t :
                 std::span(truth_).subspan(truth_.size() -
                                           tx.inputs.size()))
                in_sum += t.amount;
            for (const TxOut& o : tx.outputs) out_sum += o.value;
            fees += in_sum - out_sum;
            pattern_txs.push_back(std::move(tx));
        };

        // plant funding duties first, then patterns in spec order
        for (size_t pi = 0; pi < spec_.patterns.size(); ++pi) {
            const PatternSpec& p = spec_.patterns[pi];
            if (p.kind != PatternKind::plant) continue;
            for (size_t si = 0; si < p.sources.size(); ++si)
                if (p.sources[si].height == height_) {
                    TxRecord tx = plant_funding_tx(pi, si);
                    add_tx(std::move(tx));
                }
        }
        for (size_t pi = 0; pi < spec_.patterns.size(); ++pi) {
            const PatternSpec& p = spec_.patterns[pi];
            if (height_ < p.start || height_ > p.end) continue;
            switch (p.kind) {
                case PatternKind::plant: {
                    TxRecord tx = plant_spend_tx(p, pi);
                    add_tx(std::move(tx));
                    break;
                }
                case PatternKind::consolidate:
                    if (p.sweep_from >= 0) {
                        add_tx(sweep_tx(p));
                        break;
                    }
                    [[fallthrough]];
                default:
                    for (uint32_t t = 0; t < p.txs_per_block; ++t) {
                        TxRecord tx;
                        switch (p.kind) {
                            case PatternKind::churn: tx = churn_tx(p); break;
                            case PatternKind::consolidate:
                                tx = consolidate_tx(p);
                                break;
                            case PatternKind::distribute:
                                tx = distribute_tx(p);
                                break;
                            case PatternKind::spam_out:
                                tx = spam_out_tx(p, pi);
                                break;
                            case PatternKind::spam_in:
                                tx = spam_in_tx(p);
                                break;
                            default: break;
                        }
                        // stage ordinary outputs for same-block chaining
                        if (p.kind == PatternKind::churn ||
                            p.kind == PatternKind::consolidate ||
                            p.kind == PatternKind::distribute) {
                            for (uint32_t v = 0; v < tx.outputs.size(); ++v)
                                staged_.push_back(out_of(tx, v));
                        }
                        add_tx(std::move(tx));
                    }
            }
        }

        TxRecord coinbase = coinbase_tx(miner, fees);
        std::vector<TxRecord> txs;
        txs.reserve(pattern_txs.size() + 1);
        txs.push_back(std::move(coinbase));
        for (TxRecord& tx : pattern_txs) txs.push_back(std::move(tx));

        std::vector<Hash256> ids;
        ids.reserve(txs.size());
        for (const TxRecord& tx : txs) ids.push_back(tx.txid);

        BlockRecord block;
        block.header.version = 1;
        block.header.prev_hash = prev_hash;
        block.header.merkle_root = merkle_root(ids);
        block.header.timestamp = ts;
        block.header.bits = 0x1D00FFFF;
        block.header.nonce = uint32_t(rng_.below(1ull << 32));
        block.txs = std::move(txs);
        block.block_hash = block_hash(block.header);
        prev_hash = block.block_hash;

        std::vector<uint8_t> bytes = serialize_block(block);
        if (!current_file.empty() &&
            current_file.size() + bytes.size() > spec_.file_size_limit) {
            out.files.push_back(std::move(current_file));
            current_file.clear();
        }
        current_file.insert(current_file.end(), bytes.begin(), bytes.end());

        // manifest accumulation
        manifest_.stats.blocks += 1;
        manifest_.stats.raw_bytes += bytes.size();
        BlockCounts bc;
        bc.height = height_;
        bc.tx_count = uint32_t(block.txs.size());
        std::map<int32_t, uint32_t> degree_counts;
        for (const TxRecord& tx : block.txs) {
            bc.input_count += uint32_t(tx.inputs.size());
            bc.output_count += uint32_t(tx.outputs.size());
            degree_counts[int32_t(tx.inputs.size())] += 1;
            degree_counts[-int32_t(tx.outputs.size())] += 1;
        }
        manifest_.stats.transactions += bc.tx_count;
        manifest_.stats.inputs += bc.input_count;
        manifest_.stats.outputs += bc.output_count;
        manifest_.block_counts.push_back(bc);
        for (auto [deg, count] : degree_counts)
            manifest_.degrees.push_back({height_, deg, count});
        manifest_.block_fees[height_] = fees;
        truth_by_block_[height_] = truth_;

        // flush pools: coinbase output, dust, and ordinary outputs
        coinbase_pool_.emplace(
            height_, Utxo{block.txs[0].txid, 0, block.txs[0].outputs[0].value,
                          height_, true});
        for (Utxo& u : staged_) {
            by_height_[u.creation_height].push_back(u);
            ++live_count_;
        }
        for (Utxo& u : staged_dust_) dust_pool_.push_back(u);
    }
    if (!current_file.empty()) out.files.push_back(std::move(current_file));

    manifest_.stats.addresses = distinct_addresses_.size();
    finalize_manifest();
    out.manifest = std::move(manifest_);
    return out;
}

void Generator::finalize_manifest() {
    // flow + dwell from the generation-time spend records
    for (uint32_t h = 0; h < spec_.n_blocks; ++h) {
        std::map<uint32_t, uint64_t> by_source;
        uint64_t flow_total = 0;
        unsigned __int128 numerator = 0;
        uint64_t denominator = 0;
        for (const TruthInput& t : truth_by_block_[h]) {
            numerator += (unsigned __int128)(h - t.source_height) * t.amount;
            denominator += t.amount;
            if (t.same_block || t.amount == 0) continue;
            by_source[t.source_height] += t.amount;
            flow_total += t.amount;
        }
        if (flow_total > 0)
            for (auto [src, amount] : by_source)
                manifest_.flow.push_back(
                    {src, h, double(amount) / double(flow_total)});
        if (denominator > 0)
            manifest_.dwell.push_back(
                {h, double(numerator) / double(denominator), denominator});
    }

    for (ExtranonceSample& s : manifest_.extranonce) {
        auto it = first_spend_.find(s.height);
        if (it != first_spend_.end()) s.spend_height = it->second;
    }

    // planted spam episodes
    for (const PatternSpec& p : spec_.patterns) {
        if (p.kind != PatternKind::spam_out && p.kind != PatternKind::spam_in)
            continue;
        SpamEpisode e;
        e.direction = p.kind == PatternKind::spam_in ? Direction::inbound
                                                     : Direction::outbound;
        e.signature_degree = p.degree;
        e.start_height = p.start;
        e.end_height = p.end;
        e.tx_count = uint64_t(p.end - p.start + 1) * p.txs_per_block;
        manifest_.episodes.push_back(e);
    }
    std::sort(manifest_.episodes.begin(), manifest_.episodes.end(),
              [](const SpamEpisode& a, const SpamEpisode& b) {
                  if (a.start_height != b.start_height)
                      return a.start_height < b.start_height;
                  if (a.direction != b.direction)
                      return a.direction < b.direction;
                  return a.signature_degree < b.signature_degree;
              });

    // planted extranonce lines for miners alone in their height range
    for (size_t i = 0; i < spec_.miners.size(); ++i) {
        const MinerSpec& m = spec_.miners[i];
        if (m.randomize || m.text_schema || m.increment < 1) continue;
        bool exclusive = true;
        for (size_t j = 0; j < spec_.miners.size(); ++j)
            if (j != i && spec_.miners[j].start <= m.end &&
                spec_.miners[j].end >= m.start)
                exclusive = false;
        if (!exclusive) continue;
        uint32_t era_start = uint32_t(std::max<int64_t>(m.start, 0));
        uint32_t era_end = uint32_t(std::min<int64_t>(m.end, spec_.n_blocks - 1));
        uint32_t seg = era_start;
        while (seg <= era_end) {
            uint32_t seg_end = era_end;
            if (m.reset_period) {
                uint32_t boundary = (seg / m.reset_period + 1) * m.reset_period;
                if (boundary - 1 < seg_end) seg_end = boundary - 1;
            }
            if (seg_end - seg + 1 >= 3)
                manifest_.runs.push_back({seg, seg_end, double(m.increment),
                                          0.0, seg_end - seg + 1});
            if (seg_end == era_end) break;
            seg = seg_end + 1;
        }
    }

    int sloped_churns = 0;
    double slope = 0;
    for (const PatternSpec& p : spec_.patterns)
        if (p.kind == PatternKind::churn && p.age_slope != 0) {
            ++sloped_churns;
            slope = p.age_slope;
        }
    if (sloped_churns == 1) manifest_.planted_trend_slope = slope;
}

} // namespace

GeneratedChain generate_chain(const ScenarioSpec& spec) {
    spec.validate();
    Generator g(spec);
    return g.run();
}

// ---------------------------------------------------------------- manifest

std::string Manifest::to_json() const {
    json j;
    j["seed"] = seed;
    j["n_blocks"] = n_blocks;
    j["stats"] = {{"Blocks", stats.blocks},
                  {"Transactions", stats.transactions},
                  {"Inputs", stats.inputs},
                  {"Outputs", stats.outputs},
                  {"Addresses", stats.addresses},
                  {"RawBytes", stats.raw_bytes}};
    auto& counts = j["block_counts"] = json::array();
    for (const BlockCounts& b : block_counts)
        counts.push_back({{"height", b.height},
                          {"tx_count", b.tx_count},
                          {"input_count", b.input_count},
                          {"output_count", b.output_count}});
    j["block_fees"] = block_fees;
    auto& jflow = j["flow"] = json::array();
    for (const FlowCell& c : flow)
        jflow.push_back({{"src_height", c.src_height},
                         {"dst_height", c.dst_height},
                         {"fraction", c.fraction}});
    auto& jdwell = j["dwell"] = json::array();
    for (const DwellPoint& d : dwell)
        jdwell.push_back({{"height", d.height},
                          {"dwell_blocks", d.dwell},
                          {"included_satoshis", d.included_satoshis}});
    auto& jx = j["extranonce"] = json::array();
    for (const ExtranonceSample& s : extranonce) {
        json row;
        row["height"] = s.height;
        row["extranonce"] =
            s.extranonce ? json(*s.extranonce) : json(nullptr);
        row["spend_height"] =
            s.spend_height ? json(*s.spend_height) : json(nullptr);
        jx.push_back(row);
    }
    auto& jdeg = j["degrees"] = json::array();
    for (const DegreeBin& b : degrees)
        jdeg.push_back({{"height", b.height},
                        {"signed_degree", b.signed_degree},
                        {"count", b.count}});
    auto& jep = j["episodes"] = json::array();
    for (const SpamEpisode& e : episodes)
        jep.push_back({{"direction", direction_name(e.direction)},
                       {"signature_degree", e.signature_degree},
                       {"start_height", e.start_height},
                       {"end_height", e.end_height},
                       {"tx_count", e.tx_count}});
    auto& jr = j["runs"] = json::array();
    for (const MinerRun& r : runs)
        jr.push_back({{"start_height", r.start_height},
                      {"end_height", r.end_height},
                      {"slope", r.slope},
                      {"residual", r.residual},
                      {"members", r.members}});
    j["planted_trend_slope"] =
        planted_trend_slope ? json(*planted_trend_slope) : json(nullptr);
    return j.dump(1);
}

Manifest Manifest::from_json(const std::string& text) {
    json j = json::parse(text);
    Manifest m;
    m.seed = j.at("seed").get<uint64_t>();
    m.n_blocks = j.at("n_blocks").get<uint32_t>();
    const json& s = j.at("stats");
    m.stats.blocks = s.at("Blocks").get<uint64_t>();
    m.stats.transactions = s.at("Transactions").get<uint64_t>();
    m.stats.inputs = s.at("Inputs").get<uint64_t>();
    m.stats.outputs = s.at("Outputs").get<uint64_t>();
    m.stats.addresses = s.at("Addresses").get<uint64_t>();
    m.stats.raw_bytes = s.at("RawBytes").get<uint64_t>();
    for (const json& row : j.at("block_counts"))
        m.block_counts.push_back({row.at("height").get<uint32_t>(),
                                  row.at("tx_count").get<uint32_t>(),
                                  row.at("input_count").get<uint32_t>(),
                                  row.at("output_count").get<uint32_t>()});
    m.block_fees = j.at("block_fees").get<std::vector<uint64_t>>();
    for (const json& row : j.at("flow"))
        m.flow.push_back({row.at("src_height").get<uint32_t>(),
                          row.at("dst_height").get<uint32_t>(),
                          row.at("fraction").get<double>()});
    for (const json& row : j.at("dwell"))
        m.dwell.push_back({row.at("height").get<uint32_t>(),
                           row.at("dwell_blocks").get<double>(),
                           row.at("included_satoshis").get<uint64_t>()});
    for (const json& row : j.at("extranonce")) {
        ExtranonceSample s2;
        s2.height = row.at("height").get<uint32_t>();
        if (!row.at("extranonce").is_null())
            s2.extranonce = row.at("extranonce").get<uint32_t>();
        if (!row.at("spend_height").is_null())
            s2.spend_height = row.at("spend_height").get<uint32_t>();
        m.extranonce.push_back(s2);
    }
    for (const json& row : j.at("degrees"))
        m.degrees.push_back({row.at("height").get<uint32_t>(),
                             row.at("signed_degree").get<int32_t>(),
                             row.at("count").get<uint32_t>()});
    for (const json& row : j.at("episodes")) {
        SpamEpisode e;
        e.direction = row.at("direction").get<std::string>() == "in"
                          ? Direction::inbound
                          : Direction::outbound;
        e.signature_degree = row.at("signature_degree").get<uint32_t>();
        e.start_height = row.at("start_height").get<uint32_t>();
        e.end_height = row.at("end_height").get<uint32_t>();
        e.tx_count = row.at("tx_count").get<uint64_t>();
        m.episodes.push_back(e);
    }
    for (const json& row : j.at("runs"))
        m.runs.push_back({row.at("start_height").get<uint32_t>(),
                          row.at("end_height").get<uint32_t>(),
                          row.at("slope").get<double>(),
                          row.at("residual").get<double>(),
                          row.at("members").get<uint32_t>()});
    if (!j.at("planted_trend_slope").is_null())
        m.planted_trend_slope = j.at("planted_trend_slope").get<double>();
    return m;
}

} // namespace chainlens
