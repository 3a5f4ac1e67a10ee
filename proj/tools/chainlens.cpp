// chainlens: parse raw block files into a chain graph and run the
// flow / dwell / extranonce / degree analyses over it.

#include "chainlens/analytics.hpp"
#include "chainlens/chaingraph.hpp"
#include "chainlens/export.hpp"
#include "chainlens/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace chainlens;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitScenario = 3;
constexpr int kExitUsage = 64;

int log_level() {
    static int level = [] {
        const char* v = std::getenv("CHAINLENS_LOG");
        if (!v) return 0;
        std::string s(v);
        if (s == "debug") return 2;
        if (s == "info") return 1;
        return 0;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "chainlens: " << msg << "\n";
}

std::vector<uint8_t> read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f)
        throw Error(Errc::corrupt_file, "cannot open " + path.string());
    std::streamsize size = f.tellg();
    f.seekg(0);
    std::vector<uint8_t> data(static_cast<size_t>(size));
    if (size && !f.read(reinterpret_cast<char*>(data.data()), size))
        throw Error(Errc::corrupt_file, "cannot read " + path.string());
    return data;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f.write(content.data(), std::streamsize(content.size()));
    if (!f)
        throw Error(Errc::corrupt_file, "cannot write " + path.string());
}

struct RunConfig {
    std::vector<std::string> inputs;
    std::string out_dir = ".";
    unsigned workers = 1;
    int64_t max_height = -1;
    std::string format = "csv";
    SpamParams spam;
    MinerRunParams runs;
};

std::vector<fs::path> collect_block_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const std::string& in : inputs) {
        fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p)) {
                if (!entry.is_regular_file()) continue;
                std::string name = entry.path().filename().string();
                if (name.starts_with("blk") && name.ends_with(".dat"))
                    found.push_back(entry.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
        } else {
            throw Error(Errc::corrupt_file, "no such input: " + in);
        }
    }
    return files;
}

// Parses files with `workers` threads; record batches keep file order.
std::vector<BlockRecord> parse_files(const std::vector<fs::path>& files,
                                     unsigned workers) {
    std::vector<std::vector<BlockRecord>> batches(files.size());
    std::vector<std::string> failures(files.size());

    std::atomic<size_t> next{0};
    auto work = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= files.size()) break;
            try {
                std::vector<uint8_t> bytes = read_file(files[i]);
                batches[i] = scan_file(bytes, uint32_t(i));
                log_info(files[i].string() + ": " +
                         std::to_string(batches[i].size()) + " blocks");
            } catch (const Error& e) {
                failures[i] = std::string(e.what()) + " (offset " +
                              std::to_string(e.offset()) + ")";
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (unsigned t = 0; t < workers; ++t) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }

    for (size_t i = 0; i < files.size(); ++i)
        if (!failures[i].empty())
            throw Error(Errc::corrupt_file,
                        files[i].string() + ": " + failures[i]);

    std::vector<BlockRecord> records;
    for (auto& b : batches)
        for (auto& r : b) records.push_back(std::move(r));
    return records;
}

ChainGraph ingest(const RunConfig& cfg) {
    std::vector<fs::path> files = collect_block_files(cfg.inputs);
    if (files.empty()) throw Error(Errc::corrupt_file, "no block files");
    std::vector<BlockRecord> records = parse_files(files, cfg.workers);
    log_info("building graph over " + std::to_string(records.size()) +
             " blocks");
    return ChainGraph::build(std::move(records), cfg.max_height);
}

int cmd_ingest(const RunConfig& cfg) {
    ChainGraph graph = ingest(cfg);
    GraphStats stats = graph.stats();
    if (cfg.format == "json") {
        std::cout << stats_json(stats) << "\n";
    } else {
        std::string out;
        write_stats_csv(stats, out);
        std::cout << out;
    }
    return kExitOk;
}

int cmd_analyze(const RunConfig& cfg, const std::string& which) {
    static const std::vector<std::string> known = {
        "flow", "dwell", "extranonce", "degrees", "episodes", "all"};
    if (std::find(known.begin(), known.end(), which) == known.end()) {
        std::cerr << "chainlens: unknown analysis '" << which << "'\n";
        return kExitUsage;
    }

    ChainGraph graph = ingest(cfg);
    fs::create_directories(cfg.out_dir);
    fs::path out(cfg.out_dir);
    bool json_mode = cfg.format == "json";
    auto ext = [&](const char* base) {
        return out / (std::string(base) + (json_mode ? ".json" : ".csv"));
    };
    bool all = which == "all";

    if (all || which == "flow") {
        auto cells = flow_matrix(graph);
        write_file(ext("flow"), json_mode ? flow_json(cells) : flow_csv(cells));
        write_file(out / "matrix.html",
                   matrix_html(cells, graph.blocks().size()));
        log_info("flow: " + std::to_string(cells.size()) + " cells");
    }
    if (all || which == "dwell") {
        auto points = dwell_series(graph);
        write_file(ext("dwell"),
                   json_mode ? dwell_json(points) : dwell_csv(points));
    }
    if (all || which == "extranonce") {
        auto samples = extranonce_series(graph);
        write_file(ext("extranonce"), json_mode ? extranonce_json(samples)
                                                : extranonce_csv(samples));
        auto runs = miner_runs(samples, cfg.runs);
        std::string csv = "start_height,end_height,slope,residual,members\n";
        for (const MinerRun& r : runs) {
            char line[96];
            snprintf(line, sizeof(line), "%u,%u,%.3f,%.3f,%u\n",
                     r.start_height, r.end_height, r.slope, r.residual,
                     r.members);
            csv += line;
        }
        write_file(out / "runs.csv", csv);
        log_info("extranonce: " + std::to_string(runs.size()) + " miner runs");
    }
    if (all || which == "degrees" || which == "episodes") {
        auto bins = degree_spectrogram(graph);
        if (all || which == "degrees")
            write_file(ext("degrees"),
                       json_mode ? degrees_json(bins) : degrees_csv(bins));
        if (all || which == "episodes") {
            auto episodes = spam_episodes(bins, cfg.spam);
            write_file(ext("episodes"), json_mode ? episodes_json(episodes)
                                                  : episodes_csv(episodes));
        }
    }

    GraphStats stats = graph.stats();
    std::string s;
    write_stats_csv(stats, s);
    std::cout << s;
    return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    ScenarioSpec spec = ScenarioSpec::load(spec_path);
    GeneratedChain chain = generate_chain(spec);
    fs::create_directories(out_dir);
    fs::path out(out_dir);
    for (size_t i = 0; i < chain.files.size(); ++i) {
        char name[32];
        snprintf(name, sizeof(name), "blk%05zu.dat", i);
        std::ofstream f(out / name, std::ios::binary);
        f.write(reinterpret_cast<const char*>(chain.files[i].data()),
                std::streamsize(chain.files[i].size()));
        if (!f)
            throw Error(Errc::corrupt_file,
                        "cannot write " + (out / name).string());
        log_info(std::string(name) + ": " +
                 std::to_string(chain.files[i].size()) + " bytes");
    }
    write_file(out / "manifest.json", chain.manifest.to_json());
    std::cout << chain.manifest.n_blocks << " blocks in "
              << chain.files.size() << " file(s), manifest written to "
              << (out / "manifest.json").string() << "\n";
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
    ChainGraph graph = ingest(cfg);
    VerifyReport report = graph.verify();
    for (const Violation& v : report.violations)
        std::cout << "violation at height " << v.height << ": " << v.detail
                  << "\n";
    if (!report.ok()) {
        std::cout << report.violations.size() << " violation(s)\n";
        return kExitData;
    }
    uint64_t fees = 0;
    for (uint64_t f : report.block_fees) fees += f;
    std::cout << "ok: " << graph.blocks().size() << " blocks, total fees "
              << fees << " satoshis\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"raw block-file parser and chain-graph analytics"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string which = "all";
    std::string spec_path, synth_out;

    auto add_input_flags = [&](CLI::App* cmd) {
        cmd->add_option("--input", cfg.inputs,
                        "block file or directory of blk*.dat files")
            ->required();
        cmd->add_option("--workers", cfg.workers, "parallel parse workers")
            ->check(CLI::Range(1u, 256u));
        cmd->add_option("--max-height", cfg.max_height,
                        "ignore blocks above this height");
        cmd->add_option("--format", cfg.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    CLI::App* ingest_cmd =
        app.add_subcommand("ingest", "parse block files and report stats");
    add_input_flags(ingest_cmd);

    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "run analyses and export them");
    add_input_flags(analyze_cmd);
    analyze_cmd->add_option("--out", cfg.out_dir, "output directory");
    analyze_cmd->add_option("--which", which,
                            "flow|dwell|extranonce|degrees|episodes|all");
    analyze_cmd->add_option("--min-degree", cfg.spam.min_degree,
                            "episode degree threshold");
    analyze_cmd->add_option("--min-count", cfg.spam.min_count,
                            "episode per-block count threshold");
    analyze_cmd->add_option("--max-gap", cfg.spam.max_gap,
                            "episode gap bridging, in blocks");
    analyze_cmd->add_option("--reset-threshold", cfg.runs.reset_threshold,
                            "extranonce reset detection factor");
    analyze_cmd->add_option("--max-residual", cfg.runs.max_residual,
                            "rms gate for reported miner runs");

    CLI::App* synth_cmd =
        app.add_subcommand("synth", "generate a scenario chain + manifest");
    synth_cmd->add_option("--spec", spec_path, "scenario file")->required();
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    CLI::App* verify_cmd =
        app.add_subcommand("verify", "re-check graph invariants");
    add_input_flags(verify_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ingest_cmd->parsed()) return cmd_ingest(cfg);
        if (analyze_cmd->parsed()) return cmd_analyze(cfg, which);
        if (synth_cmd->parsed()) return cmd_synth(spec_path, synth_out);
        if (verify_cmd->parsed()) return cmd_verify(cfg);
    } catch (const Error& e) {
        std::cerr << "chainlens: " << errc_name(e.code()) << ": " << e.what();
        if (e.offset()) std::cerr << " (offset " << e.offset() << ")";
        std::cerr << "\n";
        return e.code() == Errc::infeasible_scenario ? kExitScenario
                                                     : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "chainlens: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
