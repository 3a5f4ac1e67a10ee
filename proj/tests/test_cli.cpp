#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

RunResult run(const std::string& args, const std::string& env = "") {
    std::string cmd = (env.empty() ? "" : env + " ") +
                      std::string(CHAINLENS_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("chainlens_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string scenario(const std::string& name) {
    return (fs::path(SCENARIO_DIR) / name).string();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), {});
}

} // namespace

TEST_CASE("synth then ingest reports manifest-consistent stats") {
    fs::path dir = fresh_dir("ingest");
    auto gen = run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                   dir.string());
    REQUIRE(gen.exit_code == 0);
    CHECK(fs::exists(dir / "blk00000.dat"));
    CHECK(fs::exists(dir / "manifest.json"));

    auto ingest = run("ingest --input " + dir.string());
    CHECK(ingest.exit_code == 0);
    CHECK(ingest.output.find("metric,value\n") != std::string::npos);
    CHECK(ingest.output.find("Blocks,600\n") != std::string::npos);

    auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    std::string want = "Transactions," +
                       std::to_string(uint64_t(manifest["stats"]["Transactions"])) +
                       "\n";
    CHECK(ingest.output.find(want) != std::string::npos);
}

TEST_CASE("synth output is byte-stable across runs") {
    fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                a.string()).exit_code == 0);
    REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                b.string()).exit_code == 0);
    CHECK(slurp(a / "blk00000.dat") == slurp(b / "blk00000.dat"));
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
}

TEST_CASE("analyze writes the exported csv schemas") {
    fs::path dir = fresh_dir("analyze");
    fs::path out = fresh_dir("analyze_out");
    REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                dir.string()).exit_code == 0);
    auto r = run("analyze --input " + dir.string() + " --out " + out.string() +
                 " --which all");
    REQUIRE(r.exit_code == 0);

    SUBCASE("dwell row for the worked example") {
        std::string dwell = slurp(out / "dwell.csv");
        CHECK(dwell.starts_with("height,dwell_blocks,included_satoshis\n"));
        CHECK(dwell.find("\n496,157.197,6100000000\n") != std::string::npos);
    }
    SUBCASE("headers are pinned") {
        CHECK(slurp(out / "flow.csv")
                  .starts_with("src_height,dst_height,fraction\n"));
        CHECK(slurp(out / "extranonce.csv")
                  .starts_with("height,extranonce,spend_height\n"));
        CHECK(slurp(out / "degrees.csv")
                  .starts_with("height,signed_degree,count\n"));
        CHECK(slurp(out / "episodes.csv")
                  .starts_with("direction,signature_degree,start_height,"
                               "end_height,tx_count\n"));
    }
    SUBCASE("flow also renders the self-contained matrix view") {
        std::string html = slurp(out / "matrix.html");
        CHECK(html.find("<canvas") != std::string::npos);
        CHECK(html.find("const cells = [") != std::string::npos);
        CHECK(html.find("http") == std::string::npos); // no external assets
    }
    SUBCASE("unspent coinbases leave empty csv fields") {
        std::string x = slurp(out / "extranonce.csv");
        CHECK(x.find("\n599,599,\n") != std::string::npos);
    }
}

TEST_CASE("flow export of a coinbase-only chain is just the header") {
    fs::path dir = fresh_dir("cbonly");
    fs::path out = fresh_dir("cbonly_out");
    std::ofstream spec(dir / "only.scn");
    spec << "seed = 3\nblocks = 12\n";
    spec.close();
    REQUIRE(run("synth --spec " + (dir / "only.scn").string() + " --out " +
                dir.string()).exit_code == 0);
    REQUIRE(run("analyze --input " + dir.string() + " --out " + out.string() +
                " --which flow").exit_code == 0);
    CHECK(slurp(out / "flow.csv") == "src_height,dst_height,fraction\n");
}

TEST_CASE("json format mirrors the csv content") {
    fs::path dir = fresh_dir("json");
    fs::path out = fresh_dir("json_out");
    REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                dir.string()).exit_code == 0);
    auto ingest = run("ingest --input " + dir.string() + " --format json");
    CHECK(ingest.exit_code == 0);
    auto stats = nlohmann::json::parse(ingest.output);
    CHECK(stats["Blocks"] == 600);

    REQUIRE(run("analyze --input " + dir.string() + " --out " + out.string() +
                " --which dwell --format json").exit_code == 0);
    auto dwell = nlohmann::json::parse(slurp(out / "dwell.json"));
    bool found = false;
    for (const auto& row : dwell)
        if (row["height"] == 496) {
            CHECK(row["included_satoshis"] == 6100000000ULL);
            found = true;
        }
    CHECK(found);
}

TEST_CASE("max-height ignores blocks above the limit") {
    fs::path dir = fresh_dir("maxh");
    REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                dir.string()).exit_code == 0);
    auto r = run("ingest --input " + dir.string() + " --max-height 99");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("Blocks,100\n") != std::string::npos);
}

TEST_CASE("parallel workers parse to the same stats") {
    fs::path dir = fresh_dir("workers");
    std::ofstream spec(dir / "split.scn");
    spec << "seed = 9\nblocks = 700\nfile_size_mb = 1\n"
            "[pattern]\nkind = churn\nstart = 110\nend = 699\n"
            "degree = 2\ntxs_per_block = 6\n";
    spec.close();
    REQUIRE(run("synth --spec " + (dir / "split.scn").string() + " --out " +
                dir.string()).exit_code == 0);
    auto one = run("ingest --input " + dir.string() + " --workers 1");
    auto four = run("ingest --input " + dir.string() + " --workers 4");
    CHECK(one.exit_code == 0);
    CHECK(one.output == four.output);
}

TEST_CASE("exit codes") {
    SUBCASE("empty directory is a data error") {
        fs::path dir = fresh_dir("empty");
        auto r = run("ingest --input " + dir.string());
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("no block files") != std::string::npos);
    }
    SUBCASE("corrupt file carries offset diagnostics") {
        fs::path dir = fresh_dir("corrupt");
        REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                    dir.string()).exit_code == 0);
        // clobber a byte early in the file
        fs::path blk = dir / "blk00000.dat";
        std::string bytes = slurp(blk);
        bytes[300] ^= 0x5A;
        std::ofstream(blk, std::ios::binary).write(bytes.data(),
                                                   std::streamsize(bytes.size()));
        auto r = run("ingest --input " + dir.string());
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("offset") != std::string::npos);
    }
    SUBCASE("infeasible scenario is a scenario error") {
        fs::path dir = fresh_dir("infeasible");
        std::ofstream spec(dir / "bad.scn");
        spec << "seed = 1\nblocks = 40\n"
                "[pattern]\nkind = churn\nstart = 5\nend = 30\n"
                "degree = 2\ntxs_per_block = 1\n";
        spec.close();
        auto r = run("synth --spec " + (dir / "bad.scn").string() + " --out " +
                     dir.string());
        CHECK(r.exit_code == 3);
    }
    SUBCASE("unknown analysis name is a usage error") {
        fs::path dir = fresh_dir("usage");
        REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                    dir.string()).exit_code == 0);
        auto r = run("analyze --input " + dir.string() + " --which sideways");
        CHECK(r.exit_code == 64);
    }
    SUBCASE("unknown flag is a usage error") {
        CHECK(run("ingest --frobnicate").exit_code == 64);
        CHECK(run("").exit_code == 64);
    }
}

TEST_CASE("episodes export of a single planted worm is one data row") {
    fs::path dir = fresh_dir("worm");
    fs::path out = fresh_dir("worm_out");
    std::ofstream spec(dir / "worm.scn");
    spec << "seed = 8\nblocks = 260\n"
            "[pattern]\nkind = spam_out\nstart = 180\nend = 230\n"
            "degree = 48\ntxs_per_block = 6\n";
    spec.close();
    REQUIRE(run("synth --spec " + (dir / "worm.scn").string() + " --out " +
                dir.string()).exit_code == 0);
    REQUIRE(run("analyze --input " + dir.string() + " --out " + out.string() +
                " --which episodes").exit_code == 0);
    CHECK(slurp(out / "episodes.csv") ==
          "direction,signature_degree,start_height,end_height,tx_count\n"
          "out,48,180,230,306\n");
}

TEST_CASE("extranonce analysis writes miner runs with the configured gates") {
    fs::path dir = fresh_dir("runs");
    fs::path out = fresh_dir("runs_out");
    std::ofstream spec(dir / "lines.scn");
    spec << "seed = 4\nblocks = 300\n"
            "[miner]\nweight = 1\nincrement = 7\nreset_period = 100\n";
    spec.close();
    REQUIRE(run("synth --spec " + (dir / "lines.scn").string() + " --out " +
                dir.string()).exit_code == 0);
    REQUIRE(run("analyze --input " + dir.string() + " --out " + out.string() +
                " --which extranonce --reset-threshold 0.5").exit_code == 0);
    std::string runs = slurp(out / "runs.csv");
    CHECK(runs.starts_with("start_height,end_height,slope,residual,members\n"));
    CHECK(runs.find("\n0,99,7.000,0.000,100\n") != std::string::npos);
    CHECK(runs.find("\n100,199,7.000,0.000,100\n") != std::string::npos);
    CHECK(runs.find("\n200,299,7.000,0.000,100\n") != std::string::npos);
}

TEST_CASE("CHAINLENS_LOG=info writes progress to stderr") {
    fs::path dir = fresh_dir("log");
    REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                dir.string()).exit_code == 0);
    auto quiet = run("ingest --input " + dir.string());
    CHECK(quiet.output.find("chainlens:") == std::string::npos);
    auto chatty = run("ingest --input " + dir.string(), "CHAINLENS_LOG=info");
    CHECK(chatty.exit_code == 0);
    CHECK(chatty.output.find("chainlens:") != std::string::npos);
    CHECK(chatty.output.find("building graph over 600 blocks") !=
          std::string::npos);
}

TEST_CASE("verify subcommand re-checks the graph") {
    fs::path dir = fresh_dir("verify");
    REQUIRE(run("synth --spec " + scenario("block496_replay.scn") + " --out " +
                dir.string()).exit_code == 0);
    auto r = run("verify --input " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("ok: 600 blocks") != std::string::npos);
}
