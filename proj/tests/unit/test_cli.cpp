#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "fsdlab/corpus.hpp"
#include "fsdlab/experiment.hpp"

using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args) {
    const std::string out_path = "/tmp/fsdlab_cli_stdout.txt";
    const std::string err_path = "/tmp/fsdlab_cli_stderr.txt";
    const std::string cmd = std::string(FSDLAB_CLI_PATH) + " " + args + " >" +
                            out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

const std::string kDir = "/tmp/fsdlab_cli_test";

void write_smoke_config(const std::string& path,
                        const std::map<std::string, json>& patches = {}) {
    json cfg = {
        {"model",
         {{"embed_dim", 16},
          {"num_layers", 1},
          {"num_heads", 2},
          {"feedforward_dim", 32},
          {"context_len", 129},
          {"seed", 5}}},
        {"train",
         {{"epochs", 2}, {"batch_size", 8}, {"initial_lr", 1e-3}, {"seed", 5}}},
        {"finetune",
         {{"epochs", 2}, {"batch_size", 8}, {"initial_lr", 1e-3}, {"seed", 6}}},
        {"corpus",
         {{"n_members", 48},
          {"n_nonmembers", 32},
          {"min_len", 64},
          {"max_len", 120},
          {"seed", 9}}},
        {"split", {{"fraction", 0.3}, {"seed", 42}}},
        {"scoring",
         {{"functions", {"perplexity", "min_k", "zlib", "lowercase"}},
          {"k", 20.0}}},
        {"eval", {{"fpr_budget", 0.05}}},
    };
    for (const auto& [pointer, value] : patches)
        cfg[json::json_pointer(pointer)] = value;
    std::ofstream(path) << cfg.dump(2);
}

} // namespace

TEST_CASE("cli pipeline: gen, train, finetune, score, eval") {
    std::system(("rm -rf " + kDir + " && mkdir -p " + kDir).c_str());
    const std::string cfg = kDir + "/cfg.json";
    write_smoke_config(cfg);

    auto gen = run_cli("gen --config " + cfg + " --out " + kDir + "/ds.jsonl");
    INFO(gen.err);
    REQUIRE(gen.code == 0);
    fsdlab::LabeledDataset ds = fsdlab::load_jsonl(kDir + "/ds.jsonl");
    CHECK(ds.size() == 80);

    auto train = run_cli("train --config " + cfg + " --data " + kDir +
                         "/ds.jsonl --out " + kDir + "/base.bin");
    INFO(train.err);
    REQUIRE(train.code == 0);
    CHECK(train.out.find("epoch 1") != std::string::npos);

    auto ft = run_cli("finetune --config " + cfg + " --model " + kDir +
                      "/base.bin --data " + kDir + "/ds.jsonl --out " + kDir +
                      "/tuned.bin");
    INFO(ft.err);
    REQUIRE(ft.code == 0);

    auto sc = run_cli("score --config " + cfg + " --model " + kDir +
                      "/base.bin --tuned " + kDir + "/tuned.bin --data " +
                      kDir + "/ds.jsonl --out " + kDir + "/scores.csv");
    INFO(sc.err);
    REQUIRE(sc.code == 0);
    const auto records = fsdlab::records_from_csv(slurp(kDir + "/scores.csv"));
    CHECK(records.size() == 80 * 4);

    auto ev = run_cli("eval --scores " + kDir + "/scores.csv --report " +
                      kDir + "/report.json --csv " + kDir + "/report.csv");
    INFO(ev.err);
    REQUIRE(ev.code == 0);
    const json report = json::parse(slurp(kDir + "/report.json"));
    CHECK(report.at("results").size() == 4);
    const std::string report_csv = slurp(kDir + "/report.csv");
    CHECK(report_csv.rfind("fn,k,variant,auc,tpr_at_5fpr,accuracy\n", 0) == 0);
}

TEST_CASE("cli score with k=100 reproduces the log-perplexity identity") {
    const std::string cfg = kDir + "/cfg.json";
    auto sc = run_cli("score --config " + cfg + " --model " + kDir +
                      "/base.bin --data " + kDir + "/ds.jsonl --out " + kDir +
                      "/scores100.csv --k 100");
    INFO(sc.err);
    REQUIRE(sc.code == 0);
    const auto records =
        fsdlab::records_from_csv(slurp(kDir + "/scores100.csv"));
    std::map<std::string, double> ppl, mink;
    for (const auto& rec : records) {
        if (rec.fn.kind == fsdlab::ScoreFnKind::Perplexity)
            ppl[rec.id] = rec.base_score;
        if (rec.fn.kind == fsdlab::ScoreFnKind::MinK)
            mink[rec.id] = rec.base_score;
    }
    REQUIRE(ppl.size() == 80);
    REQUIRE(mink.size() == 80);
    for (const auto& [id, value] : ppl)
        CHECK(std::fabs(mink.at(id) - std::log(value)) < 1e-9);
}

TEST_CASE("cli end-to-end eval with a no-op finetune degenerates FSD") {
    const std::string cfg0 = kDir + "/cfg_epochs0.json";
    write_smoke_config(cfg0, {{"/finetune/epochs", 0}});
    auto ev = run_cli("eval --config " + cfg0 + " --model " + kDir +
                      "/base.bin --data " + kDir + "/ds.jsonl --report " +
                      kDir + "/degenerate.json");
    INFO(ev.err);
    REQUIRE(ev.code == 0);
    const json report = json::parse(slurp(kDir + "/degenerate.json"));
    for (const auto& row : report.at("results"))
        CHECK(row.at("fsd").at("auc").get<double>() == 0.5);
}

TEST_CASE("cli reports missing files as io errors with machine-readable json") {
    auto result = run_cli("train --config /nonexistent.json --data x --out y");
    CHECK(result.code == 3);
    const json err = json::parse(result.err);
    CHECK(err.at("error").at("kind") == "io");
    CHECK(err.at("error").at("code") == 3);
}

TEST_CASE("cli rejects configs with unknown keys") {
    const std::string bad = kDir + "/bad.json";
    write_smoke_config(bad, {{"/corpus/typo_key", 1}});
    auto result = run_cli("gen --config " + bad + " --out " + kDir + "/x.jsonl");
    CHECK(result.code == 2);
    const json err = json::parse(result.err);
    CHECK(err.at("error").at("kind") == "config");
    CHECK(std::string(err.at("error").at("message")).find("typo_key") !=
          std::string::npos);
}

TEST_CASE("cli requires explicit seeds") {
    const std::string cfg = kDir + "/no_seed.json";
    write_smoke_config(cfg);
    json patched = json::parse(slurp(cfg));
    patched["corpus"].erase("seed");
    std::ofstream(cfg) << patched.dump();
    auto result = run_cli("gen --config " + cfg + " --out " + kDir + "/x.jsonl");
    CHECK(result.code == 2);
    CHECK(result.err.find("seed") != std::string::npos);
}

TEST_CASE("cli flags degenerate score files") {
    const std::string path = kDir + "/single_class.csv";
    std::ofstream(path) << "id,fn,k,base_score,fsd_score,label\n"
                           "0,perplexity,,1.5,,1\n"
                           "1,perplexity,,2.5,,1\n";
    auto result = run_cli("eval --scores " + path + " --report " + kDir +
                          "/r.json");
    CHECK(result.code == 5);
    const json err = json::parse(result.err);
    CHECK(err.at("error").at("kind") == "degenerate_input");
}

TEST_CASE("cli corrupt checkpoint is a format error") {
    const std::string path = kDir + "/broken.bin";
    std::ofstream(path, std::ios::binary) << "XXXXXX not a checkpoint";
    auto result = run_cli("score --model " + path + " --data " + kDir +
                          "/ds.jsonl --out " + kDir + "/s.csv");
    CHECK(result.code == 4);
}

TEST_CASE("cli usage errors and help text") {
    auto none = run_cli("");
    CHECK(none.code != 0);

    auto help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(help.out.find("Exit codes") != std::string::npos);
}
