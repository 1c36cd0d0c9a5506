// fsdlab: corpus generation, training, fine-tuning, scoring and evaluation
// for membership detection experiments, driven by a single JSON config.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fsdlab/checkpoint.hpp"
#include "fsdlab/corpus.hpp"
#include "fsdlab/errors.hpp"
#include "fsdlab/experiment.hpp"
#include "fsdlab/fsd.hpp"
#include "fsdlab/model.hpp"
#include "fsdlab/rng.hpp"
#include "fsdlab/scoring.hpp"
#include "fsdlab/train.hpp"

using nlohmann::json;
using namespace fsdlab;

namespace {

constexpr const char* kExitCodeHelp =
    "Exit codes: 0 success, 1 usage, 2 config validation, 3 file I/O, "
    "4 data/checkpoint format, 5 degenerate or unusable data, 6 numeric "
    "failure.";

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::EmptyFinetuneSet:
        return 2;
    case ErrorKind::Io:
        return 3;
    case ErrorKind::Parse:
    case ErrorKind::BadMagic:
    case ErrorKind::BadVersion:
    case ErrorKind::Truncated:
    case ErrorKind::ShapeMismatch:
        return 4;
    case ErrorKind::EmptyInput:
    case ErrorKind::InsufficientTokens:
    case ErrorKind::SequenceTooLong:
    case ErrorKind::DegenerateInput:
        return 5;
    case ErrorKind::NumericFailure:
        return 6;
    }
    return 6;
}

void reject_unknown_keys(const json& obj, const char* section,
                         std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) known = true;
        if (!known)
            raise(ErrorKind::Config, std::string("unknown key '") + it.key() +
                                         "' in config section '" + section +
                                         "'");
    }
}

template <typename T>
T require_field(const json& obj, const char* section, const char* key) {
    if (!obj.contains(key))
        raise(ErrorKind::Config, std::string("config section '") + section +
                                     "' requires '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        raise(ErrorKind::Config, std::string("config field '") + section +
                                     "." + key + "' has the wrong type");
    }
}

template <typename T>
T optional_field(const json& obj, const char* section, const char* key,
                 T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        raise(ErrorKind::Config, std::string("config field '") + section +
                                     "." + key + "' has the wrong type");
    }
}

struct SplitSection {
    double fraction = 0.30;
    uint64_t seed = 42;
    FinetuneComposition compose = FinetuneComposition::NonMembersOnly;
    uint64_t subsample_seed = 42;
};

struct FinetuneSection {
    TrainConfig cfg;
    AdapterSpec lora;
    bool full = false;
    std::optional<size_t> size;
};

struct ScoringSection {
    std::vector<std::string> functions = {"perplexity", "min_k", "zlib",
                                          "lowercase"};
    double k = 20.0;
};

struct RunConfig {
    json raw;
    std::string path;

    bool has(const char* section) const { return raw.contains(section); }

    const json& section(const char* name) const {
        if (!raw.contains(name))
            raise(ErrorKind::Config, std::string("config is missing the '") +
                                         name + "' section");
        if (!raw.at(name).is_object())
            raise(ErrorKind::Config, std::string("config section '") + name +
                                         "' must be a JSON object");
        return raw.at(name);
    }

    ModelConfig model() const {
        const json& j = section("model");
        reject_unknown_keys(j, "model",
                            {"vocab_size", "context_len", "embed_dim",
                             "num_layers", "num_heads", "feedforward_dim",
                             "seed"});
        ModelConfig cfg;
        cfg.vocab_size = optional_field<int32_t>(j, "model", "vocab_size", 259);
        cfg.context_len =
            optional_field<int32_t>(j, "model", "context_len", 257);
        cfg.embed_dim = optional_field<int32_t>(j, "model", "embed_dim", 64);
        cfg.num_layers = optional_field<int32_t>(j, "model", "num_layers", 2);
        cfg.num_heads = optional_field<int32_t>(j, "model", "num_heads", 4);
        cfg.feedforward_dim =
            optional_field<int32_t>(j, "model", "feedforward_dim", 256);
        cfg.seed = require_field<uint64_t>(j, "model", "seed");
        cfg.validate();
        return cfg;
    }

    TrainConfig train_like(const char* name,
                           std::initializer_list<const char*> allowed) const {
        const json& j = section(name);
        reject_unknown_keys(j, name, allowed);
        TrainConfig cfg;
        cfg.epochs = optional_field<int32_t>(j, name, "epochs", 3);
        cfg.batch_size = optional_field<int32_t>(j, name, "batch_size", 8);
        cfg.initial_lr = optional_field<double>(j, name, "initial_lr", 1e-3);
        cfg.clip_norm = optional_field<double>(j, name, "clip_norm", 1.0);
        cfg.seed = require_field<uint64_t>(j, name, "seed");
        cfg.validate();
        return cfg;
    }

    TrainConfig train() const {
        return train_like("train", {"epochs", "batch_size", "initial_lr",
                                    "seed", "clip_norm"});
    }

    FinetuneSection finetune() const {
        const json& j = section("finetune");
        FinetuneSection out;
        out.cfg = train_like("finetune",
                             {"epochs", "batch_size", "initial_lr", "seed",
                              "clip_norm", "rank", "alpha", "targets",
                              "init_std", "full", "size"});
        out.lora.rank = optional_field<int32_t>(j, "finetune", "rank", 8);
        out.lora.alpha = optional_field<double>(j, "finetune", "alpha", 16.0);
        out.lora.targets = optional_field<std::vector<std::string>>(
            j, "finetune", "targets", {"attn_q", "attn_v"});
        out.lora.init_std =
            optional_field<double>(j, "finetune", "init_std", 0.02);
        out.lora.validate();
        out.full = optional_field<bool>(j, "finetune", "full", false);
        if (j.contains("size"))
            out.size = require_field<uint64_t>(j, "finetune", "size");
        return out;
    }

    CorpusConfig corpus() const {
        const json& j = section("corpus");
        reject_unknown_keys(j, "corpus",
                            {"n_members", "n_nonmembers", "template_pool",
                             "member_years", "nonmember_years",
                             "temporal_shift", "min_len", "max_len", "seed"});
        CorpusConfig cfg;
        cfg.n_members =
            optional_field<uint64_t>(j, "corpus", "n_members", 2000);
        cfg.n_nonmembers =
            optional_field<uint64_t>(j, "corpus", "n_nonmembers", 400);
        cfg.template_pool = optional_field<std::string>(
            j, "corpus", "template_pool", "events");
        auto years = [&](const char* key, YearRange fallback) {
            if (!j.contains(key)) return fallback;
            const auto v = require_field<std::vector<int>>(j, "corpus", key);
            if (v.size() != 2)
                raise(ErrorKind::Config,
                      std::string("corpus.") + key + " must be [lo, hi]");
            return YearRange{v[0], v[1]};
        };
        cfg.member_years = years("member_years", {2010, 2022});
        cfg.nonmember_years = years("nonmember_years", {2023, 2024});
        cfg.temporal_shift =
            optional_field<bool>(j, "corpus", "temporal_shift", true);
        cfg.min_len = optional_field<uint64_t>(j, "corpus", "min_len", 64);
        cfg.max_len = optional_field<uint64_t>(j, "corpus", "max_len", 224);
        cfg.seed = require_field<uint64_t>(j, "corpus", "seed");
        cfg.validate();
        return cfg;
    }

    SplitSection split() const {
        const json& j = section("split");
        reject_unknown_keys(j, "split",
                            {"fraction", "seed", "compose", "subsample_seed"});
        SplitSection out;
        out.fraction = optional_field<double>(j, "split", "fraction", 0.30);
        out.seed = require_field<uint64_t>(j, "split", "seed");
        out.compose = composition_from_name(
            optional_field<std::string>(j, "split", "compose", "non"));
        out.subsample_seed =
            optional_field<uint64_t>(j, "split", "subsample_seed", 42);
        return out;
    }

    ScoringSection scoring() const {
        ScoringSection out;
        if (!has("scoring")) return out;
        const json& j = section("scoring");
        reject_unknown_keys(j, "scoring", {"functions", "k"});
        out.functions = optional_field<std::vector<std::string>>(
            j, "scoring", "functions", out.functions);
        out.k = optional_field<double>(j, "scoring", "k", 20.0);
        return out;
    }

    double fpr_budget() const {
        if (!has("eval")) return 0.05;
        const json& j = section("eval");
        reject_unknown_keys(j, "eval", {"fpr_budget"});
        return optional_field<double>(j, "eval", "fpr_budget", 0.05);
    }
};

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open config '" + path + "'");
    RunConfig cfg;
    cfg.path = path;
    try {
        in >> cfg.raw;
    } catch (const json::exception& e) {
        raise(ErrorKind::Parse,
              "config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!cfg.raw.is_object())
        raise(ErrorKind::Config, "config root must be a JSON object");
    reject_unknown_keys(cfg.raw, "<root>",
                        {"model", "train", "finetune", "corpus", "split",
                         "scoring", "eval"});
    return cfg;
}

std::vector<ScoreFunctionId> resolve_functions(const ScoringSection& scoring,
                                               std::optional<double> k_flag) {
    const double k = k_flag.value_or(scoring.k);
    std::vector<ScoreFunctionId> fns;
    for (const auto& name : scoring.functions) {
        ScoreFunctionId fn;
        fn.kind = fn_kind_from_name(name);
        fn.k_percent = k;
        fn.validate();
        fns.push_back(fn);
    }
    if (fns.empty())
        raise(ErrorKind::Config, "scoring.functions must not be empty");
    return fns;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << content;
    out.close();
    if (!out) raise(ErrorKind::Io, "failed to finish writing '" + path + "'");
}

std::vector<TokenSeq> encode_texts(const LanguageModel& model,
                                   const std::vector<std::string>& texts) {
    std::vector<TokenSeq> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(model.encode_text(text));
    return out;
}

std::vector<std::string> apply_subsample(std::vector<std::string> texts,
                                         std::optional<size_t> size,
                                         uint64_t seed) {
    if (!size) return texts;
    if (*size > texts.size())
        raise(ErrorKind::Config,
              "finetune.size " + std::to_string(*size) +
                  " exceeds the available pool of " +
                  std::to_string(texts.size()));
    std::vector<size_t> order(texts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    shuffle(order, rng);
    std::vector<std::string> picked;
    picked.reserve(*size);
    for (size_t i = 0; i < *size; ++i) picked.push_back(texts[order[i]]);
    return picked;
}

ExperimentConfig experiment_config(const RunConfig& cfg) {
    ExperimentConfig out;
    const SplitSection split = cfg.split();
    const FinetuneSection ft = cfg.finetune();
    out.split_fraction = split.fraction;
    out.split_seed = split.seed;
    out.compose = split.compose;
    out.subsample_seed = split.subsample_seed;
    out.lora = ft.lora;
    out.finetune_cfg = ft.cfg;
    out.full_finetune = ft.full;
    out.finetune_size = ft.size;
    out.fpr_budget = cfg.fpr_budget();
    return out;
}

// ---- commands ----

void cmd_gen(const std::string& config_path, const std::string& out_path) {
    RunConfig cfg = load_run_config(config_path);
    LabeledDataset ds = generate(cfg.corpus());
    save_jsonl(ds, out_path);
    std::cout << "wrote " << ds.size() << " examples ("
              << ds.count(Label::Member) << " members, "
              << ds.count(Label::NonMember) << " non-members) to " << out_path
              << "\n";
}

void cmd_train(const std::string& config_path, const std::string& data_path,
               const std::string& out_path) {
    RunConfig cfg = load_run_config(config_path);
    const ModelConfig model_cfg = cfg.model();
    const TrainConfig train_cfg = cfg.train();

    LabeledDataset ds = load_jsonl(data_path);
    ds.validate();
    const auto member_texts = ds.texts_with(Label::Member);
    if (member_texts.empty())
        raise(ErrorKind::Config,
              "training corpus has no member texts to pretrain on");

    LanguageModel model = init_model(model_cfg);
    const auto corpus = encode_texts(model, member_texts);
    TrainResult result = train(model, corpus, train_cfg);
    save_model(model, out_path);

    std::cout << "trained on " << corpus.size() << " member texts for "
              << train_cfg.epochs << " epochs\n";
    for (size_t i = 0; i < result.loss_history.size(); ++i)
        std::cout << "epoch " << i << " mean loss " << result.loss_history[i]
                  << "\n";
    std::cout << "saved " << out_path << "\n";
}

void cmd_finetune(const std::string& config_path,
                  const std::string& model_path, const std::string& data_path,
                  const std::string& out_path, const std::string& compose_flag,
                  const std::string& ft_file) {
    RunConfig cfg = load_run_config(config_path);
    const FinetuneSection ft = cfg.finetune();

    LanguageModel base = load_model(model_path);
    std::vector<std::string> texts;
    if (!ft_file.empty()) {
        // Explicit fine-tune file: every text is used, labels are ignored
        // (the method is self-supervised).
        LabeledDataset explicit_set = load_jsonl(ft_file);
        for (const auto& ex : explicit_set.examples) texts.push_back(ex.text);
        if (texts.empty())
            raise(ErrorKind::EmptyFinetuneSet,
                  "explicit fine-tune file has no examples");
    } else {
        SplitSection split = cfg.split();
        if (!compose_flag.empty())
            split.compose = composition_from_name(compose_flag);
        LabeledDataset ds = load_jsonl(data_path);
        ds.validate();
        FinetuneSplit result =
            build_finetune_set(ds, split.fraction, split.seed, split.compose);
        texts = apply_subsample(result.finetune_texts, ft.size,
                                split.subsample_seed);
    }

    LanguageModel tuned = finetune(base, encode_texts(base, texts), ft.lora,
                                   ft.cfg, {.full_finetune = ft.full});
    save_model(tuned, out_path);
    std::cout << "fine-tuned on " << texts.size() << " texts ("
              << (ft.full ? "full" : "adapters") << "); saved " << out_path
              << "\n";
}

void cmd_score(const std::string& config_path, const std::string& model_path,
               const std::string& tuned_path, const std::string& data_path,
               const std::string& out_path, std::optional<double> k_flag) {
    ScoringSection scoring;
    if (!config_path.empty())
        scoring = load_run_config(config_path).scoring();
    const auto fns = resolve_functions(scoring, k_flag);

    LanguageModel base = load_model(model_path);
    std::optional<LanguageModel> tuned;
    if (!tuned_path.empty()) tuned = load_model(tuned_path);

    LabeledDataset ds = load_jsonl(data_path);
    ds.validate();
    const auto records =
        score_dataset(base, tuned ? &*tuned : nullptr, ds, fns);
    write_text_file(out_path, records_to_csv(records));
    std::cout << "scored " << ds.size() << " examples with " << fns.size()
              << " functions -> " << out_path << "\n";
}

EvalReport report_from_records(const std::vector<ScoreRecord>& records,
                               double fpr_budget) {
    if (records.empty())
        raise(ErrorKind::DegenerateInput, "scores file has no records");
    std::vector<ScoreFunctionId> fns;
    for (const auto& rec : records) {
        bool seen = false;
        for (const auto& fn : fns)
            if (fn.kind == rec.fn.kind && (fn.kind != ScoreFnKind::MinK ||
                                           fn.k_percent == rec.fn.k_percent))
                seen = true;
        if (!seen) fns.push_back(rec.fn);
    }
    EvalReport report;
    for (const auto& fn : fns) {
        FnReport row;
        row.fn = fn;
        row.base = metrics_from_records(records, fn, false, fpr_budget);
        row.fsd = metrics_from_records(records, fn, true, fpr_budget);
        report.rows.push_back(row);
    }
    report.meta.fpr_budget = fpr_budget;
    for (const auto& rec : records) {
        if (rec.fn.kind != fns[0].kind ||
            (fns[0].kind == ScoreFnKind::MinK &&
             rec.fn.k_percent != fns[0].k_percent))
            continue;
        if (rec.label == Label::Member)
            ++report.meta.n_test_members;
        else
            ++report.meta.n_test_nonmembers;
    }
    return report;
}

void cmd_eval(const std::string& config_path, const std::string& scores_path,
              const std::string& model_path, const std::string& data_path,
              const std::string& report_path, const std::string& csv_path,
              const std::string& ablate_sizes, const std::string& shift,
              std::optional<double> k_flag) {
    if (!scores_path.empty()) {
        std::ifstream in(scores_path, std::ios::binary);
        if (!in)
            raise(ErrorKind::Io, "cannot open scores '" + scores_path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        double budget = 0.05;
        if (!config_path.empty())
            budget = load_run_config(config_path).fpr_budget();
        EvalReport report =
            report_from_records(records_from_csv(ss.str()), budget);
        write_text_file(report_path, report_to_json(report));
        if (!csv_path.empty())
            write_text_file(csv_path, report_to_csv(report));
        std::cout << "evaluated " << report.rows.size()
                  << " scoring functions from " << scores_path << "\n";
        return;
    }

    if (config_path.empty())
        raise(ErrorKind::Config, "end-to-end eval requires --config");
    if (model_path.empty() || data_path.empty())
        raise(ErrorKind::Config,
              "end-to-end eval requires --model and --data");

    RunConfig cfg = load_run_config(config_path);
    const auto fns = resolve_functions(cfg.scoring(), k_flag);
    const ExperimentConfig exp_cfg = experiment_config(cfg);

    LanguageModel base = load_model(model_path);
    LabeledDataset ds = load_jsonl(data_path);
    ds.validate();

    if (!ablate_sizes.empty()) {
        std::vector<size_t> sizes;
        std::stringstream ss(ablate_sizes);
        std::string piece;
        while (std::getline(ss, piece, ',')) {
            try {
                sizes.push_back(std::stoul(piece));
            } catch (const std::exception&) {
                raise(ErrorKind::Config,
                      "bad --ablate-sizes entry '" + piece + "'");
            }
        }
        auto reports = ablate_data_size(base, ds, sizes, fns, exp_cfg);
        write_text_file(report_path, reports_to_json(reports, sizes));
        if (!csv_path.empty()) {
            std::ostringstream csv;
            csv << "size,fn,k,variant,auc,tpr_at_5fpr,accuracy\n";
            for (size_t i = 0; i < reports.size(); ++i) {
                std::istringstream rows(report_to_csv(reports[i]));
                std::string line;
                std::getline(rows, line); // drop the per-report header
                while (std::getline(rows, line))
                    csv << sizes[i] << ',' << line << '\n';
            }
            write_text_file(csv_path, csv.str());
        }
        std::cout << "ablation over " << sizes.size() << " sizes -> "
                  << report_path << "\n";
        return;
    }

    if (!shift.empty() && shift != "none") {
        const TransformKind kind = transform_from_name(shift);
        ShiftStudyReport study = shift_study(base, ds, kind, fns, exp_cfg);
        write_text_file(report_path, shift_report_to_json(study));
        if (!csv_path.empty()) {
            std::ostringstream csv;
            csv << "transform,fn,k,variant,auc,tpr_at_5fpr,accuracy\n";
            auto emit = [&](const char* tag, const EvalReport& report) {
                std::istringstream rows(report_to_csv(report));
                std::string line;
                std::getline(rows, line);
                while (std::getline(rows, line))
                    csv << tag << ',' << line << '\n';
            };
            emit("none", study.original);
            emit(to_string(kind), study.transformed);
            write_text_file(csv_path, csv.str());
        }
        std::cout << "shift study (" << shift << ") -> " << report_path
                  << "\n";
        return;
    }

    EvalReport report = run_experiment(base, ds, fns, exp_cfg);
    write_text_file(report_path, report_to_json(report));
    if (!csv_path.empty()) write_text_file(csv_path, report_to_csv(report));
    std::cout << "evaluated " << report.rows.size()
              << " scoring functions -> " << report_path << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "fsdlab: membership detection laboratory for tiny language models"};
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);

    unsigned threads = 0;
    app.add_option("--threads", threads,
                   "worker threads (default: hardware, or FSDLAB_THREADS)");

    std::string config, data, out, model_path, tuned, ft_file, compose;
    std::string scores, report_path, csv_path, ablate, shift;
    std::optional<double> k_flag;

    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
    gen->add_option("--config", config, "run config JSON")->required();
    gen->add_option("--out", out, "output dataset JSONL")->required();

    auto* train_cmd =
        app.add_subcommand("train", "pretrain a base model on member texts");
    train_cmd->add_option("--config", config, "run config JSON")->required();
    train_cmd->add_option("--data", data, "dataset JSONL")->required();
    train_cmd->add_option("--out", out, "output model checkpoint")->required();

    auto* ft = app.add_subcommand(
        "finetune", "fine-tune a base model on split non-members");
    ft->add_option("--config", config, "run config JSON")->required();
    ft->add_option("--model", model_path, "base model checkpoint")->required();
    ft->add_option("--data", data, "dataset JSONL (for the split protocol)");
    ft->add_option("--ft-file", ft_file,
                   "explicit fine-tune JSONL (bypasses the split)");
    ft->add_option("--compose", compose,
                   "fine-tune composition: non|mem|all (overrides config)");
    ft->add_option("--out", out, "output tuned checkpoint")->required();

    auto* score_cmd =
        app.add_subcommand("score", "emit per-example score records");
    score_cmd->add_option("--config", config, "run config JSON");
    score_cmd->add_option("--model", model_path, "base model checkpoint")
        ->required();
    score_cmd->add_option("--tuned", tuned, "fine-tuned checkpoint");
    score_cmd->add_option("--data", data, "dataset JSONL")->required();
    score_cmd->add_option("--out", out, "output scores CSV")->required();
    score_cmd->add_option("--k", k_flag, "min_k percentage in (0, 100]");

    auto* eval_cmd = app.add_subcommand(
        "eval", "compute metrics from scores or run end-to-end");
    eval_cmd->add_option("--config", config, "run config JSON");
    eval_cmd->add_option("--scores", scores, "scores CSV (metrics-only mode)");
    eval_cmd->add_option("--model", model_path,
                         "base model checkpoint (end-to-end mode)");
    eval_cmd->add_option("--data", data, "dataset JSONL (end-to-end mode)");
    eval_cmd->add_option("--report", report_path, "output report JSON")
        ->required();
    eval_cmd->add_option("--csv", csv_path, "output report CSV");
    eval_cmd->add_option("--ablate-sizes", ablate,
                         "comma-separated fine-tune sizes, e.g. 0,25,50,100");
    eval_cmd->add_option("--shift", shift,
                         "temporal-shift study: none|deletion|replacement");
    eval_cmd->add_option("--k", k_flag, "min_k percentage in (0, 100]");

    CLI11_PARSE(app, argc, argv);

    if (threads > 0)
        setenv("FSDLAB_THREADS", std::to_string(threads).c_str(), 1);

    try {
        if (*gen) cmd_gen(config, out);
        if (*train_cmd) cmd_train(config, data, out);
        if (*ft) {
            if (ft_file.empty() && data.empty())
                raise(ErrorKind::Config,
                      "finetune needs --data (split protocol) or --ft-file");
            cmd_finetune(config, model_path, data, out, compose, ft_file);
        }
        if (*score_cmd)
            cmd_score(config, model_path, tuned, data, out, k_flag);
        if (*eval_cmd)
            cmd_eval(config, scores, model_path, data, report_path, csv_path,
                     ablate, shift, k_flag);
    } catch (const Error& e) {
        const int code = exit_code_for(e.kind());
        json err{{"error",
                  {{"code", code},
                   {"kind", to_string(e.kind())},
                   {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return code;
    } catch (const std::exception& e) {
        json err{{"error",
                  {{"code", 6}, {"kind", "internal"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 6;
    }
    return 0;
}
