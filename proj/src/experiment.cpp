#include "fsdlab/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fsdlab/errors.hpp"
#include "fsdlab/parallel.hpp"
#include "fsdlab/rng.hpp"

namespace fsdlab {

namespace {

using nlohmann::json;

bool same_fn(const ScoreFunctionId& a, const ScoreFunctionId& b) {
    if (a.kind != b.kind) return false;
    return a.kind != ScoreFnKind::MinK || a.k_percent == b.k_percent;
}

bool needs_lowercase(const std::vector<ScoreFunctionId>& fns) {
    return std::any_of(fns.begin(), fns.end(), [](const ScoreFunctionId& fn) {
        return fn.kind == ScoreFnKind::Lowercase;
    });
}

// Raw scores for one model: matrix[example][fn].
std::vector<std::vector<double>> model_scores(
    const LanguageModel& model, const LabeledDataset& dataset,
    const std::vector<ScoreFunctionId>& fns) {
    const bool lower = needs_lowercase(fns);
    std::vector<std::vector<double>> matrix(dataset.size());
    parallel_for(dataset.size(), [&](size_t i) {
        const std::string& text = dataset.examples[i].text;
        const TextScores ts = compute_text_scores(model, text, lower);
        matrix[i].resize(fns.size());
        for (size_t j = 0; j < fns.size(); ++j)
            matrix[i][j] = score_from(ts, text, fns[j]);
    });
    return matrix;
}

std::vector<ScoreRecord> assemble_records(
    const LabeledDataset& dataset, const std::vector<ScoreFunctionId>& fns,
    const std::vector<std::vector<double>>& base_matrix,
    const std::vector<std::vector<double>>* tuned_matrix) {
    std::vector<ScoreRecord> records;
    records.reserve(dataset.size() * fns.size());
    for (size_t i = 0; i < dataset.size(); ++i) {
        for (size_t j = 0; j < fns.size(); ++j) {
            ScoreRecord rec;
            rec.id = dataset.examples[i].id;
            rec.fn = fns[j];
            rec.base_score = base_matrix[i][j];
            if (tuned_matrix)
                rec.fsd_score = base_matrix[i][j] - (*tuned_matrix)[i][j];
            rec.label = dataset.examples[i].label;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

// Seeded subsample order over the fine-tune pool (shared by the explicit
// finetune_size option and the ablation sweep).
std::vector<size_t> subsample_order(size_t pool_size, uint64_t seed) {
    std::vector<size_t> order(pool_size);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    shuffle(order, rng);
    return order;
}

double accuracy_at(const std::vector<double>& scores,
                   const std::vector<Label>& labels, double threshold) {
    size_t correct = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const Label predicted =
            scores[i] < threshold ? Label::Member : Label::NonMember;
        if (predicted == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

EvalMeta make_meta(const LabeledDataset& dataset,
                   const LabeledDataset& test_set, size_t n_finetune,
                   const ExperimentConfig& cfg) {
    EvalMeta meta;
    meta.n_members = dataset.count(Label::Member);
    meta.n_nonmembers = dataset.count(Label::NonMember);
    meta.n_test_members = test_set.count(Label::Member);
    meta.n_test_nonmembers = test_set.count(Label::NonMember);
    meta.n_finetune = n_finetune;
    meta.split_fraction = cfg.split_fraction;
    meta.split_seed = cfg.split_seed;
    meta.compose = to_string(cfg.compose);
    meta.finetune_seed = cfg.finetune_cfg.seed;
    meta.finetune_epochs = cfg.finetune_cfg.epochs;
    meta.fpr_budget = cfg.fpr_budget;
    meta.finetune_size = cfg.finetune_size;
    return meta;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json meta_to_json(const EvalMeta& meta) {
    json j{{"n_members", meta.n_members},
           {"n_nonmembers", meta.n_nonmembers},
           {"n_test_members", meta.n_test_members},
           {"n_test_nonmembers", meta.n_test_nonmembers},
           {"n_finetune", meta.n_finetune},
           {"split_fraction", meta.split_fraction},
           {"split_seed", meta.split_seed},
           {"compose", meta.compose},
           {"finetune_seed", meta.finetune_seed},
           {"finetune_epochs", meta.finetune_epochs},
           {"fpr_budget", meta.fpr_budget}};
    if (meta.finetune_size)
        j["finetune_size"] = *meta.finetune_size;
    else
        j["finetune_size"] = nullptr;
    return j;
}

json row_to_json(const FnReport& row) {
    auto metrics = [](const MetricsRow& m) {
        return json{{"auc", m.auc},
                    {"tpr_at_5fpr", m.tpr_at_5fpr},
                    {"accuracy", m.accuracy}};
    };
    json j{{"fn", to_string(row.fn)},
           {"base", metrics(row.base)},
           {"fsd", metrics(row.fsd)}};
    if (row.fn.kind == ScoreFnKind::MinK)
        j["k"] = row.fn.k_percent;
    else
        j["k"] = nullptr;
    return j;
}

json report_to_json_value(const EvalReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows) rows.push_back(row_to_json(row));
    return json{{"meta", meta_to_json(report.meta)}, {"results", rows}};
}

} // namespace

std::vector<ScoreRecord> score_dataset(const LanguageModel& base,
                                       const LanguageModel* tuned,
                                       const LabeledDataset& dataset,
                                       const std::vector<ScoreFunctionId>& fns) {
    for (const auto& fn : fns) fn.validate();
    const auto base_matrix = model_scores(base, dataset, fns);
    if (tuned) {
        if (!base.config.same_shape(tuned->config))
            raise(ErrorKind::Config,
                  "base and fine-tuned models disagree on vocab/config shape");
        const auto tuned_matrix = model_scores(*tuned, dataset, fns);
        return assemble_records(dataset, fns, base_matrix, &tuned_matrix);
    }
    return assemble_records(dataset, fns, base_matrix, nullptr);
}

MetricsRow metrics_from_records(const std::vector<ScoreRecord>& records,
                                const ScoreFunctionId& fn, bool use_fsd,
                                double fpr_budget) {
    std::vector<double> scores;
    std::vector<Label> labels;
    for (const auto& rec : records) {
        if (!same_fn(rec.fn, fn)) continue;
        scores.push_back(use_fsd ? rec.fsd_score.value_or(rec.base_score)
                                 : rec.base_score);
        labels.push_back(rec.label);
    }
    if (scores.empty())
        raise(ErrorKind::Config,
              "no records for scoring function " + to_string(fn));
    MetricsRow row;
    row.auc = auc(scores, labels);
    row.tpr_at_5fpr = tpr_at_fpr(scores, labels, fpr_budget);
    row.accuracy = accuracy_at(scores, labels, select_threshold(scores, labels));
    return row;
}

EvalReport run_experiment(const LanguageModel& base,
                          const LabeledDataset& dataset,
                          const std::vector<ScoreFunctionId>& fns,
                          const ExperimentConfig& cfg) {
    dataset.validate();
    EvalReport report;
    if (fns.empty()) {
        report.meta.n_members = dataset.count(Label::Member);
        report.meta.n_nonmembers = dataset.count(Label::NonMember);
        return report;
    }

    FinetuneSplit split =
        build_finetune_set(dataset, cfg.split_fraction, cfg.split_seed,
                           cfg.compose);

    std::vector<std::string> ft_texts = split.finetune_texts;
    if (cfg.finetune_size) {
        if (*cfg.finetune_size > ft_texts.size())
            raise(ErrorKind::Config,
                  "finetune_size " + std::to_string(*cfg.finetune_size) +
                      " exceeds the pool of " +
                      std::to_string(ft_texts.size()));
        const auto order =
            subsample_order(ft_texts.size(), cfg.subsample_seed);
        std::vector<std::string> picked;
        picked.reserve(*cfg.finetune_size);
        for (size_t i = 0; i < *cfg.finetune_size; ++i)
            picked.push_back(ft_texts[order[i]]);
        ft_texts = std::move(picked);
    }

    std::vector<TokenSeq> ft_seqs;
    ft_seqs.reserve(ft_texts.size());
    for (const auto& text : ft_texts)
        ft_seqs.push_back(base.encode_text(text));

    const LanguageModel tuned =
        finetune(base, ft_seqs, cfg.lora, cfg.finetune_cfg,
                 {.full_finetune = cfg.full_finetune});

    const auto records = score_dataset(base, &tuned, split.test_set, fns);
    for (const auto& fn : fns) {
        FnReport row;
        row.fn = fn;
        row.base = metrics_from_records(records, fn, false, cfg.fpr_budget);
        row.fsd = metrics_from_records(records, fn, true, cfg.fpr_budget);
        report.rows.push_back(row);
    }
    report.meta = make_meta(dataset, split.test_set, ft_texts.size(), cfg);
    return report;
}

std::vector<EvalReport> ablate_data_size(const LanguageModel& base,
                                         const LabeledDataset& dataset,
                                         const std::vector<size_t>& sizes,
                                         const std::vector<ScoreFunctionId>& fns,
                                         const ExperimentConfig& cfg) {
    if (!std::is_sorted(sizes.begin(), sizes.end()))
        raise(ErrorKind::Config, "ablation sizes must be non-decreasing");
    for (const auto& fn : fns) fn.validate();
    dataset.validate();

    FinetuneSplit split =
        build_finetune_set(dataset, cfg.split_fraction, cfg.split_seed,
                           cfg.compose);
    const auto order =
        subsample_order(split.finetune_texts.size(), cfg.subsample_seed);

    // Base scores on the fixed test split are shared by every size.
    const auto base_matrix = model_scores(base, split.test_set, fns);

    std::vector<EvalReport> reports;
    reports.reserve(sizes.size());
    for (size_t size : sizes) {
        if (size > split.finetune_texts.size())
            raise(ErrorKind::Config,
                  "ablation size " + std::to_string(size) +
                      " exceeds the pool of " +
                      std::to_string(split.finetune_texts.size()));
        ExperimentConfig size_cfg = cfg;
        size_cfg.finetune_size = size;

        std::vector<ScoreRecord> records;
        if (size == 0) {
            records = assemble_records(split.test_set, fns, base_matrix,
                                       nullptr);
        } else {
            std::vector<TokenSeq> ft_seqs;
            ft_seqs.reserve(size);
            for (size_t i = 0; i < size; ++i)
                ft_seqs.push_back(
                    base.encode_text(split.finetune_texts[order[i]]));
            const LanguageModel tuned =
                finetune(base, ft_seqs, cfg.lora, cfg.finetune_cfg,
                         {.full_finetune = cfg.full_finetune});
            const auto tuned_matrix = model_scores(tuned, split.test_set, fns);
            records = assemble_records(split.test_set, fns, base_matrix,
                                       &tuned_matrix);
        }

        EvalReport report;
        for (const auto& fn : fns) {
            FnReport row;
            row.fn = fn;
            row.base =
                metrics_from_records(records, fn, false, cfg.fpr_budget);
            row.fsd = metrics_from_records(records, fn, true, cfg.fpr_budget);
            report.rows.push_back(row);
        }
        report.meta = make_meta(dataset, split.test_set, size, size_cfg);
        reports.push_back(std::move(report));
    }
    return reports;
}

ShiftStudyReport shift_study(const LanguageModel& base,
                             const LabeledDataset& dataset,
                             TransformKind transform,
                             const std::vector<ScoreFunctionId>& fns,
                             const ExperimentConfig& cfg) {
    ShiftStudyReport out;
    out.transform = transform;
    out.original = run_experiment(base, dataset, fns, cfg);
    if (transform == TransformKind::None) {
        out.transformed = out.original;
    } else {
        const LabeledDataset shifted = apply_transform(dataset, transform);
        out.transformed = run_experiment(base, shifted, fns, cfg);
    }
    return out;
}

std::string report_to_json(const EvalReport& report) {
    return report_to_json_value(report).dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "fn,k,variant,auc,tpr_at_5fpr,accuracy\n";
    for (const auto& row : report.rows) {
        const std::string k = row.fn.kind == ScoreFnKind::MinK
                                  ? format_double(row.fn.k_percent)
                                  : "";
        auto emit = [&](const char* variant, const MetricsRow& m) {
            out << to_string(row.fn) << ',' << k << ',' << variant << ','
                << format_double(m.auc) << ',' << format_double(m.tpr_at_5fpr)
                << ',' << format_double(m.accuracy) << '\n';
        };
        emit("base", row.base);
        emit("fsd", row.fsd);
    }
    return out.str();
}

std::string reports_to_json(const std::vector<EvalReport>& reports,
                            const std::vector<size_t>& sizes) {
    json arr = json::array();
    for (const auto& report : reports)
        arr.push_back(report_to_json_value(report));
    return json{{"sizes", sizes}, {"reports", arr}}.dump(2) + "\n";
}

std::string shift_report_to_json(const ShiftStudyReport& report) {
    return json{{"transform", to_string(report.transform)},
                {"original", report_to_json_value(report.original)},
                {"transformed", report_to_json_value(report.transformed)}}
               .dump(2) +
           "\n";
}

std::string records_to_csv(const std::vector<ScoreRecord>& records) {
    std::ostringstream out;
    out << "id,fn,k,base_score,fsd_score,label\n";
    for (const auto& rec : records) {
        const std::string k = rec.fn.kind == ScoreFnKind::MinK
                                  ? format_double(rec.fn.k_percent)
                                  : "";
        out << rec.id << ',' << to_string(rec.fn) << ',' << k << ','
            << format_double(rec.base_score) << ','
            << (rec.fsd_score ? format_double(*rec.fsd_score) : std::string())
            << ',' << label_to_int(rec.label) << '\n';
    }
    return out.str();
}

std::vector<ScoreRecord> records_from_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line))
        raise(ErrorKind::Parse, "scores CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,fn,k,base_score,fsd_score,label")
        raise(ErrorKind::Parse, "scores CSV header mismatch: '" + line + "'");

    std::vector<ScoreRecord> records;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        // a trailing empty field is legal (fsd_score blank)
        if (fields.size() == 5) fields.push_back("");
        if (fields.size() != 6)
            raise(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                        ": expected 6 CSV fields");
        ScoreRecord rec;
        rec.id = fields[0];
        rec.fn.kind = fn_kind_from_name(fields[1]);
        if (rec.fn.kind == ScoreFnKind::MinK && fields[2].empty())
            raise(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                        ": min_k row is missing k");
        try {
            if (rec.fn.kind == ScoreFnKind::MinK)
                rec.fn.k_percent = std::stod(fields[2]);
            rec.base_score = std::stod(fields[3]);
            if (!fields[4].empty()) rec.fsd_score = std::stod(fields[4]);
        } catch (const std::exception&) {
            raise(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                        ": malformed numeric value");
        }
        if (fields[5] == "1")
            rec.label = Label::Member;
        else if (fields[5] == "0")
            rec.label = Label::NonMember;
        else
            raise(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                        ": label must be 0 or 1");
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace fsdlab
