#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fsdlab/corpus.hpp"
#include "fsdlab/dataset.hpp"
#include "fsdlab/fsd.hpp"
#include "fsdlab/metrics.hpp"
#include "fsdlab/model.hpp"
#include "fsdlab/scoring.hpp"
#include "fsdlab/train.hpp"

namespace fsdlab {

struct ScoreRecord {
    std::string id;
    ScoreFunctionId fn;
    double base_score = 0.0;
    std::optional<double> fsd_score; // present iff a tuned model was used
    Label label = Label::NonMember;
};

struct MetricsRow {
    double auc = 0.0;
    double tpr_at_5fpr = 0.0;
    double accuracy = 0.0; // at the best threshold on the scored set
};

struct FnReport {
    ScoreFunctionId fn;
    MetricsRow base;
    MetricsRow fsd;
};

struct EvalMeta {
    size_t n_members = 0;
    size_t n_nonmembers = 0;
    size_t n_test_members = 0;
    size_t n_test_nonmembers = 0;
    size_t n_finetune = 0;
    double split_fraction = 0.0;
    uint64_t split_seed = 0;
    std::string compose;
    uint64_t finetune_seed = 0;
    int32_t finetune_epochs = 0;
    double fpr_budget = 0.05;
    std::optional<size_t> finetune_size; // subsample cap, if any
};

struct EvalReport {
    std::vector<FnReport> rows;
    EvalMeta meta;
};

struct ExperimentConfig {
    double split_fraction = 0.30;
    uint64_t split_seed = 42;
    FinetuneComposition compose = FinetuneComposition::NonMembersOnly;
    AdapterSpec lora;
    TrainConfig finetune_cfg;
    bool full_finetune = false;
    double fpr_budget = 0.05;
    // When set, the fine-tuning set is a seeded subsample of this many
    // examples from the split's pool (the Fig. 3 mechanism).
    std::optional<size_t> finetune_size;
    uint64_t subsample_seed = 42;
};

// Scores every test example under the model(s); entry order matches
// (example, fn) iteration order. tuned may be null (base-only records).
std::vector<ScoreRecord> score_dataset(const LanguageModel& base,
                                       const LanguageModel* tuned,
                                       const LabeledDataset& dataset,
                                       const std::vector<ScoreFunctionId>& fns);

// Metrics for one scoring function from its records; use_fsd selects the
// deviation column. Records lacking an fsd score fall back to base.
MetricsRow metrics_from_records(const std::vector<ScoreRecord>& records,
                                const ScoreFunctionId& fn, bool use_fsd,
                                double fpr_budget);

// Full pipeline: split, fine-tune, score the test split under both models,
// assemble Base and +FSD metrics per scoring function. Seed-deterministic.
EvalReport run_experiment(const LanguageModel& base,
                          const LabeledDataset& dataset,
                          const std::vector<ScoreFunctionId>& fns,
                          const ExperimentConfig& cfg);

// Fig. 3 sweep: one report per fine-tuning-set size on a fixed test split.
// Size 0 skips fine-tuning; its +FSD columns equal the Base columns.
std::vector<EvalReport> ablate_data_size(const LanguageModel& base,
                                         const LabeledDataset& dataset,
                                         const std::vector<size_t>& sizes,
                                         const std::vector<ScoreFunctionId>& fns,
                                         const ExperimentConfig& cfg);

struct ShiftStudyReport {
    TransformKind transform = TransformKind::None;
    EvalReport original;
    EvalReport transformed;
};

// Reruns the experiment on the transformed dataset alongside the original.
ShiftStudyReport shift_study(const LanguageModel& base,
                             const LabeledDataset& dataset,
                             TransformKind transform,
                             const std::vector<ScoreFunctionId>& fns,
                             const ExperimentConfig& cfg);

// Canonical JSON (sorted keys) and flat CSV with fixed column order
// "fn,k,variant,auc,tpr_at_5fpr,accuracy".
std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string reports_to_json(const std::vector<EvalReport>& reports,
                            const std::vector<size_t>& sizes);
std::string shift_report_to_json(const ShiftStudyReport& report);

// scores.csv surface: fixed header "id,fn,k,base_score,fsd_score,label".
std::string records_to_csv(const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> records_from_csv(const std::string& csv_text);

} // namespace fsdlab
