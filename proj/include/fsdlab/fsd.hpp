#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fsdlab/dataset.hpp"
#include "fsdlab/model.hpp"
#include "fsdlab/scoring.hpp"

namespace fsdlab {

// Fine-tuned Score Deviation: base-model score minus fine-tuned-model
// score. Fine-tuning on a few unseen texts drops non-member scores far
// more than member scores, so the deviation keeps the lower=>member
// orientation. Both models must share the same shape (config minus seed).
double fsd_score(const LanguageModel& base, const LanguageModel& tuned,
                 std::string_view text, const ScoreFunctionId& fn);

enum class FinetuneComposition { NonMembersOnly, MembersOnly, All };

const char* to_string(FinetuneComposition compose);
FinetuneComposition composition_from_name(std::string_view name);

struct FinetuneSplit {
    std::vector<std::string> finetune_texts; // labels stripped
    std::vector<std::string> finetune_ids;
    LabeledDataset test_set; // every example not in the sampled subset
};

// Shuffles example indices with the declared generator (mt19937_64 +
// descending Fisher-Yates, modulo draws), takes the first
// floor(fraction * N) examples, keeps those matching `compose` as the
// fine-tuning texts and returns all remaining examples as the test set.
FinetuneSplit build_finetune_set(
    const LabeledDataset& dataset, double fraction = 0.30, uint64_t seed = 42,
    FinetuneComposition compose = FinetuneComposition::NonMembersOnly);

// Threshold maximizing accuracy of (score < eps => member) over midpoints
// of consecutive distinct scores plus -inf/+inf sentinels; ties resolved
// toward the smallest candidate.
double select_threshold(const std::vector<double>& scores,
                        const std::vector<Label>& labels);

struct DetectionRule {
    ScoreFunctionId fn;
    bool use_fsd = false;
    double threshold = 0.0;
};

// Member iff the rule's score is strictly below the threshold.
Label classify(const DetectionRule& rule, const LanguageModel& base,
               const LanguageModel* tuned, std::string_view text);

} // namespace fsdlab
