#include "fsdlab/fsd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fsdlab/errors.hpp"
#include "fsdlab/rng.hpp"

namespace fsdlab {

double fsd_score(const LanguageModel& base, const LanguageModel& tuned,
                 std::string_view text, const ScoreFunctionId& fn) {
    if (!base.config.same_shape(tuned.config))
        raise(ErrorKind::Config,
              "base and fine-tuned models disagree on vocab/config shape");
    return score(base, text, fn) - score(tuned, text, fn);
}

const char* to_string(FinetuneComposition compose) {
    switch (compose) {
    case FinetuneComposition::NonMembersOnly: return "non";
    case FinetuneComposition::MembersOnly: return "mem";
    case FinetuneComposition::All: return "all";
    }
    return "unknown";
}

FinetuneComposition composition_from_name(std::string_view name) {
    if (name == "non") return FinetuneComposition::NonMembersOnly;
    if (name == "mem") return FinetuneComposition::MembersOnly;
    if (name == "all") return FinetuneComposition::All;
    raise(ErrorKind::Config,
          "unknown fine-tune composition '" + std::string(name) + "'");
}

FinetuneSplit build_finetune_set(const LabeledDataset& dataset,
                                 double fraction, uint64_t seed,
                                 FinetuneComposition compose) {
    dataset.validate();
    if (fraction <= 0.0 || fraction >= 1.0)
        raise(ErrorKind::Config, "split fraction must lie in (0, 1)");
    if (dataset.count(Label::NonMember) == 0)
        raise(ErrorKind::Config, "dataset contains no non-members");

    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    shuffle(order, rng);

    const size_t take = static_cast<size_t>(
        std::floor(fraction * static_cast<double>(dataset.size())));

    FinetuneSplit split;
    std::vector<bool> sampled(dataset.size(), false);
    for (size_t i = 0; i < take; ++i) {
        const LabeledExample& ex = dataset.examples[order[i]];
        sampled[order[i]] = true;
        const bool wanted =
            compose == FinetuneComposition::All ||
            (compose == FinetuneComposition::NonMembersOnly &&
             ex.label == Label::NonMember) ||
            (compose == FinetuneComposition::MembersOnly &&
             ex.label == Label::Member);
        if (wanted) {
            split.finetune_texts.push_back(ex.text);
            split.finetune_ids.push_back(ex.id);
        }
    }
    if (split.finetune_texts.empty())
        raise(ErrorKind::EmptyFinetuneSet,
              "sampled split contains no examples matching composition '" +
                  std::string(to_string(compose)) + "'");

    split.test_set.provenance = dataset.provenance;
    for (size_t i = 0; i < dataset.size(); ++i)
        if (!sampled[i]) split.test_set.examples.push_back(dataset.examples[i]);
    return split;
}

double select_threshold(const std::vector<double>& scores,
                        const std::vector<Label>& labels) {
    if (scores.size() != labels.size())
        raise(ErrorKind::Config, "scores and labels differ in length");
    size_t members = 0;
    for (Label l : labels)
        if (l == Label::Member) ++members;
    if (members == 0 || members == labels.size())
        raise(ErrorKind::DegenerateInput,
              "threshold selection needs both classes");

    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scores[a] < scores[b];
    });

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> candidates;
    candidates.push_back(-inf);
    for (size_t i = 0; i + 1 < n; ++i) {
        const double a = scores[order[i]];
        const double b = scores[order[i + 1]];
        if (a < b) candidates.push_back(a + (b - a) / 2.0);
    }
    candidates.push_back(inf);

    // Walk candidates in ascending order, tracking how many examples fall
    // strictly below each one. correct(eps) = members below + non-members
    // at-or-above.
    size_t best_correct = 0;
    double best_eps = -inf;
    size_t pos = 0;            // index into order
    size_t members_below = 0;  // members with score < current candidate
    const size_t nonmembers = n - members;
    for (double eps : candidates) {
        while (pos < n && scores[order[pos]] < eps) {
            if (labels[order[pos]] == Label::Member) ++members_below;
            ++pos;
        }
        const size_t nonmembers_below = pos - members_below;
        const size_t correct = members_below + (nonmembers - nonmembers_below);
        if (correct > best_correct) {
            best_correct = correct;
            best_eps = eps;
        }
    }
    return best_eps;
}

Label classify(const DetectionRule& rule, const LanguageModel& base,
               const LanguageModel* tuned, std::string_view text) {
    if (!std::isfinite(rule.threshold) && std::isnan(rule.threshold))
        raise(ErrorKind::Config, "detection threshold must not be NaN");
    double value;
    if (rule.use_fsd) {
        if (tuned == nullptr)
            raise(ErrorKind::Config,
                  "FSD rule requires a fine-tuned model");
        value = fsd_score(base, *tuned, text, rule.fn);
    } else {
        value = score(base, text, rule.fn);
    }
    return value < rule.threshold ? Label::Member : Label::NonMember;
}

} // namespace fsdlab
