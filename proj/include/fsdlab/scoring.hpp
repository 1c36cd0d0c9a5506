#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsdlab/model.hpp"

namespace fsdlab {

// Every scoring function is oriented so that LOWER score means MORE
// member-like; the same level-set rule (score < epsilon => member) then
// serves raw and deviation scores alike.
enum class ScoreFnKind { Perplexity, MinK, Zlib, Lowercase };

struct ScoreFunctionId {
    ScoreFnKind kind = ScoreFnKind::Perplexity;
    double k_percent = 20.0; // MinK only; must lie in (0, 100]

    void validate() const;
};

std::string to_string(const ScoreFunctionId& fn); // "perplexity", "min_k", ...
const char* fn_name(ScoreFnKind kind);
ScoreFnKind fn_kind_from_name(std::string_view name);

// ---- kernels over per-token log-probabilities ----
// The model-facing operations below and the experiment harness both reduce
// to these, so batch scoring and one-off scoring agree bitwise.

double mean_logprob(std::span<const double> logprobs);
double perplexity_from_logprobs(std::span<const double> logprobs);
// Mean of the E = max(1, floor(k/100 * n)) smallest log-probabilities;
// ties in value resolved toward the earliest position.
double min_k_raw_from_logprobs(std::span<const double> logprobs,
                               double k_percent);

// 8 * compressed byte length of the zlib-format DEFLATE of the text at
// level 6. Text-only; independent of any model.
double zlib_entropy(std::string_view text);

// ---- model-facing operations ----

double perplexity(const LanguageModel& model, std::string_view text);
double min_k_raw(const LanguageModel& model, std::string_view text,
                 double k_percent);
// ln(perplexity) / zlib_entropy.
double zlib_score(const LanguageModel& model, std::string_view text);
// perplexity(text) / perplexity(lowercased text), lowercase re-encoded.
double lowercase_score(const LanguageModel& model, std::string_view text);

// Dispatcher with the lower=>member orientation applied (MinK is negated).
double score(const LanguageModel& model, std::string_view text,
             const ScoreFunctionId& fn);

// Shared per-(model, text) forward results so the harness can evaluate all
// scoring functions from at most two forward passes.
struct TextScores {
    std::vector<double> logprobs;
    std::vector<double> logprobs_lower; // filled only when requested
    bool has_lower = false;
};

TextScores compute_text_scores(const LanguageModel& model,
                               std::string_view text, bool need_lowercase);
double score_from(const TextScores& scores, std::string_view text,
                  const ScoreFunctionId& fn);

} // namespace fsdlab
