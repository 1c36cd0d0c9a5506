#include "fsdlab/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <zlib.h>

#include "fsdlab/errors.hpp"
#include "fsdlab/text.hpp"

namespace fsdlab {

void ScoreFunctionId::validate() const {
    if (kind == ScoreFnKind::MinK && (k_percent <= 0.0 || k_percent > 100.0))
        raise(ErrorKind::Config, "min_k k_percent must lie in (0, 100]");
}

const char* fn_name(ScoreFnKind kind) {
    switch (kind) {
    case ScoreFnKind::Perplexity: return "perplexity";
    case ScoreFnKind::MinK: return "min_k";
    case ScoreFnKind::Zlib: return "zlib";
    case ScoreFnKind::Lowercase: return "lowercase";
    }
    return "unknown";
}

std::string to_string(const ScoreFunctionId& fn) { return fn_name(fn.kind); }

ScoreFnKind fn_kind_from_name(std::string_view name) {
    if (name == "perplexity") return ScoreFnKind::Perplexity;
    if (name == "min_k") return ScoreFnKind::MinK;
    if (name == "zlib") return ScoreFnKind::Zlib;
    if (name == "lowercase") return ScoreFnKind::Lowercase;
    raise(ErrorKind::Config,
          "unknown scoring function '" + std::string(name) + "'");
}

double mean_logprob(std::span<const double> logprobs) {
    if (logprobs.empty())
        raise(ErrorKind::EmptyInput, "no scored tokens");
    double acc = 0.0;
    for (double lp : logprobs) acc += lp;
    return acc / static_cast<double>(logprobs.size());
}

double perplexity_from_logprobs(std::span<const double> logprobs) {
    return std::exp(-mean_logprob(logprobs));
}

double min_k_raw_from_logprobs(std::span<const double> logprobs,
                               double k_percent) {
    if (logprobs.empty())
        raise(ErrorKind::EmptyInput, "no scored tokens");
    if (k_percent <= 0.0 || k_percent > 100.0)
        raise(ErrorKind::Config, "min_k k_percent must lie in (0, 100]");
    const size_t n = logprobs.size();
    size_t count = static_cast<size_t>(
        std::floor(k_percent * static_cast<double>(n) / 100.0));
    if (count < 1) count = 1;
    if (count > n) count = n;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Smallest log-probs first; equal values resolved to earliest position.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return logprobs[a] < logprobs[b];
    });
    double acc = 0.0;
    for (size_t i = 0; i < count; ++i) acc += logprobs[order[i]];
    return acc / static_cast<double>(count);
}

double zlib_entropy(std::string_view text) {
    if (text.empty())
        raise(ErrorKind::EmptyInput, "zlib_entropy of empty text");
    uLongf bound = compressBound(static_cast<uLong>(text.size()));
    std::vector<Bytef> buf(bound);
    int rc = compress2(buf.data(), &bound,
                       reinterpret_cast<const Bytef*>(text.data()),
                       static_cast<uLong>(text.size()), 6);
    if (rc != Z_OK)
        raise(ErrorKind::NumericFailure,
              "zlib compress2 failed with code " + std::to_string(rc));
    return 8.0 * static_cast<double>(bound);
}

namespace {

std::vector<double> logprobs_for(const LanguageModel& model,
                                 std::string_view text) {
    TokenSeq seq = model.encode_text(text);
    if (seq.scored_tokens() == 0)
        raise(ErrorKind::EmptyInput, "text has no scorable tokens");
    return token_logprobs(model, seq);
}

} // namespace

TextScores compute_text_scores(const LanguageModel& model,
                               std::string_view text, bool need_lowercase) {
    TextScores scores;
    scores.logprobs = logprobs_for(model, text);
    if (need_lowercase) {
        const std::string lowered = simple_lowercase(text);
        scores.logprobs_lower = logprobs_for(model, lowered);
        scores.has_lower = true;
    }
    return scores;
}

double score_from(const TextScores& scores, std::string_view text,
                  const ScoreFunctionId& fn) {
    fn.validate();
    switch (fn.kind) {
    case ScoreFnKind::Perplexity:
        return perplexity_from_logprobs(scores.logprobs);
    case ScoreFnKind::MinK:
        // Negated so that lower always means more member-like.
        return -min_k_raw_from_logprobs(scores.logprobs, fn.k_percent);
    case ScoreFnKind::Zlib:
        // ln(perplexity) == mean NLL, computed directly.
        return -mean_logprob(scores.logprobs) / zlib_entropy(text);
    case ScoreFnKind::Lowercase:
        if (!scores.has_lower)
            raise(ErrorKind::Config,
                  "lowercase score requested without lowercase logprobs");
        return perplexity_from_logprobs(scores.logprobs) /
               perplexity_from_logprobs(scores.logprobs_lower);
    }
    raise(ErrorKind::Config, "unknown scoring function");
}

double perplexity(const LanguageModel& model, std::string_view text) {
    return perplexity_from_logprobs(logprobs_for(model, text));
}

double min_k_raw(const LanguageModel& model, std::string_view text,
                 double k_percent) {
    return min_k_raw_from_logprobs(logprobs_for(model, text), k_percent);
}

double zlib_score(const LanguageModel& model, std::string_view text) {
    return -mean_logprob(logprobs_for(model, text)) / zlib_entropy(text);
}

double lowercase_score(const LanguageModel& model, std::string_view text) {
    const std::vector<double> lps = logprobs_for(model, text);
    const std::vector<double> lps_lower =
        logprobs_for(model, simple_lowercase(text));
    return perplexity_from_logprobs(lps) / perplexity_from_logprobs(lps_lower);
}

double score(const LanguageModel& model, std::string_view text,
             const ScoreFunctionId& fn) {
    TextScores scores =
        compute_text_scores(model, text, fn.kind == ScoreFnKind::Lowercase);
    return score_from(scores, text, fn);
}

} // namespace fsdlab
