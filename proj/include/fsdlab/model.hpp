#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsdlab/config.hpp"
#include "fsdlab/vocab.hpp"

namespace fsdlab {

struct NamedTensor {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<float> data;

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        return n;
    }
};

struct ParamStore {
    std::vector<NamedTensor> tensors; // declared (serialization) order

    int index_of(const std::string& name) const;
    NamedTensor& at(const std::string& name);
    const NamedTensor& at(const std::string& name) const;
    int64_t total_params() const;
    bool all_finite() const;
};

struct AdapterSet {
    AdapterSpec spec;
    ParamStore params; // "layer{L}.{target}.lora_a" / ".lora_b"
};

// Decoder-only transformer over the byte vocabulary: learned token and
// position embeddings, pre-LN multi-head causal attention and GELU MLP
// blocks with residuals, final LN, untied output projection with bias.
struct LanguageModel {
    ModelConfig config;
    Vocab vocab;
    ParamStore params;
    std::optional<AdapterSet> adapters;

    TokenSeq encode_text(std::string_view text) const {
        return encode(text, vocab,
                      static_cast<size_t>(config.context_len) - 1);
    }
};

// Tensor name/shape manifest implied by a config, in declared order.
std::vector<NamedTensor> base_layout(const ModelConfig& config);
std::vector<NamedTensor> adapter_layout(const ModelConfig& config,
                                        const AdapterSpec& spec);

// Seeded initialization: embeddings and projection weights N(0, 0.02^2),
// LN gains 1, everything else 0.
LanguageModel init_model(const ModelConfig& config);

// Attaches freshly initialized adapters (A random, B zero: exact identity).
void attach_adapters(LanguageModel& model, const AdapterSpec& spec,
                     uint64_t seed);

// Entry i is log p(seq[i+1] | seq[0..i]); natural log, computed in double.
// Throws InsufficientTokens for a lone-BOS sequence and SequenceTooLong
// past context_len.
std::vector<double> token_logprobs(const LanguageModel& model,
                                   const TokenSeq& seq);

// Full next-token log-probability rows, one per prefix (row t conditions
// on seq[0..t]). Row sums of exp() are 1 within 1e-6; used by the
// normalization tests and the Python parity check.
std::vector<std::vector<double>> next_token_distributions(
    const LanguageModel& model, const TokenSeq& seq);

} // namespace fsdlab
