#pragma once

#include <random>
#include <string>
#include <vector>

#include "fsdlab/model.hpp"

namespace testutil {

inline fsdlab::ModelConfig tiny_config(uint64_t seed = 7) {
    fsdlab::ModelConfig cfg;
    cfg.embed_dim = 16;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.feedforward_dim = 32;
    cfg.context_len = 64;
    cfg.seed = seed;
    return cfg;
}

inline fsdlab::ModelConfig micro_config(uint64_t seed = 7) {
    fsdlab::ModelConfig cfg;
    cfg.embed_dim = 32;
    cfg.num_layers = 1;
    cfg.num_heads = 2;
    cfg.feedforward_dim = 64;
    cfg.context_len = 96;
    cfg.seed = seed;
    return cfg;
}

// All logits identically zero: the next-token distribution is uniform over
// the whole vocabulary no matter the prefix.
inline fsdlab::LanguageModel uniform_model(uint64_t seed = 7) {
    fsdlab::LanguageModel m = fsdlab::init_model(tiny_config(seed));
    auto& w = m.params.at("out.weight").data;
    std::fill(w.begin(), w.end(), 0.0f);
    auto& b = m.params.at("out.bias").data;
    std::fill(b.begin(), b.end(), 0.0f);
    return m;
}

inline std::string random_text(std::mt19937_64& rng, size_t min_len = 8,
                               size_t max_len = 40) {
    const size_t len = min_len + rng() % (max_len - min_len + 1);
    std::string out;
    out.reserve(len);
    for (size_t i = 0; i < len; ++i) {
        out.push_back(
            static_cast<char>("abcdefghijklmnopqrstuvwxyz .,0123456789"[rng() % 40]));
    }
    return out;
}

} // namespace testutil
