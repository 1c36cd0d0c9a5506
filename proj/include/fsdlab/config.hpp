#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsdlab {

struct ModelConfig {
    int32_t vocab_size = 259;
    int32_t context_len = 257; // BOS + up to 256 content bytes
    int32_t embed_dim = 64;
    int32_t num_layers = 2;
    int32_t num_heads = 4;
    int32_t feedforward_dim = 256;
    uint64_t seed = 42;

    void validate() const;
    // Shape equality: every field except the init seed.
    bool same_shape(const ModelConfig& other) const;
};

// Low-rank adapter spec. Defaults are the original LoRA choices: r=8,
// alpha=16, adapters on the attention query and value projections,
// A ~ N(0, 0.02^2), B = 0 so a fresh adapter is an exact identity.
struct AdapterSpec {
    int32_t rank = 8;
    double alpha = 16.0;
    std::vector<std::string> targets = {"attn_q", "attn_v"};
    double init_std = 0.02;

    double scaling() const { return alpha / static_cast<double>(rank); }
    void validate() const;
};

struct TrainConfig {
    int32_t epochs = 3;
    int32_t batch_size = 8;
    double initial_lr = 1e-3; // cosine-decayed to 0 over all steps
    uint64_t seed = 42;
    double clip_norm = 1.0; // global gradient-norm clip; <=0 disables
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

} // namespace fsdlab
