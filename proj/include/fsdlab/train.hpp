#pragma once

#include <vector>

#include "fsdlab/config.hpp"
#include "fsdlab/model.hpp"

namespace fsdlab {

struct TrainResult {
    std::vector<double> loss_history; // mean per-token NLL per epoch
};

// Full-parameter training by mean per-token negative log-likelihood with
// Adam and cosine learning-rate decay to zero. Deterministic given
// (seed, config, corpus): per-sequence gradients may be computed in
// parallel but are accumulated in batch order.
TrainResult train(LanguageModel& model, const std::vector<TokenSeq>& corpus,
                  const TrainConfig& cfg);

struct FinetuneOptions {
    bool full_finetune = false; // update all params instead of adapters
};

// Self-supervised fine-tuning on the same next-token loss. By default
// attaches fresh adapters and trains only their A/B matrices; base tensors
// come back bit-identical. The model must not already carry adapters.
LanguageModel finetune(const LanguageModel& model,
                       const std::vector<TokenSeq>& ft_set,
                       const AdapterSpec& lora, const TrainConfig& cfg,
                       const FinetuneOptions& options = {});

struct GradCheckOptions {
    double step = 1e-4;       // central-difference half step
    size_t sample_count = 256; // trainable parameters probed (>= 200 default)
    uint64_t seed = 12345;
};

// Max relative error between the analytic gradient of the per-sequence
// loss and central finite differences on a sampled parameter subset.
// Relative error uses denominator max(|analytic|, |numeric|, 1e-3) so a
// near-zero gradient is judged on an absolute scale. sample_count == 0
// returns 0 by definition.
double grad_check(const LanguageModel& model, const TokenSeq& seq,
                  const GradCheckOptions& options = {});

} // namespace fsdlab
