#pragma once

// Internal forward/backward machinery shared by scoring, training and the
// gradient check. Weights stay float32; all arithmetic runs in double.

#include <span>
#include <vector>

#include "fsdlab/model.hpp"

namespace fsdlab::detail {

struct LayerWeights {
    const float* ln1_g;
    const float* ln1_b;
    const float* wq;
    const float* bq;
    const float* wk;
    const float* bk;
    const float* wv;
    const float* bv;
    const float* wo;
    const float* bo;
    const float* ln2_g;
    const float* ln2_b;
    const float* w1;
    const float* b1;
    const float* w2;
    const float* b2;
    // LoRA pairs per attention projection; null when absent.
    const float* lora_a[4] = {nullptr, nullptr, nullptr, nullptr};
    const float* lora_b[4] = {nullptr, nullptr, nullptr, nullptr};
};

// Projection slots used for adapter targeting: q, k, v, o.
enum AttnProj { kProjQ = 0, kProjK = 1, kProjV = 2, kProjO = 3 };
int proj_from_target(const std::string& target);

struct WeightsView {
    const float* tok;
    const float* pos;
    std::vector<LayerWeights> layers;
    const float* lnf_g;
    const float* lnf_b;
    const float* wout;
    const float* bout;
    int d = 0;
    int f = 0;
    int v = 0;
    int nh = 0;
    int dh = 0;
    double lora_scale = 0.0;
    int lora_r = 0;
};

WeightsView bind_weights(const LanguageModel& model);

// Gradient buffers parallel to the model's tensor stores.
struct GradStore {
    std::vector<std::vector<double>> base;    // empty vectors when frozen
    std::vector<std::vector<double>> adapter; // parallel to adapter tensors
    bool train_base = false;
    bool train_adapter = false;

    void init(const LanguageModel& model, bool with_base, bool with_adapter);
    void zero();
    void add_scaled(const GradStore& other, double factor);
    double squared_norm() const;
    void scale_all(double factor);
};

struct ForwardOutputs {
    std::vector<double> target_logprobs;          // size T-1
    std::vector<std::vector<double>> full_rows;   // optional, size T x V
};

// Validates the sequence against the model context and runs the forward
// pass. want_full_rows additionally materializes every next-token
// log-probability row.
ForwardOutputs forward_logprobs(const LanguageModel& model,
                                const TokenSeq& seq, bool want_full_rows);

// Mean per-token NLL of the sequence. Gradients (d loss / d params) are
// ACCUMULATED into `grads` for every trainable store that is enabled.
double loss_and_grad(const LanguageModel& model, const TokenSeq& seq,
                     GradStore& grads);

double loss_only(const LanguageModel& model, const TokenSeq& seq);

} // namespace fsdlab::detail
