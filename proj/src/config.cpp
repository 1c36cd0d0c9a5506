#include "fsdlab/config.hpp"

#include <set>

#include "fsdlab/errors.hpp"

namespace fsdlab {

void ModelConfig::validate() const {
    if (vocab_size < 259)
        raise(ErrorKind::Config, "vocab_size must be at least 259");
    if (context_len < 2)
        raise(ErrorKind::Config, "context_len must be at least 2");
    if (embed_dim <= 0 || num_layers <= 0 || num_heads <= 0 ||
        feedforward_dim <= 0)
        raise(ErrorKind::Config, "model dimensions must be positive");
    if (embed_dim % num_heads != 0)
        raise(ErrorKind::Config, "embed_dim must be divisible by num_heads");
}

bool ModelConfig::same_shape(const ModelConfig& other) const {
    return vocab_size == other.vocab_size && context_len == other.context_len &&
           embed_dim == other.embed_dim && num_layers == other.num_layers &&
           num_heads == other.num_heads &&
           feedforward_dim == other.feedforward_dim;
}

void AdapterSpec::validate() const {
    if (rank <= 0) raise(ErrorKind::Config, "adapter rank must be positive");
    if (alpha <= 0.0) raise(ErrorKind::Config, "adapter alpha must be positive");
    if (init_std < 0.0)
        raise(ErrorKind::Config, "adapter init_std must be non-negative");
    if (targets.empty())
        raise(ErrorKind::Config, "adapter target list must not be empty");
    static const std::set<std::string> known = {"attn_q", "attn_k", "attn_v",
                                               "attn_o"};
    for (const auto& t : targets) {
        if (!known.count(t))
            raise(ErrorKind::Config, "unknown adapter target '" + t + "'");
    }
}

void TrainConfig::validate() const {
    // epochs == 0 and lr == 0 are accepted as explicit no-op runs.
    if (epochs < 0) raise(ErrorKind::Config, "epochs must be non-negative");
    if (batch_size < 1) raise(ErrorKind::Config, "batch_size must be >= 1");
    if (initial_lr < 0.0)
        raise(ErrorKind::Config, "initial_lr must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        raise(ErrorKind::Config, "moment decays must lie in [0, 1)");
    if (eps <= 0.0) raise(ErrorKind::Config, "optimizer eps must be positive");
}

} // namespace fsdlab
