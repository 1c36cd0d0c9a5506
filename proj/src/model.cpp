#include "fsdlab/model.hpp"

#include <algorithm>
#include <cmath>

#include "fsdlab/errors.hpp"
#include "fsdlab/rng.hpp"

namespace fsdlab {

int ParamStore::index_of(const std::string& name) const {
    for (size_t i = 0; i < tensors.size(); ++i)
        if (tensors[i].name == name) return static_cast<int>(i);
    return -1;
}

NamedTensor& ParamStore::at(const std::string& name) {
    int idx = index_of(name);
    if (idx < 0) raise(ErrorKind::Config, "unknown tensor '" + name + "'");
    return tensors[static_cast<size_t>(idx)];
}

const NamedTensor& ParamStore::at(const std::string& name) const {
    int idx = index_of(name);
    if (idx < 0) raise(ErrorKind::Config, "unknown tensor '" + name + "'");
    return tensors[static_cast<size_t>(idx)];
}

int64_t ParamStore::total_params() const {
    int64_t n = 0;
    for (const auto& t : tensors) n += t.numel();
    return n;
}

bool ParamStore::all_finite() const {
    for (const auto& t : tensors)
        for (float v : t.data)
            if (!std::isfinite(v)) return false;
    return true;
}

namespace {

NamedTensor make_tensor(std::string name, std::vector<int64_t> shape) {
    NamedTensor t;
    t.name = std::move(name);
    t.shape = std::move(shape);
    t.data.assign(static_cast<size_t>(t.numel()), 0.0f);
    return t;
}

} // namespace

std::vector<NamedTensor> base_layout(const ModelConfig& cfg) {
    const int64_t v = cfg.vocab_size;
    const int64_t d = cfg.embed_dim;
    const int64_t f = cfg.feedforward_dim;
    std::vector<NamedTensor> out;
    out.push_back(make_tensor("tok_embed", {v, d}));
    out.push_back(make_tensor("pos_embed", {cfg.context_len, d}));
    for (int32_t l = 0; l < cfg.num_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        out.push_back(make_tensor(p + "ln1.gamma", {d}));
        out.push_back(make_tensor(p + "ln1.beta", {d}));
        out.push_back(make_tensor(p + "attn_q.weight", {d, d}));
        out.push_back(make_tensor(p + "attn_q.bias", {d}));
        out.push_back(make_tensor(p + "attn_k.weight", {d, d}));
        out.push_back(make_tensor(p + "attn_k.bias", {d}));
        out.push_back(make_tensor(p + "attn_v.weight", {d, d}));
        out.push_back(make_tensor(p + "attn_v.bias", {d}));
        out.push_back(make_tensor(p + "attn_o.weight", {d, d}));
        out.push_back(make_tensor(p + "attn_o.bias", {d}));
        out.push_back(make_tensor(p + "ln2.gamma", {d}));
        out.push_back(make_tensor(p + "ln2.beta", {d}));
        out.push_back(make_tensor(p + "mlp.w1", {f, d}));
        out.push_back(make_tensor(p + "mlp.b1", {f}));
        out.push_back(make_tensor(p + "mlp.w2", {d, f}));
        out.push_back(make_tensor(p + "mlp.b2", {d}));
    }
    out.push_back(make_tensor("ln_f.gamma", {d}));
    out.push_back(make_tensor("ln_f.beta", {d}));
    out.push_back(make_tensor("out.weight", {v, d}));
    out.push_back(make_tensor("out.bias", {v}));
    return out;
}

std::vector<NamedTensor> adapter_layout(const ModelConfig& cfg,
                                        const AdapterSpec& spec) {
    spec.validate();
    const int64_t d = cfg.embed_dim;
    const int64_t r = spec.rank;
    std::vector<NamedTensor> out;
    for (int32_t l = 0; l < cfg.num_layers; ++l) {
        for (const auto& target : spec.targets) {
            const std::string p =
                "layer" + std::to_string(l) + "." + target + ".";
            out.push_back(make_tensor(p + "lora_a", {r, d}));
            out.push_back(make_tensor(p + "lora_b", {d, r}));
        }
    }
    return out;
}

LanguageModel init_model(const ModelConfig& cfg) {
    cfg.validate();
    LanguageModel model;
    model.config = cfg;
    model.vocab.size = cfg.vocab_size;
    model.vocab.validate();
    model.params.tensors = base_layout(cfg);

    Rng rng(cfg.seed);
    for (auto& t : model.params.tensors) {
        const bool is_gain = t.name.ends_with("gamma");
        const bool is_weight = t.name.ends_with("weight") ||
                               t.name.ends_with("embed") ||
                               t.name.ends_with("w1") || t.name.ends_with("w2");
        if (is_gain) {
            std::fill(t.data.begin(), t.data.end(), 1.0f);
        } else if (is_weight) {
            for (auto& v : t.data)
                v = static_cast<float>(0.02 * rng.normal());
        }
        // biases and LN offsets stay zero
    }
    return model;
}

void attach_adapters(LanguageModel& model, const AdapterSpec& spec,
                     uint64_t seed) {
    if (model.adapters)
        raise(ErrorKind::Config, "model already has adapters attached");
    AdapterSet set;
    set.spec = spec;
    set.params.tensors = adapter_layout(model.config, spec);
    Rng rng(seed);
    for (auto& t : set.params.tensors) {
        if (t.name.ends_with("lora_a")) {
            for (auto& v : t.data)
                v = static_cast<float>(spec.init_std * rng.normal());
        }
        // lora_b stays zero: adapted weights equal base weights exactly
    }
    model.adapters = std::move(set);
}

} // namespace fsdlab
