#include "compute.hpp"

#include <array>
#include <cmath>
#include <cstring>

#include "fsdlab/errors.hpp"

namespace fsdlab::detail {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Base tensor indices relative to the layout in base_layout().
constexpr int kTok = 0;
constexpr int kPos = 1;
constexpr int kPerLayer = 16;

int layer_base(int layer) { return 2 + layer * kPerLayer; }

inline double gelu(double z) {
    return 0.5 * z * (1.0 + std::erf(z * kInvSqrt2));
}

inline double gelu_grad(double z) {
    double phi_big = 0.5 * (1.0 + std::erf(z * kInvSqrt2));
    double phi_small = std::exp(-0.5 * z * z) * kInvSqrt2Pi;
    return phi_big + z * phi_small;
}

// y = W x + b with W row-major (out x in).
void affine(const float* w, const float* b, const double* x, int out, int in,
            double* y) {
    for (int i = 0; i < out; ++i) {
        const float* row = w + static_cast<size_t>(i) * in;
        double acc = b ? static_cast<double>(b[i]) : 0.0;
        for (int j = 0; j < in; ++j) acc += static_cast<double>(row[j]) * x[j];
        y[i] = acc;
    }
}

// dx += W^T dy.
void matvec_transpose_add(const float* w, const double* dy, int out, int in,
                          double* dx) {
    for (int i = 0; i < out; ++i) {
        const float* row = w + static_cast<size_t>(i) * in;
        const double g = dy[i];
        if (g == 0.0) continue;
        for (int j = 0; j < in; ++j) dx[j] += static_cast<double>(row[j]) * g;
    }
}

// gw += dy (outer) x.
void outer_accumulate(double* gw, const double* dy, const double* x, int out,
                      int in) {
    for (int i = 0; i < out; ++i) {
        double* row = gw + static_cast<size_t>(i) * in;
        const double g = dy[i];
        if (g == 0.0) continue;
        for (int j = 0; j < in; ++j) row[j] += g * x[j];
    }
}

void layer_norm(const float* gamma, const float* beta, const double* x, int d,
                double* y, double* xhat, double* inv_std) {
    double mu = 0.0;
    for (int i = 0; i < d; ++i) mu += x[i];
    mu /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) {
        double c = x[i] - mu;
        var += c * c;
    }
    var /= d;
    double inv = 1.0 / std::sqrt(var + kLnEps);
    *inv_std = inv;
    for (int i = 0; i < d; ++i) {
        double xh = (x[i] - mu) * inv;
        xhat[i] = xh;
        y[i] = static_cast<double>(gamma[i]) * xh + static_cast<double>(beta[i]);
    }
}

// Given d loss / d y, accumulates gamma/beta grads and returns
// d loss / d x (added into dx).
void layer_norm_backward(const float* gamma, const double* dy,
                         const double* xhat, double inv_std, int d, double* dx,
                         double* dgamma, double* dbeta) {
    double mean_dxh = 0.0;
    double mean_dxh_xhat = 0.0;
    for (int i = 0; i < d; ++i) {
        double dxh = dy[i] * static_cast<double>(gamma[i]);
        mean_dxh += dxh;
        mean_dxh_xhat += dxh * xhat[i];
    }
    mean_dxh /= d;
    mean_dxh_xhat /= d;
    for (int i = 0; i < d; ++i) {
        double dxh = dy[i] * static_cast<double>(gamma[i]);
        dx[i] += inv_std * (dxh - mean_dxh - xhat[i] * mean_dxh_xhat);
        if (dgamma) dgamma[i] += dy[i] * xhat[i];
        if (dbeta) dbeta[i] += dy[i];
    }
}

struct LayerCache {
    std::vector<double> res_in;  // T*d, input to the block
    std::vector<double> xhat1, x1; // T*d
    std::vector<double> inv1;      // T
    std::vector<double> q, k, v;   // T*d
    std::vector<double> lora_u[4]; // T*r per adapted projection
    std::vector<double> probs;     // nh*T*T
    std::vector<double> ctx;       // T*d
    std::vector<double> res2;      // T*d, after attention residual
    std::vector<double> xhat2, y2; // T*d
    std::vector<double> inv2;      // T
    std::vector<double> z, act;    // T*f
};

struct Cache {
    std::vector<LayerCache> layers;
    std::vector<double> hfinal;      // T*d
    std::vector<double> xhatf, fx;   // T*d
    std::vector<double> invf;        // T
    std::vector<double> probs_out;   // (T-1)*V
};

void validate_sequence(const LanguageModel& model, const TokenSeq& seq) {
    if (seq.ids.empty() || seq.ids.size() < 2)
        raise(ErrorKind::InsufficientTokens,
              "sequence needs BOS plus at least one content token");
    if (seq.ids.size() > static_cast<size_t>(model.config.context_len))
        raise(ErrorKind::SequenceTooLong,
              "sequence length " + std::to_string(seq.ids.size()) +
                  " exceeds context_len " +
                  std::to_string(model.config.context_len));
    if (seq.ids.front() != model.vocab.bos)
        raise(ErrorKind::Config, "sequence must start with BOS");
    for (int32_t id : seq.ids)
        if (id < 0 || id >= model.config.vocab_size)
            raise(ErrorKind::Config, "token id out of vocab range");
}

// Runs the transformer; fills target log-probs and (optionally) the full
// next-token rows and the backward cache.
void run_forward(const WeightsView& w, std::span<const int32_t> ids,
                 ForwardOutputs* outputs, bool want_full_rows, Cache* cache) {
    const int T = static_cast<int>(ids.size());
    const int d = w.d;
    const int f = w.f;
    const int v = w.v;
    const int nh = w.nh;
    const int dh = w.dh;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const int r = w.lora_r;
    const double lscale = w.lora_scale;
    const size_t td = static_cast<size_t>(T) * d;

    std::vector<double> h(td);
    for (int t = 0; t < T; ++t) {
        const float* tok_row = w.tok + static_cast<size_t>(ids[t]) * d;
        const float* pos_row = w.pos + static_cast<size_t>(t) * d;
        for (int i = 0; i < d; ++i)
            h[static_cast<size_t>(t) * d + i] =
                static_cast<double>(tok_row[i]) + static_cast<double>(pos_row[i]);
    }

    if (cache) cache->layers.resize(w.layers.size());

    std::vector<double> x1(td), q(td), k(td), vv(td), ctx(td);
    std::vector<double> xhat1(td);
    std::vector<double> inv1(T);
    std::vector<double> prow; // per-(head, t) attention row when not cached

    for (size_t l = 0; l < w.layers.size(); ++l) {
        const LayerWeights& lw = w.layers[l];
        LayerCache* lc = cache ? &cache->layers[l] : nullptr;
        if (lc) lc->res_in = h;

        for (int t = 0; t < T; ++t) {
            layer_norm(lw.ln1_g, lw.ln1_b, &h[static_cast<size_t>(t) * d], d,
                       &x1[static_cast<size_t>(t) * d],
                       &xhat1[static_cast<size_t>(t) * d], &inv1[t]);
        }

        if (lc) {
            lc->xhat1 = xhat1;
            lc->inv1 = inv1;
            lc->x1 = x1;
            for (int p = 0; p < 4; ++p)
                if (lw.lora_a[p] && p != kProjO)
                    lc->lora_u[p].assign(static_cast<size_t>(T) * r, 0.0);
        }

        auto project = [&](int proj, const float* wm, const float* bm,
                           std::vector<double>& out) {
            for (int t = 0; t < T; ++t) {
                const double* xt = &x1[static_cast<size_t>(t) * d];
                double* yt = &out[static_cast<size_t>(t) * d];
                affine(wm, bm, xt, d, d, yt);
                if (lw.lora_a[proj]) {
                    double u[64]; // rank is small; bounded by validation
                    for (int ri = 0; ri < r; ++ri) {
                        const float* arow =
                            lw.lora_a[proj] + static_cast<size_t>(ri) * d;
                        double acc = 0.0;
                        for (int j = 0; j < d; ++j)
                            acc += static_cast<double>(arow[j]) * xt[j];
                        u[ri] = acc;
                        if (lc && !lc->lora_u[proj].empty())
                            lc->lora_u[proj][static_cast<size_t>(t) * r + ri] =
                                acc;
                    }
                    for (int i = 0; i < d; ++i) {
                        const float* brow =
                            lw.lora_b[proj] + static_cast<size_t>(i) * r;
                        double acc = 0.0;
                        for (int ri = 0; ri < r; ++ri)
                            acc += static_cast<double>(brow[ri]) * u[ri];
                        yt[i] += lscale * acc;
                    }
                }
            }
        };

        project(kProjQ, lw.wq, lw.bq, q);
        project(kProjK, lw.wk, lw.bk, k);
        project(kProjV, lw.wv, lw.bv, vv);

        if (lc)
            lc->probs.assign(
                static_cast<size_t>(nh) * T * T, 0.0);
        else
            prow.assign(static_cast<size_t>(T), 0.0);

        for (int head = 0; head < nh; ++head) {
            const int off = head * dh;
            for (int t = 0; t < T; ++t) {
                const double* qt = &q[static_cast<size_t>(t) * d + off];
                double* row =
                    lc ? &lc->probs[(static_cast<size_t>(head) * T + t) * T]
                       : prow.data();
                double maxs = -1e300;
                for (int u = 0; u <= t; ++u) {
                    const double* ku = &k[static_cast<size_t>(u) * d + off];
                    double s = 0.0;
                    for (int j = 0; j < dh; ++j) s += qt[j] * ku[j];
                    s *= attn_scale;
                    row[u] = s;
                    if (s > maxs) maxs = s;
                }
                double denom = 0.0;
                for (int u = 0; u <= t; ++u) {
                    double e = std::exp(row[u] - maxs);
                    row[u] = e;
                    denom += e;
                }
                double* ct = &ctx[static_cast<size_t>(t) * d + off];
                for (int j = 0; j < dh; ++j) ct[j] = 0.0;
                for (int u = 0; u <= t; ++u) {
                    row[u] /= denom;
                    const double* vu = &vv[static_cast<size_t>(u) * d + off];
                    const double p = row[u];
                    for (int j = 0; j < dh; ++j) ct[j] += p * vu[j];
                }
            }
        }

        if (lc) {
            lc->q = q;
            lc->k = k;
            lc->v = vv;
            lc->ctx = ctx;
            if (lw.lora_a[kProjO])
                lc->lora_u[kProjO].assign(static_cast<size_t>(T) * r, 0.0);
        }

        // Output projection + residual.
        for (int t = 0; t < T; ++t) {
            const double* ct = &ctx[static_cast<size_t>(t) * d];
            double* ht = &h[static_cast<size_t>(t) * d];
            double tmp[1024];
            affine(lw.wo, lw.bo, ct, d, d, tmp);
            if (lw.lora_a[kProjO]) {
                double u[64];
                for (int ri = 0; ri < r; ++ri) {
                    const float* arow =
                        lw.lora_a[kProjO] + static_cast<size_t>(ri) * d;
                    double acc = 0.0;
                    for (int j = 0; j < d; ++j)
                        acc += static_cast<double>(arow[j]) * ct[j];
                    u[ri] = acc;
                    if (lc)
                        lc->lora_u[kProjO][static_cast<size_t>(t) * r + ri] = acc;
                }
                for (int i = 0; i < d; ++i) {
                    const float* brow =
                        lw.lora_b[kProjO] + static_cast<size_t>(i) * r;
                    double acc = 0.0;
                    for (int ri = 0; ri < r; ++ri)
                        acc += static_cast<double>(brow[ri]) * u[ri];
                    tmp[i] += lscale * acc;
                }
            }
            for (int i = 0; i < d; ++i) ht[i] += tmp[i];
        }

        if (lc) lc->res2 = h;

        // MLP block.
        std::vector<double> z(static_cast<size_t>(f));
        std::vector<double> act(static_cast<size_t>(f));
        for (int t = 0; t < T; ++t) {
            double* ht = &h[static_cast<size_t>(t) * d];
            double y2[1024];
            double xh2[1024];
            double inv2v;
            layer_norm(lw.ln2_g, lw.ln2_b, ht, d, y2, xh2, &inv2v);
            affine(lw.w1, lw.b1, y2, f, d, z.data());
            for (int i = 0; i < f; ++i) act[static_cast<size_t>(i)] = gelu(z[static_cast<size_t>(i)]);
            double m[1024];
            affine(lw.w2, lw.b2, act.data(), d, f, m);
            for (int i = 0; i < d; ++i) ht[i] += m[i];
            if (lc) {
                if (lc->xhat2.empty()) {
                    lc->xhat2.resize(td);
                    lc->y2.resize(td);
                    lc->inv2.resize(T);
                    lc->z.resize(static_cast<size_t>(T) * f);
                    lc->act.resize(static_cast<size_t>(T) * f);
                }
                std::memcpy(&lc->xhat2[static_cast<size_t>(t) * d], xh2,
                            sizeof(double) * d);
                std::memcpy(&lc->y2[static_cast<size_t>(t) * d], y2,
                            sizeof(double) * d);
                lc->inv2[t] = inv2v;
                std::memcpy(&lc->z[static_cast<size_t>(t) * f], z.data(),
                            sizeof(double) * f);
                std::memcpy(&lc->act[static_cast<size_t>(t) * f], act.data(),
                            sizeof(double) * f);
            }
        }
    }

    if (cache) cache->hfinal = h;

    // Final LN + output head.
    std::vector<double> fx(td);
    std::vector<double> xhatf(td);
    std::vector<double> invf(T);
    for (int t = 0; t < T; ++t) {
        layer_norm(w.lnf_g, w.lnf_b, &h[static_cast<size_t>(t) * d], d,
                   &fx[static_cast<size_t>(t) * d],
                   &xhatf[static_cast<size_t>(t) * d], &invf[t]);
    }
    if (cache) {
        cache->fx = fx;
        cache->xhatf = xhatf;
        cache->invf = invf;
        cache->probs_out.assign(static_cast<size_t>(T - 1) * v, 0.0);
    }

    if (outputs) {
        outputs->target_logprobs.assign(static_cast<size_t>(T - 1), 0.0);
        if (want_full_rows) outputs->full_rows.resize(static_cast<size_t>(T));
    }

    std::vector<double> logits(static_cast<size_t>(v));
    const int last_needed = want_full_rows ? T : T - 1;
    for (int t = 0; t < last_needed; ++t) {
        affine(w.wout, w.bout, &fx[static_cast<size_t>(t) * d], v, d,
               logits.data());
        double maxl = logits[0];
        for (int j = 1; j < v; ++j)
            if (logits[j] > maxl) maxl = logits[j];
        double denom = 0.0;
        for (int j = 0; j < v; ++j) denom += std::exp(logits[j] - maxl);
        const double lse = maxl + std::log(denom);
        if (outputs && want_full_rows) {
            auto& row = outputs->full_rows[static_cast<size_t>(t)];
            row.resize(static_cast<size_t>(v));
            for (int j = 0; j < v; ++j) row[j] = logits[j] - lse;
        }
        if (t < T - 1) {
            if (outputs)
                outputs->target_logprobs[static_cast<size_t>(t)] =
                    logits[static_cast<size_t>(ids[t + 1])] - lse;
            if (cache) {
                double* prow_out =
                    &cache->probs_out[static_cast<size_t>(t) * v];
                for (int j = 0; j < v; ++j)
                    prow_out[j] = std::exp(logits[j] - lse);
            }
        }
    }
}

} // namespace

int proj_from_target(const std::string& target) {
    if (target == "attn_q") return kProjQ;
    if (target == "attn_k") return kProjK;
    if (target == "attn_v") return kProjV;
    if (target == "attn_o") return kProjO;
    raise(ErrorKind::Config, "unknown adapter target '" + target + "'");
}

WeightsView bind_weights(const LanguageModel& model) {
    const ModelConfig& cfg = model.config;
    if (cfg.embed_dim > 1024 || cfg.feedforward_dim > 1024)
        raise(ErrorKind::Config, "embed/feedforward dims above 1024 are not supported");
    WeightsView w;
    w.d = cfg.embed_dim;
    w.f = cfg.feedforward_dim;
    w.v = cfg.vocab_size;
    w.nh = cfg.num_heads;
    w.dh = cfg.embed_dim / cfg.num_heads;
    const auto& t = model.params.tensors;
    w.tok = t[kTok].data.data();
    w.pos = t[kPos].data.data();
    w.layers.resize(static_cast<size_t>(cfg.num_layers));
    for (int l = 0; l < cfg.num_layers; ++l) {
        const int b = layer_base(l);
        LayerWeights& lw = w.layers[static_cast<size_t>(l)];
        lw.ln1_g = t[b + 0].data.data();
        lw.ln1_b = t[b + 1].data.data();
        lw.wq = t[b + 2].data.data();
        lw.bq = t[b + 3].data.data();
        lw.wk = t[b + 4].data.data();
        lw.bk = t[b + 5].data.data();
        lw.wv = t[b + 6].data.data();
        lw.bv = t[b + 7].data.data();
        lw.wo = t[b + 8].data.data();
        lw.bo = t[b + 9].data.data();
        lw.ln2_g = t[b + 10].data.data();
        lw.ln2_b = t[b + 11].data.data();
        lw.w1 = t[b + 12].data.data();
        lw.b1 = t[b + 13].data.data();
        lw.w2 = t[b + 14].data.data();
        lw.b2 = t[b + 15].data.data();
    }
    const int fb = layer_base(cfg.num_layers);
    w.lnf_g = t[fb + 0].data.data();
    w.lnf_b = t[fb + 1].data.data();
    w.wout = t[fb + 2].data.data();
    w.bout = t[fb + 3].data.data();

    if (model.adapters) {
        const AdapterSet& set = *model.adapters;
        if (set.spec.rank > 64)
            raise(ErrorKind::Config, "adapter rank above 64 is not supported");
        w.lora_r = set.spec.rank;
        w.lora_scale = set.spec.scaling();
        const size_t per_layer = set.spec.targets.size() * 2;
        for (int l = 0; l < cfg.num_layers; ++l) {
            for (size_t ti = 0; ti < set.spec.targets.size(); ++ti) {
                const int proj = proj_from_target(set.spec.targets[ti]);
                const size_t base =
                    static_cast<size_t>(l) * per_layer + ti * 2;
                w.layers[static_cast<size_t>(l)].lora_a[proj] =
                    set.params.tensors[base].data.data();
                w.layers[static_cast<size_t>(l)].lora_b[proj] =
                    set.params.tensors[base + 1].data.data();
            }
        }
    }
    return w;
}

void GradStore::init(const LanguageModel& model, bool with_base,
                     bool with_adapter) {
    train_base = with_base;
    train_adapter = with_adapter && model.adapters.has_value();
    base.clear();
    adapter.clear();
    base.resize(model.params.tensors.size());
    if (with_base) {
        for (size_t i = 0; i < model.params.tensors.size(); ++i)
            base[i].assign(model.params.tensors[i].data.size(), 0.0);
    }
    if (train_adapter) {
        adapter.resize(model.adapters->params.tensors.size());
        for (size_t i = 0; i < adapter.size(); ++i)
            adapter[i].assign(model.adapters->params.tensors[i].data.size(),
                              0.0);
    }
}

void GradStore::zero() {
    for (auto& g : base) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : adapter) std::fill(g.begin(), g.end(), 0.0);
}

void GradStore::add_scaled(const GradStore& other, double factor) {
    for (size_t i = 0; i < base.size(); ++i)
        for (size_t j = 0; j < base[i].size(); ++j)
            base[i][j] += factor * other.base[i][j];
    for (size_t i = 0; i < adapter.size(); ++i)
        for (size_t j = 0; j < adapter[i].size(); ++j)
            adapter[i][j] += factor * other.adapter[i][j];
}

double GradStore::squared_norm() const {
    double acc = 0.0;
    for (const auto& g : base)
        for (double x : g) acc += x * x;
    for (const auto& g : adapter)
        for (double x : g) acc += x * x;
    return acc;
}

void GradStore::scale_all(double factor) {
    for (auto& g : base)
        for (double& x : g) x *= factor;
    for (auto& g : adapter)
        for (double& x : g) x *= factor;
}

ForwardOutputs forward_logprobs(const LanguageModel& model,
                                const TokenSeq& seq, bool want_full_rows) {
    validate_sequence(model, seq);
    WeightsView w = bind_weights(model);
    ForwardOutputs out;
    run_forward(w, seq.ids, &out, want_full_rows, nullptr);
    return out;
}

double loss_only(const LanguageModel& model, const TokenSeq& seq) {
    ForwardOutputs out = forward_logprobs(model, seq, false);
    double acc = 0.0;
    for (double lp : out.target_logprobs) acc += lp;
    return -acc / static_cast<double>(out.target_logprobs.size());
}

double loss_and_grad(const LanguageModel& model, const TokenSeq& seq,
                     GradStore& grads) {
    validate_sequence(model, seq);
    WeightsView w = bind_weights(model);
    const int T = static_cast<int>(seq.ids.size());
    const int d = w.d;
    const int f = w.f;
    const int v = w.v;
    const int nh = w.nh;
    const int dh = w.dh;
    const int r = w.lora_r;
    const double lscale = w.lora_scale;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const size_t td = static_cast<size_t>(T) * d;
    const double inv_n = 1.0 / static_cast<double>(T - 1);

    Cache cache;
    ForwardOutputs out;
    run_forward(w, seq.ids, &out, false, &cache);

    double loss = 0.0;
    for (double lp : out.target_logprobs) loss -= lp;
    loss *= inv_n;

    // Adapter grad slot lookup: [layer][proj] -> index into adapter store.
    std::vector<std::array<int, 4>> lora_slot;
    if (grads.train_adapter && model.adapters) {
        const auto& spec = model.adapters->spec;
        lora_slot.assign(static_cast<size_t>(model.config.num_layers),
                         {-1, -1, -1, -1});
        const size_t per_layer = spec.targets.size() * 2;
        for (int l = 0; l < model.config.num_layers; ++l)
            for (size_t ti = 0; ti < spec.targets.size(); ++ti)
                lora_slot[static_cast<size_t>(l)]
                         [static_cast<size_t>(proj_from_target(spec.targets[ti]))] =
                             static_cast<int>(static_cast<size_t>(l) * per_layer +
                                              ti * 2);
    }

    const int fb = layer_base(model.config.num_layers);

    // d loss / d h at the current level, flowing top-down.
    std::vector<double> dh_buf(td, 0.0);
    std::vector<double> dfx(td, 0.0);

    // Output head.
    std::vector<double> dlogits(static_cast<size_t>(v));
    for (int t = 0; t < T - 1; ++t) {
        const double* probs = &cache.probs_out[static_cast<size_t>(t) * v];
        const int target = seq.ids[static_cast<size_t>(t) + 1];
        for (int j = 0; j < v; ++j) dlogits[static_cast<size_t>(j)] = probs[j] * inv_n;
        dlogits[static_cast<size_t>(target)] -= inv_n;
        const double* fxt = &cache.fx[static_cast<size_t>(t) * d];
        if (grads.train_base) {
            outer_accumulate(grads.base[static_cast<size_t>(fb + 2)].data(),
                             dlogits.data(), fxt, v, d);
            for (int j = 0; j < v; ++j)
                grads.base[static_cast<size_t>(fb + 3)][static_cast<size_t>(j)] +=
                    dlogits[static_cast<size_t>(j)];
        }
        matvec_transpose_add(w.wout, dlogits.data(), v, d,
                             &dfx[static_cast<size_t>(t) * d]);
    }

    // Final LN.
    for (int t = 0; t < T; ++t) {
        double* dgamma = grads.train_base
                             ? grads.base[static_cast<size_t>(fb + 0)].data()
                             : nullptr;
        double* dbeta = grads.train_base
                            ? grads.base[static_cast<size_t>(fb + 1)].data()
                            : nullptr;
        layer_norm_backward(w.lnf_g, &dfx[static_cast<size_t>(t) * d],
                            &cache.xhatf[static_cast<size_t>(t) * d],
                            cache.invf[static_cast<size_t>(t)], d,
                            &dh_buf[static_cast<size_t>(t) * d], dgamma, dbeta);
    }

    std::vector<double> dx1(td), dq(td), dk(td), dv(td), dctx(td), dres2(td);
    std::vector<double> dz(static_cast<size_t>(f)), dact(static_cast<size_t>(f));
    std::vector<double> dy2(static_cast<size_t>(d));

    for (int l = model.config.num_layers - 1; l >= 0; --l) {
        const LayerWeights& lw = w.layers[static_cast<size_t>(l)];
        const LayerCache& lc = cache.layers[static_cast<size_t>(l)];
        const int b = layer_base(l);
        auto bgrad = [&](int offset) -> double* {
            return grads.train_base
                       ? grads.base[static_cast<size_t>(b + offset)].data()
                       : nullptr;
        };

        // --- MLP block backward; dh_buf currently holds d res_next ---
        std::fill(dres2.begin(), dres2.end(), 0.0);
        for (int t = 0; t < T; ++t) {
            const double* dht = &dh_buf[static_cast<size_t>(t) * d];
            const double* act = &lc.act[static_cast<size_t>(t) * f];
            const double* z = &lc.z[static_cast<size_t>(t) * f];
            const double* y2 = &lc.y2[static_cast<size_t>(t) * d];

            // m = W2 act + b2; res_next = res2 + m
            std::fill(dact.begin(), dact.end(), 0.0);
            matvec_transpose_add(lw.w2, dht, d, f, dact.data());
            if (grads.train_base) {
                outer_accumulate(bgrad(14), dht, act, d, f);
                for (int i = 0; i < d; ++i) bgrad(15)[i] += dht[i];
            }
            for (int i = 0; i < f; ++i) dz[static_cast<size_t>(i)] =
                dact[static_cast<size_t>(i)] * gelu_grad(z[i]);
            std::fill(dy2.begin(), dy2.end(), 0.0);
            matvec_transpose_add(lw.w1, dz.data(), f, d, dy2.data());
            if (grads.train_base) {
                outer_accumulate(bgrad(12), dz.data(), y2, f, d);
                for (int i = 0; i < f; ++i) bgrad(13)[i] += dz[static_cast<size_t>(i)];
            }
            // skip connection + LN2 path
            double* dres2t = &dres2[static_cast<size_t>(t) * d];
            for (int i = 0; i < d; ++i) dres2t[i] += dht[i];
            layer_norm_backward(lw.ln2_g, dy2.data(),
                                &lc.xhat2[static_cast<size_t>(t) * d],
                                lc.inv2[static_cast<size_t>(t)], d, dres2t,
                                bgrad(10), bgrad(11));
        }

        // --- attention block backward; dres2 holds d res2 ---
        std::fill(dctx.begin(), dctx.end(), 0.0);
        std::fill(dh_buf.begin(), dh_buf.end(), 0.0); // becomes d res_in
        std::fill(dx1.begin(), dx1.end(), 0.0);
        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);

        const int slot_o =
            lora_slot.empty() ? -1 : lora_slot[static_cast<size_t>(l)][kProjO];
        for (int t = 0; t < T; ++t) {
            const double* dao = &dres2[static_cast<size_t>(t) * d];
            const double* ct = &lc.ctx[static_cast<size_t>(t) * d];
            // skip connection into res_in
            double* dres_in_t = &dh_buf[static_cast<size_t>(t) * d];
            for (int i = 0; i < d; ++i) dres_in_t[i] += dao[i];
            // o-projection
            if (grads.train_base) {
                outer_accumulate(bgrad(8), dao, ct, d, d);
                for (int i = 0; i < d; ++i) bgrad(9)[i] += dao[i];
            }
            matvec_transpose_add(lw.wo, dao, d, d,
                                 &dctx[static_cast<size_t>(t) * d]);
            if (lw.lora_a[kProjO]) {
                const double* uo = &lc.lora_u[kProjO][static_cast<size_t>(t) * r];
                double du[64];
                for (int ri = 0; ri < r; ++ri) du[ri] = 0.0;
                for (int i = 0; i < d; ++i) {
                    const float* brow =
                        lw.lora_b[kProjO] + static_cast<size_t>(i) * r;
                    const double g = lscale * dao[i];
                    for (int ri = 0; ri < r; ++ri)
                        du[ri] += static_cast<double>(brow[ri]) * g;
                }
                if (grads.train_adapter && slot_o >= 0) {
                    auto& ga = grads.adapter[static_cast<size_t>(slot_o)];
                    auto& gb = grads.adapter[static_cast<size_t>(slot_o) + 1];
                    for (int i = 0; i < d; ++i) {
                        const double g = lscale * dao[i];
                        for (int ri = 0; ri < r; ++ri)
                            gb[static_cast<size_t>(i) * r + ri] += g * uo[ri];
                    }
                    for (int ri = 0; ri < r; ++ri) {
                        const double g = du[ri];
                        for (int j = 0; j < d; ++j)
                            ga[static_cast<size_t>(ri) * d + j] += g * ct[j];
                    }
                }
                double* dctx_t = &dctx[static_cast<size_t>(t) * d];
                for (int ri = 0; ri < r; ++ri) {
                    const float* arow =
                        lw.lora_a[kProjO] + static_cast<size_t>(ri) * d;
                    const double g = du[ri];
                    for (int j = 0; j < d; ++j)
                        dctx_t[j] += static_cast<double>(arow[j]) * g;
                }
            }
        }

        // attention weights backward
        std::vector<double> dprow(static_cast<size_t>(T));
        for (int head = 0; head < nh; ++head) {
            const int off = head * dh;
            for (int t = 0; t < T; ++t) {
                const double* dct = &dctx[static_cast<size_t>(t) * d + off];
                const double* prow =
                    &lc.probs[(static_cast<size_t>(head) * T + t) * T];
                double dot = 0.0;
                for (int u = 0; u <= t; ++u) {
                    const double* vu = &lc.v[static_cast<size_t>(u) * d + off];
                    double dp = 0.0;
                    for (int j = 0; j < dh; ++j) dp += dct[j] * vu[j];
                    dprow[static_cast<size_t>(u)] = dp;
                    dot += dp * prow[u];
                    double* dvu = &dv[static_cast<size_t>(u) * d + off];
                    const double p = prow[u];
                    for (int j = 0; j < dh; ++j) dvu[j] += p * dct[j];
                }
                const double* qt = &lc.q[static_cast<size_t>(t) * d + off];
                double* dqt = &dq[static_cast<size_t>(t) * d + off];
                for (int u = 0; u <= t; ++u) {
                    const double ds =
                        prow[u] * (dprow[static_cast<size_t>(u)] - dot) *
                        attn_scale;
                    const double* ku = &lc.k[static_cast<size_t>(u) * d + off];
                    double* dku = &dk[static_cast<size_t>(u) * d + off];
                    for (int j = 0; j < dh; ++j) {
                        dqt[j] += ds * ku[j];
                        dku[j] += ds * qt[j];
                    }
                }
            }
        }

        // q/k/v projections backward
        auto project_back = [&](int proj, const float* wm, int w_off,
                                const std::vector<double>& dout) {
            const int slot =
                lora_slot.empty() ? -1
                                  : lora_slot[static_cast<size_t>(l)]
                                             [static_cast<size_t>(proj)];
            for (int t = 0; t < T; ++t) {
                const double* dyt = &dout[static_cast<size_t>(t) * d];
                const double* xt = &lc.x1[static_cast<size_t>(t) * d];
                if (grads.train_base) {
                    outer_accumulate(bgrad(w_off), dyt, xt, d, d);
                    for (int i = 0; i < d; ++i) bgrad(w_off + 1)[i] += dyt[i];
                }
                matvec_transpose_add(wm, dyt, d, d,
                                     &dx1[static_cast<size_t>(t) * d]);
                if (lw.lora_a[proj]) {
                    const double* u =
                        &lc.lora_u[proj][static_cast<size_t>(t) * r];
                    double du[64];
                    for (int ri = 0; ri < r; ++ri) du[ri] = 0.0;
                    for (int i = 0; i < d; ++i) {
                        const float* brow =
                            lw.lora_b[proj] + static_cast<size_t>(i) * r;
                        const double g = lscale * dyt[i];
                        for (int ri = 0; ri < r; ++ri)
                            du[ri] += static_cast<double>(brow[ri]) * g;
                    }
                    if (grads.train_adapter && slot >= 0) {
                        auto& ga = grads.adapter[static_cast<size_t>(slot)];
                        auto& gb = grads.adapter[static_cast<size_t>(slot) + 1];
                        for (int i = 0; i < d; ++i) {
                            const double g = lscale * dyt[i];
                            for (int ri = 0; ri < r; ++ri)
                                gb[static_cast<size_t>(i) * r + ri] += g * u[ri];
                        }
                        for (int ri = 0; ri < r; ++ri) {
                            const double g = du[ri];
                            for (int j = 0; j < d; ++j)
                                ga[static_cast<size_t>(ri) * d + j] += g * xt[j];
                        }
                    }
                    double* dx1t = &dx1[static_cast<size_t>(t) * d];
                    for (int ri = 0; ri < r; ++ri) {
                        const float* arow =
                            lw.lora_a[proj] + static_cast<size_t>(ri) * d;
                        const double g = du[ri];
                        for (int j = 0; j < d; ++j)
                            dx1t[j] += static_cast<double>(arow[j]) * g;
                    }
                }
            }
        };

        project_back(kProjQ, lw.wq, 2, dq);
        project_back(kProjK, lw.wk, 4, dk);
        project_back(kProjV, lw.wv, 6, dv);

        // LN1 backward into d res_in
        for (int t = 0; t < T; ++t) {
            layer_norm_backward(lw.ln1_g, &dx1[static_cast<size_t>(t) * d],
                                &lc.xhat1[static_cast<size_t>(t) * d],
                                lc.inv1[static_cast<size_t>(t)], d,
                                &dh_buf[static_cast<size_t>(t) * d], bgrad(0),
                                bgrad(1));
        }
        // dh_buf now holds d res_in for the layer below
    }

    // Embeddings.
    if (grads.train_base) {
        auto& gtok = grads.base[kTok];
        auto& gpos = grads.base[kPos];
        for (int t = 0; t < T; ++t) {
            const double* g = &dh_buf[static_cast<size_t>(t) * d];
            double* trow = &gtok[static_cast<size_t>(seq.ids[static_cast<size_t>(t)]) * d];
            double* prow = &gpos[static_cast<size_t>(t) * d];
            for (int i = 0; i < d; ++i) {
                trow[i] += g[i];
                prow[i] += g[i];
            }
        }
    }

    return loss;
}

} // namespace fsdlab::detail

namespace fsdlab {

std::vector<double> token_logprobs(const LanguageModel& model,
                                   const TokenSeq& seq) {
    return detail::forward_logprobs(model, seq, false).target_logprobs;
}

std::vector<std::vector<double>> next_token_distributions(
    const LanguageModel& model, const TokenSeq& seq) {
    return detail::forward_logprobs(model, seq, true).full_rows;
}

} // namespace fsdlab
