#include "fsdlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "compute.hpp"
#include "fsdlab/errors.hpp"
#include "fsdlab/parallel.hpp"
#include "fsdlab/rng.hpp"

namespace fsdlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Adam state mirroring a GradStore's layout, updating float tensors from
// double moments.
struct AdamState {
    std::vector<std::vector<double>> m_base, v_base;
    std::vector<std::vector<double>> m_adapter, v_adapter;
    int64_t step = 0;

    void init(const detail::GradStore& grads) {
        auto mirror = [](const std::vector<std::vector<double>>& src,
                         std::vector<std::vector<double>>& dst) {
            dst.resize(src.size());
            for (size_t i = 0; i < src.size(); ++i)
                dst[i].assign(src[i].size(), 0.0);
        };
        mirror(grads.base, m_base);
        mirror(grads.base, v_base);
        mirror(grads.adapter, m_adapter);
        mirror(grads.adapter, v_adapter);
    }

    void apply(LanguageModel& model, const detail::GradStore& grads,
               const TrainConfig& cfg, double lr) {
        ++step;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        auto update = [&](std::vector<float>& params,
                          const std::vector<double>& g, std::vector<double>& m,
                          std::vector<double>& v) {
            for (size_t j = 0; j < params.size(); ++j) {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                const double mhat = m[j] / bc1;
                const double vhat = v[j] / bc2;
                const double next = static_cast<double>(params[j]) -
                                    lr * mhat / (std::sqrt(vhat) + cfg.eps);
                params[j] = static_cast<float>(next);
            }
        };
        if (grads.train_base) {
            for (size_t i = 0; i < grads.base.size(); ++i)
                update(model.params.tensors[i].data, grads.base[i], m_base[i],
                       v_base[i]);
        }
        if (grads.train_adapter) {
            for (size_t i = 0; i < grads.adapter.size(); ++i)
                update(model.adapters->params.tensors[i].data, grads.adapter[i],
                       m_adapter[i], v_adapter[i]);
        }
    }
};

// Shared optimization loop for train() and finetune().
std::vector<double> run_optimization(LanguageModel& model,
                                     const std::vector<TokenSeq>& corpus,
                                     const TrainConfig& cfg, bool train_base,
                                     bool train_adapter) {
    cfg.validate();
    if (corpus.empty())
        raise(ErrorKind::Config, "training corpus must not be empty");
    for (const auto& seq : corpus) {
        if (seq.ids.size() > static_cast<size_t>(model.config.context_len))
            raise(ErrorKind::SequenceTooLong,
                  "corpus sequence exceeds context_len");
        if (seq.ids.size() < 2)
            raise(ErrorKind::InsufficientTokens,
                  "corpus sequence has no content tokens");
    }

    const size_t n = corpus.size();
    const size_t batch = static_cast<size_t>(cfg.batch_size);
    const size_t batches_per_epoch = (n + batch - 1) / batch;
    const size_t total_steps =
        static_cast<size_t>(cfg.epochs) * batches_per_epoch;

    detail::GradStore batch_grads;
    batch_grads.init(model, train_base, train_adapter);
    AdamState adam;
    adam.init(batch_grads);

    std::vector<detail::GradStore> seq_grads(batch);
    std::vector<double> seq_loss(batch);
    for (auto& g : seq_grads) g.init(model, train_base, train_adapter);

    Rng rng(cfg.seed);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> history;
    history.reserve(static_cast<size_t>(cfg.epochs));
    size_t step = 0;

    for (int32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss_sum = 0.0;
        for (size_t start = 0; start < n; start += batch) {
            const size_t count = std::min(batch, n - start);
            parallel_for(count, [&](size_t i) {
                seq_grads[i].zero();
                seq_loss[i] = detail::loss_and_grad(
                    model, corpus[order[start + i]], seq_grads[i]);
            });

            double batch_loss = 0.0;
            batch_grads.zero();
            const double inv_count = 1.0 / static_cast<double>(count);
            for (size_t i = 0; i < count; ++i) {
                batch_loss += seq_loss[i];
                batch_grads.add_scaled(seq_grads[i], inv_count);
            }
            batch_loss *= inv_count;
            if (!std::isfinite(batch_loss))
                raise(ErrorKind::NumericFailure,
                      "non-finite loss at epoch " + std::to_string(epoch) +
                          ", step " + std::to_string(step) +
                          "; aborting before the parameters are damaged");
            epoch_loss_sum += batch_loss * static_cast<double>(count);

            if (cfg.clip_norm > 0.0) {
                const double norm = std::sqrt(batch_grads.squared_norm());
                if (norm > cfg.clip_norm)
                    batch_grads.scale_all(cfg.clip_norm / norm);
            }
            const double lr =
                0.5 * cfg.initial_lr *
                (1.0 + std::cos(kPi * static_cast<double>(step) /
                                static_cast<double>(total_steps)));
            adam.apply(model, batch_grads, cfg, lr);
            ++step;
        }
        history.push_back(epoch_loss_sum / static_cast<double>(n));
    }

    if (!model.params.all_finite() ||
        (model.adapters && !model.adapters->params.all_finite()))
        raise(ErrorKind::NumericFailure,
              "non-finite parameters after optimization");
    return history;
}

} // namespace

TrainResult train(LanguageModel& model, const std::vector<TokenSeq>& corpus,
                  const TrainConfig& cfg) {
    TrainResult result;
    result.loss_history = run_optimization(model, corpus, cfg,
                                           /*train_base=*/true,
                                           /*train_adapter=*/false);
    return result;
}

LanguageModel finetune(const LanguageModel& model,
                       const std::vector<TokenSeq>& ft_set,
                       const AdapterSpec& lora, const TrainConfig& cfg,
                       const FinetuneOptions& options) {
    if (model.adapters)
        raise(ErrorKind::Config,
              "finetune expects a model without attached adapters");
    if (ft_set.empty())
        raise(ErrorKind::Config, "fine-tuning set must not be empty");

    LanguageModel tuned = model;
    if (options.full_finetune) {
        run_optimization(tuned, ft_set, cfg, /*train_base=*/true,
                         /*train_adapter=*/false);
    } else {
        attach_adapters(tuned, lora, cfg.seed);
        run_optimization(tuned, ft_set, cfg, /*train_base=*/false,
                         /*train_adapter=*/true);
    }
    return tuned;
}

double grad_check(const LanguageModel& model, const TokenSeq& seq,
                  const GradCheckOptions& options) {
    if (options.sample_count == 0) return 0.0;

    LanguageModel probe = model; // mutated locally, caller's model untouched
    detail::GradStore grads;
    grads.init(probe, /*with_base=*/true,
               /*with_adapter=*/probe.adapters.has_value());
    detail::loss_and_grad(probe, seq, grads);

    struct Slot {
        bool adapter;
        size_t tensor;
        size_t offset;
    };
    std::vector<Slot> all;
    for (size_t i = 0; i < probe.params.tensors.size(); ++i)
        for (size_t j = 0; j < probe.params.tensors[i].data.size(); ++j)
            all.push_back({false, i, j});
    if (probe.adapters) {
        for (size_t i = 0; i < probe.adapters->params.tensors.size(); ++i)
            for (size_t j = 0; j < probe.adapters->params.tensors[i].data.size();
                 ++j)
                all.push_back({true, i, j});
    }

    Rng rng(options.seed);
    shuffle(all, rng);
    const size_t count = std::min(options.sample_count, all.size());

    double max_err = 0.0;
    for (size_t s = 0; s < count; ++s) {
        const Slot& slot = all[s];
        std::vector<float>& data =
            slot.adapter ? probe.adapters->params.tensors[slot.tensor].data
                         : probe.params.tensors[slot.tensor].data;
        const float original = data[slot.offset];

        data[slot.offset] =
            static_cast<float>(static_cast<double>(original) + options.step);
        const double plus_w = static_cast<double>(data[slot.offset]);
        const double loss_plus = detail::loss_only(probe, seq);

        data[slot.offset] =
            static_cast<float>(static_cast<double>(original) - options.step);
        const double minus_w = static_cast<double>(data[slot.offset]);
        const double loss_minus = detail::loss_only(probe, seq);

        data[slot.offset] = original;

        const double numeric = (loss_plus - loss_minus) / (plus_w - minus_w);
        const double analytic = slot.adapter
                                    ? grads.adapter[slot.tensor][slot.offset]
                                    : grads.base[slot.tensor][slot.offset];
        // Guarded relative error: tiny gradients are judged on an absolute
        // scale of 1e-3 rather than blowing up the ratio.
        const double denom =
            std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
        max_err = std::max(max_err, std::fabs(analytic - numeric) / denom);
    }
    return max_err;
}

} // namespace fsdlab
