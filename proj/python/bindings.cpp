// Python bindings for the core operations: encoding, training, scoring,
// deviation detection, metrics and corpus tooling.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "fsdlab/checkpoint.hpp"
#include "fsdlab/corpus.hpp"
#include "fsdlab/errors.hpp"
#include "fsdlab/experiment.hpp"
#include "fsdlab/fsd.hpp"
#include "fsdlab/metrics.hpp"
#include "fsdlab/model.hpp"
#include "fsdlab/scoring.hpp"
#include "fsdlab/train.hpp"

namespace py = pybind11;
using namespace fsdlab;

namespace {

ScoreFunctionId make_fn(const std::string& name, double k) {
    ScoreFunctionId fn;
    fn.kind = fn_kind_from_name(name);
    fn.k_percent = k;
    fn.validate();
    return fn;
}

std::vector<Label> labels_from_ints(const std::vector<int>& labels) {
    std::vector<Label> out;
    out.reserve(labels.size());
    for (int v : labels) {
        if (v != 0 && v != 1)
            raise(ErrorKind::Config, "labels must be 0 (non-member) or 1 (member)");
        out.push_back(v == 1 ? Label::Member : Label::NonMember);
    }
    return out;
}

std::vector<TokenSeq> encode_all(const LanguageModel& model,
                                 const std::vector<std::string>& texts) {
    std::vector<TokenSeq> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(model.encode_text(text));
    return out;
}

LabeledDataset dataset_from_pairs(
    const std::vector<std::pair<std::string, int>>& pairs) {
    LabeledDataset ds;
    size_t idx = 0;
    for (const auto& [text, label] : pairs) {
        if (label != 0 && label != 1)
            raise(ErrorKind::Config, "labels must be 0 or 1");
        ds.examples.push_back({std::to_string(idx++), text,
                               label == 1 ? Label::Member : Label::NonMember});
    }
    return ds;
}

} // namespace

PYBIND11_MODULE(_fsdlab, m) {
    m.doc() = "membership detection laboratory: tiny LM, scoring functions, "
              "fine-tuned score deviation";

    py::register_exception<Error>(m, "FsdlabError");

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init([](int32_t vocab_size, int32_t context_len,
                         int32_t embed_dim, int32_t num_layers,
                         int32_t num_heads, int32_t feedforward_dim,
                         uint64_t seed) {
                 ModelConfig cfg{vocab_size, context_len,    embed_dim,
                                 num_layers, num_heads, feedforward_dim,
                                 seed};
                 cfg.validate();
                 return cfg;
             }),
             py::arg("vocab_size") = 259, py::arg("context_len") = 257,
             py::arg("embed_dim") = 64, py::arg("num_layers") = 2,
             py::arg("num_heads") = 4, py::arg("feedforward_dim") = 256,
             py::arg("seed") = 42)
        .def_readonly("vocab_size", &ModelConfig::vocab_size)
        .def_readonly("context_len", &ModelConfig::context_len)
        .def_readonly("embed_dim", &ModelConfig::embed_dim)
        .def_readonly("num_layers", &ModelConfig::num_layers)
        .def_readonly("num_heads", &ModelConfig::num_heads)
        .def_readonly("feedforward_dim", &ModelConfig::feedforward_dim)
        .def_readonly("seed", &ModelConfig::seed);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](int32_t epochs, int32_t batch_size, double initial_lr,
                         uint64_t seed, double clip_norm) {
                 TrainConfig cfg;
                 cfg.epochs = epochs;
                 cfg.batch_size = batch_size;
                 cfg.initial_lr = initial_lr;
                 cfg.seed = seed;
                 cfg.clip_norm = clip_norm;
                 cfg.validate();
                 return cfg;
             }),
             py::arg("epochs") = 3, py::arg("batch_size") = 8,
             py::arg("initial_lr") = 1e-3, py::arg("seed") = 42,
             py::arg("clip_norm") = 1.0);

    py::class_<AdapterSpec>(m, "AdapterSpec")
        .def(py::init([](int32_t rank, double alpha,
                         std::vector<std::string> targets, double init_std) {
                 AdapterSpec spec;
                 spec.rank = rank;
                 spec.alpha = alpha;
                 spec.targets = std::move(targets);
                 spec.init_std = init_std;
                 spec.validate();
                 return spec;
             }),
             py::arg("rank") = 8, py::arg("alpha") = 16.0,
             py::arg("targets") =
                 std::vector<std::string>{"attn_q", "attn_v"},
             py::arg("init_std") = 0.02);

    py::class_<LanguageModel>(m, "LanguageModel")
        .def_property_readonly(
            "config", [](const LanguageModel& model) { return model.config; })
        .def_property_readonly("has_adapters",
                               [](const LanguageModel& model) {
                                   return model.adapters.has_value();
                               })
        .def("encode",
             [](const LanguageModel& model, const std::string& text) {
                 TokenSeq seq = model.encode_text(text);
                 return py::make_tuple(seq.ids, seq.truncated);
             },
             py::arg("text"));

    m.def("init_model", &init_model, py::arg("config"));

    m.def("encode",
          [](const std::string& text, size_t max_content) {
              Vocab vocab;
              TokenSeq seq = encode(text, vocab, max_content);
              return py::make_tuple(seq.ids, seq.truncated);
          },
          py::arg("text"), py::arg("max_content") = SIZE_MAX);
    m.def("decode",
          [](const std::vector<int32_t>& ids) {
              Vocab vocab;
              TokenSeq seq;
              seq.ids = ids;
              return py::bytes(decode(seq, vocab));
          },
          py::arg("ids"));

    m.def("token_logprobs",
          [](const LanguageModel& model, const std::string& text) {
              return token_logprobs(model, model.encode_text(text));
          },
          py::arg("model"), py::arg("text"));
    m.def("next_token_distributions",
          [](const LanguageModel& model, const std::string& text) {
              return next_token_distributions(model, model.encode_text(text));
          },
          py::arg("model"), py::arg("text"));

    m.def("train_model",
          [](LanguageModel& model, const std::vector<std::string>& texts,
             const TrainConfig& cfg) {
              return train(model, encode_all(model, texts), cfg).loss_history;
          },
          py::arg("model"), py::arg("texts"), py::arg("config"));

    m.def("finetune_model",
          [](const LanguageModel& model, const std::vector<std::string>& texts,
             const AdapterSpec& lora, const TrainConfig& cfg, bool full) {
              return finetune(model, encode_all(model, texts), lora, cfg,
                              {.full_finetune = full});
          },
          py::arg("model"), py::arg("texts"), py::arg("lora") = AdapterSpec{},
          py::arg("config") = TrainConfig{}, py::arg("full") = false);

    m.def("grad_check",
          [](const LanguageModel& model, const std::string& text, double step,
             size_t samples, uint64_t seed) {
              return grad_check(model, model.encode_text(text),
                                {step, samples, seed});
          },
          py::arg("model"), py::arg("text"), py::arg("step") = 1e-4,
          py::arg("samples") = 256, py::arg("seed") = 12345);

    m.def("save_model", py::overload_cast<const LanguageModel&,
                                          const std::string&>(&save_model),
          py::arg("model"), py::arg("path"));
    m.def("load_model",
          py::overload_cast<const std::string&>(&load_model), py::arg("path"));
    m.def("save_model_bytes",
          [](const LanguageModel& model) {
              return py::bytes(save_model_bytes(model));
          },
          py::arg("model"));
    m.def("load_model_bytes",
          [](const py::bytes& blob) {
              return load_model_bytes(std::string(blob));
          },
          py::arg("blob"));

    m.def("perplexity", &perplexity, py::arg("model"), py::arg("text"));
    m.def("min_k_raw", &min_k_raw, py::arg("model"), py::arg("text"),
          py::arg("k_percent") = 20.0);
    m.def("zlib_entropy",
          [](const std::string& text) { return zlib_entropy(text); },
          py::arg("text"));
    m.def("zlib_score", &zlib_score, py::arg("model"), py::arg("text"));
    m.def("lowercase_score", &lowercase_score, py::arg("model"),
          py::arg("text"));
    m.def("score",
          [](const LanguageModel& model, const std::string& text,
             const std::string& fn, double k) {
              return score(model, text, make_fn(fn, k));
          },
          py::arg("model"), py::arg("text"), py::arg("fn"),
          py::arg("k") = 20.0);

    m.def("fsd_score",
          [](const LanguageModel& base, const LanguageModel& tuned,
             const std::string& text, const std::string& fn, double k) {
              return fsd_score(base, tuned, text, make_fn(fn, k));
          },
          py::arg("base"), py::arg("tuned"), py::arg("text"), py::arg("fn"),
          py::arg("k") = 20.0);

    m.def("build_finetune_set",
          [](const std::vector<std::pair<std::string, int>>& examples,
             double fraction, uint64_t seed, const std::string& compose) {
              FinetuneSplit split =
                  build_finetune_set(dataset_from_pairs(examples), fraction,
                                     seed, composition_from_name(compose));
              std::vector<std::pair<std::string, int>> test;
              for (const auto& ex : split.test_set.examples)
                  test.emplace_back(ex.text, label_to_int(ex.label));
              return py::make_tuple(split.finetune_texts, test);
          },
          py::arg("examples"), py::arg("fraction") = 0.30,
          py::arg("seed") = 42, py::arg("compose") = "non");

    m.def("select_threshold",
          [](const std::vector<double>& scores, const std::vector<int>& labels) {
              return select_threshold(scores, labels_from_ints(labels));
          },
          py::arg("scores"), py::arg("labels"));

    m.def("auc",
          [](const std::vector<double>& scores, const std::vector<int>& labels) {
              return auc(scores, labels_from_ints(labels));
          },
          py::arg("scores"), py::arg("labels"));
    m.def("tpr_at_fpr",
          [](const std::vector<double>& scores, const std::vector<int>& labels,
             double budget) {
              return tpr_at_fpr(scores, labels_from_ints(labels), budget);
          },
          py::arg("scores"), py::arg("labels"), py::arg("fpr_budget") = 0.05);

    py::class_<CorpusConfig>(m, "CorpusConfig")
        .def(py::init([](size_t n_members, size_t n_nonmembers,
                         std::string template_pool,
                         std::pair<int, int> member_years,
                         std::pair<int, int> nonmember_years,
                         bool temporal_shift, size_t min_len, size_t max_len,
                         uint64_t seed) {
                 CorpusConfig cfg;
                 cfg.n_members = n_members;
                 cfg.n_nonmembers = n_nonmembers;
                 cfg.template_pool = std::move(template_pool);
                 cfg.member_years = {member_years.first, member_years.second};
                 cfg.nonmember_years = {nonmember_years.first,
                                        nonmember_years.second};
                 cfg.temporal_shift = temporal_shift;
                 cfg.min_len = min_len;
                 cfg.max_len = max_len;
                 cfg.seed = seed;
                 cfg.validate();
                 return cfg;
             }),
             py::arg("n_members") = 2000, py::arg("n_nonmembers") = 400,
             py::arg("template_pool") = "events",
             py::arg("member_years") = std::pair<int, int>{2010, 2022},
             py::arg("nonmember_years") = std::pair<int, int>{2023, 2024},
             py::arg("temporal_shift") = true, py::arg("min_len") = 64,
             py::arg("max_len") = 224, py::arg("seed") = 42);

    m.def("generate_corpus",
          [](const CorpusConfig& cfg) {
              LabeledDataset ds = generate(cfg);
              std::vector<std::pair<std::string, int>> out;
              out.reserve(ds.size());
              for (const auto& ex : ds.examples)
                  out.emplace_back(ex.text, label_to_int(ex.label));
              return out;
          },
          py::arg("config"));

    m.def("transform_deletion",
          [](const std::string& text) { return transform_deletion(text); },
          py::arg("text"));
    m.def("transform_replacement",
          [](const std::string& text, int target_year) {
              return transform_replacement(text, target_year);
          },
          py::arg("text"), py::arg("target_year") = 2023);

    m.def("load_jsonl",
          [](const std::string& path) {
              LabeledDataset ds = load_jsonl(path);
              std::vector<std::pair<std::string, int>> out;
              for (const auto& ex : ds.examples)
                  out.emplace_back(ex.text, label_to_int(ex.label));
              return out;
          },
          py::arg("path"));
    m.def("save_jsonl",
          [](const std::vector<std::pair<std::string, int>>& examples,
             const std::string& path) {
              save_jsonl(dataset_from_pairs(examples), path);
          },
          py::arg("examples"), py::arg("path"));

    m.def("run_experiment_json",
          [](const LanguageModel& base,
             const std::vector<std::pair<std::string, int>>& examples,
             const std::vector<std::string>& fns, double k, double fraction,
             uint64_t split_seed, const std::string& compose,
             const AdapterSpec& lora, const TrainConfig& finetune_cfg,
             bool full_finetune, std::optional<size_t> finetune_size,
             uint64_t subsample_seed, double fpr_budget) {
              ExperimentConfig cfg;
              cfg.split_fraction = fraction;
              cfg.split_seed = split_seed;
              cfg.compose = composition_from_name(compose);
              cfg.lora = lora;
              cfg.finetune_cfg = finetune_cfg;
              cfg.full_finetune = full_finetune;
              cfg.finetune_size = finetune_size;
              cfg.subsample_seed = subsample_seed;
              cfg.fpr_budget = fpr_budget;
              std::vector<ScoreFunctionId> ids;
              for (const auto& name : fns) ids.push_back(make_fn(name, k));
              return report_to_json(run_experiment(
                  base, dataset_from_pairs(examples), ids, cfg));
          },
          py::arg("base"), py::arg("examples"), py::arg("fns"),
          py::arg("k") = 20.0, py::arg("fraction") = 0.30,
          py::arg("split_seed") = 42, py::arg("compose") = "non",
          py::arg("lora") = AdapterSpec{},
          py::arg("finetune_cfg") = TrainConfig{},
          py::arg("full_finetune") = false,
          py::arg("finetune_size") = std::nullopt,
          py::arg("subsample_seed") = 42, py::arg("fpr_budget") = 0.05);
}
