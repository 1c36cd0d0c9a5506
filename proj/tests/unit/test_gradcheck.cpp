#include <doctest.h>

#include <cmath>

#include "compute.hpp"
#include "fsdlab/model.hpp"
#include "fsdlab/train.hpp"
#include "helpers.hpp"

using namespace fsdlab;

TEST_CASE("analytic gradient matches central differences on a tiny model") {
    LanguageModel m = init_model(testutil::tiny_config(41));
    TokenSeq seq = m.encode_text("The 2014 games were held in Berlin.");
    double err = grad_check(m, seq, {});
    CHECK(err < 1e-3);
}

TEST_CASE("gradient check covers adapter parameters too") {
    LanguageModel m = init_model(testutil::tiny_config(43));
    attach_adapters(m, AdapterSpec{}, 99);
    // give B some mass so its gradient path is active
    for (auto& t : m.adapters->params.tensors)
        if (t.name.ends_with("lora_b"))
            for (size_t i = 0; i < t.data.size(); ++i)
                t.data[i] = static_cast<float>(0.01 * (static_cast<int>(i % 7) - 3));
    TokenSeq seq = m.encode_text("zebra quick fox 2023");
    double err = grad_check(m, seq, {});
    CHECK(err < 1e-3);
}

TEST_CASE("constant-logit model: output-bias gradient is softmax minus onehot") {
    LanguageModel m = testutil::uniform_model(47);
    TokenSeq seq = m.encode_text("abca");
    const size_t n = seq.scored_tokens();

    detail::GradStore grads;
    grads.init(m, true, false);
    detail::loss_and_grad(m, seq, grads);

    const int bias_index = m.params.index_of("out.bias");
    REQUIRE(bias_index >= 0);
    const auto& gbias = grads.base[static_cast<size_t>(bias_index)];

    std::vector<double> want(259, 0.0);
    for (int v = 0; v < 259; ++v) want[v] = 1.0 / 259.0;
    for (size_t t = 1; t < seq.ids.size(); ++t)
        want[static_cast<size_t>(seq.ids[t])] -= 1.0 / static_cast<double>(n);
    for (int v = 0; v < 259; ++v)
        CHECK(std::fabs(gbias[v] - want[v]) < 1e-6);
}

TEST_CASE("empty parameter sample returns zero by definition") {
    LanguageModel m = init_model(testutil::tiny_config(53));
    TokenSeq seq = m.encode_text("xy");
    GradCheckOptions opts;
    opts.sample_count = 0;
    CHECK(grad_check(m, seq, opts) == 0.0);
}
