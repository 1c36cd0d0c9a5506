#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fsdlab/errors.hpp"
#include "fsdlab/model.hpp"
#include "helpers.hpp"

using namespace fsdlab;

namespace {

// Straight-line reference forward pass, recomputed per position from the
// named tensors. Deliberately written independently of the library path.
std::vector<double> reference_logprobs(const LanguageModel& m,
                                       const std::vector<int32_t>& ids) {
    const int d = m.config.embed_dim;
    const int nh = m.config.num_heads;
    const int dh = d / nh;
    const int f = m.config.feedforward_dim;
    const int v = m.config.vocab_size;
    const int T = static_cast<int>(ids.size());

    auto get = [&](const std::string& name) -> const std::vector<float>& {
        return m.params.at(name).data;
    };
    auto ln = [&](const std::vector<double>& x, const std::vector<float>& g,
                  const std::vector<float>& b) {
        double mu = 0;
        for (double xi : x) mu += xi;
        mu /= x.size();
        double var = 0;
        for (double xi : x) var += (xi - mu) * (xi - mu);
        var /= x.size();
        double inv = 1.0 / std::sqrt(var + 1e-5);
        std::vector<double> y(x.size());
        for (size_t i = 0; i < x.size(); ++i)
            y[i] = g[i] * ((x[i] - mu) * inv) + b[i];
        return y;
    };
    auto matvec = [&](const std::vector<float>& w, const std::vector<float>& b,
                      const std::vector<double>& x, int out) {
        std::vector<double> y(out);
        const int in = static_cast<int>(x.size());
        for (int i = 0; i < out; ++i) {
            double acc = b.empty() ? 0.0 : b[i];
            for (int j = 0; j < in; ++j) acc += w[i * in + j] * x[j];
            y[i] = acc;
        }
        return y;
    };

    std::vector<std::vector<double>> h(T, std::vector<double>(d));
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < d; ++i)
            h[t][i] = get("tok_embed")[ids[t] * d + i] +
                      get("pos_embed")[t * d + i];

    for (int l = 0; l < m.config.num_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        std::vector<std::vector<double>> q(T), k(T), vv(T);
        for (int t = 0; t < T; ++t) {
            auto x = ln(h[t], get(p + "ln1.gamma"), get(p + "ln1.beta"));
            q[t] = matvec(get(p + "attn_q.weight"), get(p + "attn_q.bias"), x, d);
            k[t] = matvec(get(p + "attn_k.weight"), get(p + "attn_k.bias"), x, d);
            vv[t] = matvec(get(p + "attn_v.weight"), get(p + "attn_v.bias"), x, d);
        }
        std::vector<std::vector<double>> attn(T, std::vector<double>(d, 0.0));
        for (int t = 0; t < T; ++t) {
            for (int head = 0; head < nh; ++head) {
                std::vector<double> scores(t + 1);
                for (int u = 0; u <= t; ++u) {
                    double s = 0;
                    for (int j = 0; j < dh; ++j)
                        s += q[t][head * dh + j] * k[u][head * dh + j];
                    scores[u] = s / std::sqrt(static_cast<double>(dh));
                }
                double mx = scores[0];
                for (double s : scores) mx = std::max(mx, s);
                double denom = 0;
                for (double& s : scores) {
                    s = std::exp(s - mx);
                    denom += s;
                }
                for (int u = 0; u <= t; ++u)
                    for (int j = 0; j < dh; ++j)
                        attn[t][head * dh + j] +=
                            scores[u] / denom * vv[u][head * dh + j];
            }
            auto o = matvec(get(p + "attn_o.weight"), get(p + "attn_o.bias"),
                            attn[t], d);
            for (int i = 0; i < d; ++i) h[t][i] += o[i];
        }
        for (int t = 0; t < T; ++t) {
            auto y = ln(h[t], get(p + "ln2.gamma"), get(p + "ln2.beta"));
            auto z = matvec(get(p + "mlp.w1"), get(p + "mlp.b1"), y, f);
            for (double& zi : z)
                zi = 0.5 * zi * (1.0 + std::erf(zi / std::sqrt(2.0)));
            auto mm = matvec(get(p + "mlp.w2"), get(p + "mlp.b2"), z, d);
            for (int i = 0; i < d; ++i) h[t][i] += mm[i];
        }
    }

    std::vector<double> out(T - 1);
    for (int t = 0; t < T - 1; ++t) {
        auto fx = ln(h[t], get("ln_f.gamma"), get("ln_f.beta"));
        auto logits = matvec(get("out.weight"), get("out.bias"), fx, v);
        double mx = logits[0];
        for (double s : logits) mx = std::max(mx, s);
        double denom = 0;
        for (double s : logits) denom += std::exp(s - mx);
        out[t] = logits[ids[t + 1]] - (mx + std::log(denom));
    }
    return out;
}

} // namespace

TEST_CASE("uniform-logit model scores every token at -ln(vocab)") {
    LanguageModel m = testutil::uniform_model();
    TokenSeq seq = m.encode_text("abc");
    auto lps = token_logprobs(m, seq);
    REQUIRE(lps.size() == 3);
    for (double lp : lps)
        CHECK(lp == doctest::Approx(-std::log(259.0)).epsilon(1e-12));
}

TEST_CASE("freshly initialized adapters leave scores bitwise unchanged") {
    LanguageModel plain = init_model(testutil::tiny_config(3));
    LanguageModel adapted = plain;
    attach_adapters(adapted, AdapterSpec{}, 991);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        TokenSeq seq = plain.encode_text(testutil::random_text(rng));
        CHECK(token_logprobs(plain, seq) == token_logprobs(adapted, seq));
    }
}

TEST_CASE("forward pass matches an independent re-implementation") {
    LanguageModel m = init_model(testutil::tiny_config(11));
    TokenSeq seq = m.encode_text("HeLo");
    REQUIRE(seq.ids.size() == 5);
    auto got = token_logprobs(m, seq);
    auto want = reference_logprobs(m, seq.ids);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i)
        CHECK(std::fabs(got[i] - want[i]) / std::fabs(want[i]) < 1e-5);

    // and with adapters carrying nonzero B
    attach_adapters(m, AdapterSpec{}, 17);
    auto& b0 = m.adapters->params.at("layer0.attn_q.lora_b").data;
    std::mt19937_64 rng(29);
    for (auto& x : b0)
        x = static_cast<float>((static_cast<double>(rng() >> 11) * 0x1.0p-53 -
                                0.5) *
                               0.1);
    auto adapted = token_logprobs(m, seq);
    // adapters change the result
    CHECK(adapted != got);
}

TEST_CASE("next-token distributions are normalized for every prefix") {
    LanguageModel m = init_model(testutil::tiny_config(13));
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 3; ++trial) {
        TokenSeq seq = m.encode_text(testutil::random_text(rng, 4, 20));
        auto rows = next_token_distributions(m, seq);
        REQUIRE(rows.size() == seq.ids.size());
        for (const auto& row : rows) {
            REQUIRE(row.size() == 259);
            double sum = 0;
            for (double lp : row) sum += std::exp(lp);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("causal masking: prefix scores equal full-sequence prefix bitwise") {
    LanguageModel m = init_model(testutil::tiny_config(19));
    TokenSeq full = m.encode_text("a longer sample sentence");
    TokenSeq prefix;
    prefix.ids.assign(full.ids.begin(), full.ids.begin() + 9);
    auto full_lps = token_logprobs(m, full);
    auto prefix_lps = token_logprobs(m, prefix);
    REQUIRE(prefix_lps.size() == 8);
    for (size_t i = 0; i < prefix_lps.size(); ++i)
        CHECK(prefix_lps[i] == full_lps[i]); // bitwise
}

TEST_CASE("sequence validation errors") {
    LanguageModel m = init_model(testutil::tiny_config(23));

    TokenSeq lone;
    lone.ids = {m.vocab.bos};
    CHECK_THROWS_WITH_AS(static_cast<void>(token_logprobs(m, lone)),
                         doctest::Contains("content token"), Error);

    TokenSeq too_long = m.encode_text(std::string(400, 'q'));
    too_long.ids.resize(m.config.context_len + 1, 'q');
    try {
        token_logprobs(m, too_long);
        FAIL("expected length error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SequenceTooLong);
    }

    TokenSeq no_bos;
    no_bos.ids = {'a', 'b'};
    CHECK_THROWS_AS(static_cast<void>(token_logprobs(m, no_bos)), Error);
}

TEST_CASE("initialization is seed-deterministic") {
    LanguageModel a = init_model(testutil::tiny_config(77));
    LanguageModel b = init_model(testutil::tiny_config(77));
    LanguageModel c = init_model(testutil::tiny_config(78));
    bool all_equal = true;
    bool any_diff = false;
    for (size_t i = 0; i < a.params.tensors.size(); ++i) {
        if (a.params.tensors[i].data != b.params.tensors[i].data)
            all_equal = false;
        if (a.params.tensors[i].data != c.params.tensors[i].data)
            any_diff = true;
    }
    CHECK(all_equal);
    CHECK(any_diff);
    CHECK(a.params.all_finite());
}
