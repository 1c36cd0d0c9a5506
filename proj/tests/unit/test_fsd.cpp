#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fsdlab/errors.hpp"
#include "fsdlab/fsd.hpp"
#include "fsdlab/train.hpp"
#include "helpers.hpp"

using namespace fsdlab;

namespace {

// Independent copy of the declared split shuffle: mt19937_64, modulo
// draws, descending Fisher-Yates.
std::vector<size_t> declared_shuffle(size_t n, uint64_t seed) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 engine(seed);
    for (size_t i = n; i > 1; --i) {
        size_t j = static_cast<size_t>(engine() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

LabeledDataset ten_examples() {
    LabeledDataset ds;
    for (int i = 0; i < 10; ++i) {
        LabeledExample ex;
        ex.id = "ex" + std::to_string(i);
        ex.text = "text number " + std::to_string(i);
        ex.label = i < 5 ? Label::Member : Label::NonMember;
        ds.examples.push_back(ex);
    }
    return ds;
}

double brute_force_best_accuracy(const std::vector<double>& scores,
                                 const std::vector<Label>& labels) {
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> candidates = {-std::numeric_limits<double>::infinity(),
                                      std::numeric_limits<double>::infinity()};
    for (size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i] < sorted[i + 1])
            candidates.push_back(sorted[i] + (sorted[i + 1] - sorted[i]) / 2);
    double best = 0;
    for (double eps : candidates) {
        size_t correct = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            const Label want =
                scores[i] < eps ? Label::Member : Label::NonMember;
            if (want == labels[i]) ++correct;
        }
        best = std::max(best, static_cast<double>(correct) / scores.size());
    }
    return best;
}

} // namespace

TEST_CASE("fsd of a model against itself is exactly zero") {
    LanguageModel m = init_model(testutil::tiny_config(151));
    std::mt19937_64 rng(157);
    for (ScoreFnKind kind : {ScoreFnKind::Perplexity, ScoreFnKind::MinK,
                             ScoreFnKind::Zlib, ScoreFnKind::Lowercase}) {
        for (int trial = 0; trial < 3; ++trial) {
            const std::string text = testutil::random_text(rng);
            CHECK(fsd_score(m, m, text, {kind, 20.0}) == 0.0);
        }
    }
}

TEST_CASE("freshly initialized adapters give zero deviation") {
    LanguageModel base = init_model(testutil::tiny_config(163));
    LanguageModel adapted = base;
    attach_adapters(adapted, AdapterSpec{}, 555);
    std::mt19937_64 rng(167);
    for (ScoreFnKind kind : {ScoreFnKind::Perplexity, ScoreFnKind::MinK,
                             ScoreFnKind::Zlib, ScoreFnKind::Lowercase}) {
        const std::string text = testutil::random_text(rng);
        CHECK(fsd_score(base, adapted, text, {kind, 20.0}) == 0.0);
    }
}

TEST_CASE("mismatched model shapes are rejected") {
    LanguageModel a = init_model(testutil::tiny_config(173));
    LanguageModel b = init_model(testutil::micro_config(173));
    CHECK_THROWS_AS(fsd_score(a, b, "text", {ScoreFnKind::Perplexity}), Error);

    // same shape, different seed: fine
    LanguageModel c = init_model(testutil::tiny_config(9999));
    CHECK_NOTHROW(fsd_score(a, c, "text", {ScoreFnKind::Perplexity}));
}

TEST_CASE("a shared score shift cancels out of the deviation") {
    std::mt19937_64 rng(179);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = 10.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const double b = 10.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        for (double c : {1.0, 100.0, 1e6}) {
            CHECK((a + c) - (b + c) ==
                  doctest::Approx(a - b).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("the 30 percent split follows the declared shuffle") {
    LabeledDataset ds = ten_examples();

    // two distinct seeds whose sampled third contains at least one
    // non-member, derived from the declared shuffle itself
    std::vector<uint64_t> usable;
    for (uint64_t seed = 0; usable.size() < 2 && seed < 500; ++seed) {
        const auto order = declared_shuffle(10, seed);
        for (size_t i = 0; i < 3; ++i)
            if (ds.examples[order[i]].label == Label::NonMember) {
                usable.push_back(seed);
                break;
            }
    }
    REQUIRE(usable.size() == 2);

    for (uint64_t seed : usable) {
        FinetuneSplit split = build_finetune_set(ds, 0.3, seed);
        const auto order = declared_shuffle(10, seed);
        std::vector<std::string> expected_ft;
        const size_t expected_sampled = 3; // floor(0.3 * 10)
        for (size_t i = 0; i < expected_sampled; ++i) {
            const auto& ex = ds.examples[order[i]];
            if (ex.label == Label::NonMember) expected_ft.push_back(ex.text);
        }
        CHECK(split.finetune_texts == expected_ft);
        CHECK(split.test_set.size() == 7);

        // partition by id: nothing sampled appears in the test set
        for (size_t i = 0; i < expected_sampled; ++i) {
            const auto& id = ds.examples[order[i]].id;
            for (const auto& ex : split.test_set.examples) CHECK(ex.id != id);
        }

        // deterministic
        FinetuneSplit again = build_finetune_set(ds, 0.3, seed);
        CHECK(again.finetune_texts == split.finetune_texts);
        CHECK(again.test_set.size() == split.test_set.size());
    }
}

TEST_CASE("composition selector controls the fine-tune set") {
    LabeledDataset ds = ten_examples();

    // a seed whose sampled third carries both labels
    uint64_t seed = 0;
    bool found = false;
    for (; seed < 500 && !found; ++seed) {
        const auto order = declared_shuffle(10, seed);
        bool has_member = false, has_nonmember = false;
        for (size_t i = 0; i < 3; ++i)
            (ds.examples[order[i]].label == Label::Member ? has_member
                                                          : has_nonmember) =
                true;
        if (has_member && has_nonmember) {
            found = true;
            break;
        }
    }
    REQUIRE(found);

    FinetuneSplit all =
        build_finetune_set(ds, 0.3, seed, FinetuneComposition::All);
    CHECK(all.finetune_texts.size() == 3);

    FinetuneSplit mem =
        build_finetune_set(ds, 0.3, seed, FinetuneComposition::MembersOnly);
    FinetuneSplit non =
        build_finetune_set(ds, 0.3, seed, FinetuneComposition::NonMembersOnly);
    CHECK(mem.finetune_texts.size() + non.finetune_texts.size() == 3);
    CHECK(!mem.finetune_texts.empty());
    CHECK(!non.finetune_texts.empty());
}

TEST_CASE("an empty fine-tune selection is an explicit error") {
    // all members: the non-member precondition fires first
    LabeledDataset members_only;
    for (int i = 0; i < 6; ++i)
        members_only.examples.push_back(
            {"m" + std::to_string(i), "text", Label::Member});
    CHECK_THROWS_AS(build_finetune_set(members_only, 0.3, 42), Error);

    // find a seed whose sampled third contains only members
    LabeledDataset ds = ten_examples();
    bool exercised = false;
    for (uint64_t seed = 0; seed < 200 && !exercised; ++seed) {
        const auto order = declared_shuffle(10, seed);
        bool all_members = true;
        for (size_t i = 0; i < 3; ++i)
            if (ds.examples[order[i]].label == Label::NonMember)
                all_members = false;
        if (!all_members) continue;
        exercised = true;
        try {
            build_finetune_set(ds, 0.3, seed);
            FAIL("expected empty fine-tune set error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::EmptyFinetuneSet);
        }
    }
    CHECK(exercised);
}

TEST_CASE("split fraction bounds are enforced") {
    LabeledDataset ds = ten_examples();
    CHECK_THROWS_AS(build_finetune_set(ds, 0.0, 42), Error);
    CHECK_THROWS_AS(build_finetune_set(ds, 1.0, 42), Error);
    CHECK_THROWS_AS(build_finetune_set(ds, -0.5, 42), Error);
}

TEST_CASE("threshold selection on the worked examples") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> scores = {1, 2, 3, 4};
    std::vector<Label> separable = {Label::Member, Label::Member,
                                    Label::NonMember, Label::NonMember};
    CHECK(select_threshold(scores, separable) == 2.5);

    std::vector<Label> inverted = {Label::NonMember, Label::NonMember,
                                   Label::Member, Label::Member};
    CHECK(select_threshold(scores, inverted) == -inf);

    std::vector<Label> single(4, Label::Member);
    CHECK_THROWS_AS(select_threshold(scores, single), Error);
}

TEST_CASE("threshold selection matches the exhaustive oracle") {
    std::mt19937_64 rng(191);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 2 + rng() % 20;
        std::vector<double> scores(n);
        std::vector<Label> labels(n);
        for (size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng() % 12) / 2.0; // ties likely
            labels[i] = (rng() & 1) ? Label::Member : Label::NonMember;
        }
        labels[0] = Label::Member;
        labels[n - 1] = Label::NonMember;

        const double eps = select_threshold(scores, labels);
        size_t correct = 0;
        size_t members = 0;
        for (size_t i = 0; i < n; ++i) {
            if (labels[i] == Label::Member) ++members;
            const Label want =
                scores[i] < eps ? Label::Member : Label::NonMember;
            if (want == labels[i]) ++correct;
        }
        const double accuracy = static_cast<double>(correct) / n;
        CHECK(accuracy == brute_force_best_accuracy(scores, labels));

        // sentinel candidates guarantee at least majority-class accuracy
        const double prior =
            std::max(members, n - members) / static_cast<double>(n);
        CHECK(accuracy >= prior);
    }
}

TEST_CASE("classify applies the strict level-set rule") {
    LanguageModel m = init_model(testutil::tiny_config(193));
    const std::string text = "boundary case";
    const double exact = score(m, text, {ScoreFnKind::Perplexity});

    DetectionRule rule;
    rule.fn = {ScoreFnKind::Perplexity};
    rule.threshold = exact;
    CHECK(classify(rule, m, nullptr, text) == Label::NonMember); // score >= eps

    rule.threshold = std::numeric_limits<double>::infinity();
    CHECK(classify(rule, m, nullptr, text) == Label::Member);
    rule.threshold = -std::numeric_limits<double>::infinity();
    CHECK(classify(rule, m, nullptr, text) == Label::NonMember);

    rule.use_fsd = true;
    CHECK_THROWS_AS(classify(rule, m, nullptr, text), Error);
    rule.threshold = 1.0; // fsd(m, m) == 0 < 1
    CHECK(classify(rule, m, &m, text) == Label::Member);
}
