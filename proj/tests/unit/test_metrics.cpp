#include <doctest.h>

#include <cmath>
#include <random>

#include "fsdlab/errors.hpp"
#include "fsdlab/metrics.hpp"

using namespace fsdlab;

namespace {

double auc_pair_oracle(const std::vector<double>& scores,
                       const std::vector<Label>& labels) {
    double credit = 0;
    size_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != Label::Member) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != Label::NonMember) continue;
            ++pairs;
            if (scores[i] < scores[j])
                credit += 1.0;
            else if (scores[i] == scores[j])
                credit += 0.5;
        }
    }
    return credit / static_cast<double>(pairs);
}

double tpr_sweep_oracle(const std::vector<double>& scores,
                        const std::vector<Label>& labels, double budget) {
    size_t members = 0, nonmembers = 0;
    for (Label l : labels)
        (l == Label::Member ? members : nonmembers)++;
    std::vector<double> thresholds = scores;
    thresholds.push_back(std::numeric_limits<double>::infinity());
    double best = 0.0;
    for (double t : thresholds) {
        size_t tp = 0, fp = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] < t) {
                if (labels[i] == Label::Member)
                    ++tp;
                else
                    ++fp;
            }
        }
        const double fpr = static_cast<double>(fp) / nonmembers;
        if (fpr <= budget)
            best = std::max(best, static_cast<double>(tp) / members);
    }
    return best;
}

void random_instance(std::mt19937_64& rng, size_t max_n,
                     std::vector<double>& scores, std::vector<Label>& labels) {
    const size_t n = 2 + rng() % (max_n - 1);
    scores.resize(n);
    labels.resize(n);
    for (size_t i = 0; i < n; ++i) {
        scores[i] = static_cast<double>(rng() % 40) / 4.0 - 3.0; // many ties
        labels[i] = (rng() & 1) ? Label::Member : Label::NonMember;
    }
    labels[0] = Label::Member;
    labels[n - 1] = Label::NonMember;
}

} // namespace

TEST_CASE("auc on hand-worked cases") {
    CHECK(auc({1, 2, 3, 4}, {Label::Member, Label::Member, Label::NonMember,
                             Label::NonMember}) == 1.0);
    CHECK(auc({5, 5, 5, 5}, {Label::Member, Label::NonMember, Label::Member,
                             Label::NonMember}) == 0.5);
    CHECK(auc({3, 4, 1, 2}, {Label::Member, Label::Member, Label::NonMember,
                             Label::NonMember}) == 0.0);
}

TEST_CASE("auc equals the pair-counting oracle exactly") {
    std::mt19937_64 rng(211);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> scores;
        std::vector<Label> labels;
        random_instance(rng, 60, scores, labels);
        CHECK(auc(scores, labels) == auc_pair_oracle(scores, labels));
    }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    std::mt19937_64 rng(223);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> scores;
        std::vector<Label> labels;
        random_instance(rng, 50, scores, labels);
        std::vector<double> warped(scores.size());
        for (size_t i = 0; i < scores.size(); ++i)
            warped[i] = std::exp(scores[i]);
        CHECK(auc(scores, labels) == auc(warped, labels));
    }
}

TEST_CASE("auc is symmetric under label flip plus score negation") {
    std::mt19937_64 rng(227);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> scores;
        std::vector<Label> labels;
        random_instance(rng, 50, scores, labels);
        std::vector<double> negated(scores.size());
        std::vector<Label> flipped(labels.size());
        for (size_t i = 0; i < scores.size(); ++i) {
            negated[i] = -scores[i];
            flipped[i] = labels[i] == Label::Member ? Label::NonMember
                                                    : Label::Member;
        }
        CHECK(auc(scores, labels) == auc(negated, flipped));
    }
}

TEST_CASE("tpr at fixed fpr on hand-worked cases") {
    std::vector<Label> mmnn = {Label::Member, Label::Member, Label::NonMember,
                               Label::NonMember};
    CHECK(tpr_at_fpr({1, 2, 3, 4}, mmnn, 0.05) == 1.0);

    // inverted: catching any member means flagging every non-member
    CHECK(tpr_at_fpr({3, 4, 1, 2}, mmnn, 0.05) == 0.0);
}

TEST_CASE("tpr matches the exhaustive sweep oracle") {
    std::mt19937_64 rng(229);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> scores;
        std::vector<Label> labels;
        random_instance(rng, 40, scores, labels);
        for (double budget : {0.0, 0.05, 0.2, 0.5}) {
            CHECK(tpr_at_fpr(scores, labels, budget) ==
                  tpr_sweep_oracle(scores, labels, budget));
        }
    }
}

TEST_CASE("metrics reject single-class inputs") {
    std::vector<double> scores = {1, 2, 3};
    std::vector<Label> members(3, Label::Member);
    std::vector<Label> nonmembers(3, Label::NonMember);
    CHECK_THROWS_AS(auc(scores, members), Error);
    CHECK_THROWS_AS(auc(scores, nonmembers), Error);
    CHECK_THROWS_AS(tpr_at_fpr(scores, members, 0.05), Error);
    try {
        auc(scores, members);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateInput);
    }
}
