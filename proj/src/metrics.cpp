#include "fsdlab/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "fsdlab/errors.hpp"

namespace fsdlab {

namespace {

void check_two_classes(const std::vector<double>& scores,
                       const std::vector<Label>& labels, size_t& members,
                       size_t& nonmembers) {
    if (scores.size() != labels.size())
        raise(ErrorKind::Config, "scores and labels differ in length");
    members = 0;
    for (Label l : labels)
        if (l == Label::Member) ++members;
    nonmembers = labels.size() - members;
    if (members == 0 || nonmembers == 0)
        raise(ErrorKind::DegenerateInput, "metric needs both classes present");
}

} // namespace

double auc(const std::vector<double>& scores,
           const std::vector<Label>& labels) {
    size_t members, nonmembers;
    check_two_classes(scores, labels, members, nonmembers);

    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scores[a] < scores[b];
    });

    // Group scan over equal-score runs: a member beats every non-member
    // with a strictly larger score and splits ties. Twice the credit stays
    // integral, so the statistic is exact.
    uint64_t credit2 = 0;
    size_t nonmembers_seen = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        size_t group_members = 0;
        size_t group_nonmembers = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] == Label::Member)
                ++group_members;
            else
                ++group_nonmembers;
            ++j;
        }
        const uint64_t greater_nonmembers =
            static_cast<uint64_t>(nonmembers - nonmembers_seen -
                                  group_nonmembers);
        credit2 += 2 * static_cast<uint64_t>(group_members) * greater_nonmembers;
        credit2 += static_cast<uint64_t>(group_members) *
                   static_cast<uint64_t>(group_nonmembers);
        nonmembers_seen += group_nonmembers;
        i = j;
    }
    return static_cast<double>(credit2) /
           (2.0 * static_cast<double>(members) *
            static_cast<double>(nonmembers));
}

double tpr_at_fpr(const std::vector<double>& scores,
                  const std::vector<Label>& labels, double fpr_budget) {
    size_t members, nonmembers;
    check_two_classes(scores, labels, members, nonmembers);

    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scores[a] < scores[b];
    });

    // Predicting member when score < t only changes outcome at the distinct
    // score values (plus +inf, i.e. everything flagged). Scan cut points.
    double best = 0.0;
    size_t tp = 0;
    size_t fp = 0;
    size_t i = 0;
    auto consider = [&]() {
        const double fpr =
            static_cast<double>(fp) / static_cast<double>(nonmembers);
        if (fpr <= fpr_budget) {
            const double tpr =
                static_cast<double>(tp) / static_cast<double>(members);
            if (tpr > best) best = tpr;
        }
    };
    consider(); // t = -inf: nothing flagged, TPR 0
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] == Label::Member)
                ++tp;
            else
                ++fp;
            ++j;
        }
        // t just above this group's value: everything up to j is flagged.
        consider();
        i = j;
    }
    return best;
}

} // namespace fsdlab
