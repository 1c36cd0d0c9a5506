#pragma once

#include <vector>

#include "fsdlab/dataset.hpp"

namespace fsdlab {

// Rank-statistic AUC with half-credit ties: the probability that a random
// member scores strictly below a random non-member, plus half the tie
// mass. Exact (integer pair counting); scores oriented lower => member.
double auc(const std::vector<double>& scores,
           const std::vector<Label>& labels);

// Max TPR over thresholds t (member predicted when score < t) subject to
// FPR(t) <= fpr_budget. Hard feasibility, no interpolation; 0 when no
// feasible threshold catches anything.
double tpr_at_fpr(const std::vector<double>& scores,
                  const std::vector<Label>& labels,
                  double fpr_budget = 0.05);

} // namespace fsdlab
