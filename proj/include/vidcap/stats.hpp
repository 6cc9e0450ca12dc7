#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace vidcap {

// Midranks (1-based, ties share the average rank).
std::vector<double> midranks(std::span<const double> x);

// Two-sided Wilcoxon signed-rank p-value. Zero differences are dropped; exact
// null distribution when at most exact_cutoff nonzero differences remain,
// otherwise the normal approximation with tie and continuity correction.
// All-zero input gives 1. Throws on empty input.
double wilcoxon_signed_rank(std::span<const double> diffs, std::size_t exact_cutoff = 20);

// Two-sided corrected resampled t-test over J resampled fold differences.
double corrected_resampled_t(std::span<const double> diffs, double test_frac = 0.1, double train_frac = 0.8);

// Two-sided p of a Student t statistic with df degrees of freedom.
double student_t_two_sided(double t, double df);

struct SignificanceResult {
  double wilcoxon_p = 1.0;
  double corrected_t_p = 1.0;
  double combined_p = 1.0;
  std::size_t n = 0;
  double alpha = 0.01;

  bool significant() const { return combined_p < alpha; }
};

// Runs both tests on the paired differences a - b and keeps the larger p.
// wilcoxon_a/b may be a finer pairing (per segment) than the per-fold scores
// fed to the corrected t-test; pass empty spans to reuse the fold scores.
SignificanceResult combined_significance(std::span<const double> fold_scores_a, std::span<const double> fold_scores_b,
                                         double test_frac = 0.1, double train_frac = 0.8, double alpha = 0.01,
                                         std::span<const double> wilcoxon_a = {},
                                         std::span<const double> wilcoxon_b = {});

struct SpearmanResult {
  double rho = 0.0;
  double p = 1.0;
};

// Pearson correlation of midranks, p from the t approximation with n-2 df.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

// ROC AUC on the percent scale with ties counted as one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace vidcap
