#include "vidcap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "vidcap/error.hpp"

namespace vidcap {

std::vector<double> midranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double wilcoxon_signed_rank(std::span<const double> diffs, std::size_t exact_cutoff) {
  if (diffs.empty()) throw ValidationError("wilcoxon_signed_rank: empty input");
  std::vector<double> nz;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw NumericError("wilcoxon_signed_rank: non-finite difference");
    if (d != 0.0) nz.push_back(d);
  }
  if (nz.empty()) return 1.0;
  const std::size_t n = nz.size();
  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::fabs(nz[i]);
  const auto ranks = midranks(mags);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (nz[i] > 0.0) w_plus += ranks[i];

  if (n <= exact_cutoff) {
    // Doubled midranks are integers; count sign patterns per doubled sum.
    std::vector<long> r2(n);
    long max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = std::lround(2.0 * ranks[i]);
      max_sum += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(max_sum) + 1, 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (long r : r2) {
      for (long s = reach; s >= 0; --s) {
        if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
      }
      reach += r;
    }
    const long w2 = std::lround(2.0 * w_plus);
    double le = 0.0, ge = 0.0, total = 0.0;
    for (long s = 0; s <= max_sum; ++s) {
      const double c = count[static_cast<std::size_t>(s)];
      total += c;
      if (s <= w2) le += c;
      if (s >= w2) ge += c;
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / total);
  }

  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
  {
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
  }
  if (var <= 0.0) return 1.0;
  const double dev = w_plus - mean;
  const double corrected = std::fabs(dev) <= 0.5 ? 0.0 : std::fabs(dev) - 0.5;
  const double z = corrected / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

double student_t_two_sided(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

double corrected_resampled_t(std::span<const double> diffs, double test_frac, double train_frac) {
  const std::size_t j = diffs.size();
  if (j < 2) throw ValidationError("corrected_resampled_t: need at least 2 fold differences");
  if (!(train_frac > 0.0) || test_frac < 0.0) throw ConfigError("corrected_resampled_t: bad split fractions");
  const double jd = static_cast<double>(j);
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / jd;
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double var = ss / (jd - 1.0);
  if (var == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double t = mean / std::sqrt((1.0 / jd + test_frac / train_frac) * var);
  return student_t_two_sided(t, jd - 1.0);
}

SignificanceResult combined_significance(std::span<const double> a, std::span<const double> b, double test_frac,
                                         double train_frac, double alpha, std::span<const double> wa,
                                         std::span<const double> wb) {
  if (a.size() != b.size()) throw ValidationError("combined_significance: unequal fold score lists");
  if (wa.size() != wb.size()) throw ValidationError("combined_significance: unequal paired score lists");
  std::vector<double> fold_diffs(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) fold_diffs[i] = a[i] - b[i];
  std::vector<double> w_diffs;
  if (wa.empty()) {
    w_diffs = fold_diffs;
  } else {
    for (std::size_t i = 0; i < wa.size(); ++i) w_diffs.push_back(wa[i] - wb[i]);
  }
  SignificanceResult r;
  r.alpha = alpha;
  r.n = w_diffs.size();
  r.wilcoxon_p = wilcoxon_signed_rank(w_diffs);
  r.corrected_t_p = corrected_resampled_t(fold_diffs, test_frac, train_frac);
  r.combined_p = std::max(r.wilcoxon_p, r.corrected_t_p);
  return r;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: unequal lengths");
  if (x.size() < 3) throw ValidationError("spearman: need at least 3 pairs");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("spearman: constant input, correlation undefined");
  SpearmanResult r;
  r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::fabs(r.rho) >= 1.0) {
    r.p = 0.0;
  } else {
    const double t = r.rho * std::sqrt((n - 2.0) / (1.0 - r.rho * r.rho));
    r.p = student_t_two_sided(t, n - 2.0);
  }
  return r;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("roc_auc: unequal lengths");
  const auto ranks = midranks(scores);
  double pos = 0.0, neg = 0.0, rank_sum2 = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("roc_auc: labels must be 0 or 1");
    if (labels[i]) {
      pos += 1.0;
      rank_sum2 += 2.0 * ranks[i];
    } else {
      neg += 1.0;
    }
  }
  if (pos == 0.0 || neg == 0.0) throw ValidationError("roc_auc: labels contain a single class");
  // Twice the Mann-Whitney U: concordant pairs count 2, ties 1.
  const double u2 = rank_sum2 - pos * (pos + 1.0);
  return 100.0 * u2 / (2.0 * pos * neg);
}

}  // namespace vidcap
