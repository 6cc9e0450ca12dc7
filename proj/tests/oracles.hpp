#pragma once
// Slow, literal reference implementations used as test oracles. Nothing here
// shares code with the library beyond the Porter stemmer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vidcap/stemmer.hpp"
#include "vidcap/text.hpp"

namespace oracle {

using vidcap::Tokens;

inline bool is_subsequence(const Tokens& sub, const Tokens& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i)
    if (seq[i] == sub[j]) ++j;
  return j == sub.size();
}

// Longest common subsequence by enumerating every subset of the shorter side.
inline std::size_t lcs(const Tokens& a, const Tokens& b) {
  const Tokens& s = a.size() <= b.size() ? a : b;
  const Tokens& l = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    Tokens sub;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (mask & (1u << i)) sub.push_back(s[i]);
    if (sub.size() > best && is_subsequence(sub, l)) best = sub.size();
  }
  return best;
}

inline double rouge_l_sentence(const Tokens& c, const Tokens& r, double beta = 1.2) {
  if (c.empty()) return 0.0;
  const double m = static_cast<double>(lcs(c, r));
  if (m == 0.0) return 0.0;
  const double p = m / c.size(), rec = m / r.size();
  return (1 + beta * beta) * p * rec / (rec + beta * beta * p);
}

inline std::vector<Tokens> ngram_list(const Tokens& t, std::size_t n) {
  std::vector<Tokens> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) out.emplace_back(t.begin() + i, t.begin() + i + n);
  return out;
}

inline int count_of(const std::vector<Tokens>& list, const Tokens& g) {
  return static_cast<int>(std::count(list.begin(), list.end(), g));
}

// Clipped n-gram matches by scanning every distinct candidate n-gram.
inline std::pair<double, double> clipped(const Tokens& c, const Tokens& r, std::size_t n) {
  const auto cl = ngram_list(c, n), rl = ngram_list(r, n);
  std::vector<Tokens> seen;
  double match = 0;
  for (const auto& g : cl) {
    if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
    seen.push_back(g);
    match += std::min(count_of(cl, g), count_of(rl, g));
  }
  return {match, static_cast<double>(cl.size())};
}

inline double bleu4(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs) {
  double m[4] = {}, t[4] = {}, cl = 0, rl = 0;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    cl += cands[s].size();
    rl += refs[s].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      auto [a, b] = clipped(cands[s], refs[s], n);
      m[n - 1] += a;
      t[n - 1] += b;
    }
  }
  double prod = 1.0;
  for (int n = 0; n < 4; ++n) {
    if (t[n] == 0 || m[n] == 0) return 0.0;
    prod *= m[n] / t[n];
  }
  const double bp = cl < rl ? std::exp(1.0 - rl / cl) : 1.0;
  return 100.0 * bp * std::pow(prod, 0.25);
}

// METEOR: enumerate every one-to-one alignment of equal-or-same-stem pairs,
// keep those with the most exact matches, then the most stem matches, then
// the fewest chunks.
struct MeteorCounts {
  int matches = 0;
  int chunks = 0;
};

inline MeteorCounts meteor_counts(const Tokens& c, const Tokens& r) {
  std::vector<std::string> cs, rs;
  for (const auto& w : c) cs.push_back(vidcap::porter_stem(w));
  for (const auto& w : r) rs.push_back(vidcap::porter_stem(w));
  std::vector<int> assign(r.size(), -1);
  std::vector<bool> used(c.size(), false);
  int best_exact = -1, best_stem = -1, best_chunks = std::numeric_limits<int>::max();
  auto score = [&] {
    int exact = 0, stem = 0, chunks = 0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (assign[j] < 0) continue;
      if (c[assign[j]] == r[j]) ++exact; else ++stem;
      const bool extends = j > 0 && assign[j - 1] >= 0 && assign[j] == assign[j - 1] + 1;
      if (!extends) ++chunks;
    }
    if (exact > best_exact || (exact == best_exact && stem > best_stem) ||
        (exact == best_exact && stem == best_stem && chunks < best_chunks)) {
      best_exact = exact;
      best_stem = stem;
      best_chunks = chunks;
    }
  };
  auto rec = [&](auto&& self, std::size_t j) -> void {
    if (j == r.size()) {
      score();
      return;
    }
    self(self, j + 1);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (used[i] || (c[i] != r[j] && cs[i] != rs[j])) continue;
      used[i] = true;
      assign[j] = static_cast<int>(i);
      self(self, j + 1);
      assign[j] = -1;
      used[i] = false;
    }
  };
  rec(rec, 0);
  const int m = best_exact + best_stem;
  return {m, m == 0 ? 0 : best_chunks};
}

inline double meteor_sentence(const Tokens& c, const Tokens& r) {
  if (c.empty()) return 0.0;
  const auto a = meteor_counts(c, r);
  if (a.matches == 0) return 0.0;
  const double m = a.matches, p = m / c.size(), rec = m / r.size();
  const double f = p * rec / (0.9 * p + 0.1 * rec);
  return f * (1.0 - 0.5 * std::pow(a.chunks / m, 3.0));
}

// CIDEr-D written out term by term.
inline std::vector<double> cider_segments(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs,
                                          double sigma = 6.0) {
  const double N = static_cast<double>(refs.size());
  std::vector<double> out;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    double sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto cl = ngram_list(cands[s], n), rl = ngram_list(refs[s], n);
      auto idf = [&](const Tokens& g) {
        double df = 0;
        for (const auto& r : refs) {
          const auto l = ngram_list(r, n);
          if (std::find(l.begin(), l.end(), g) != l.end()) df += 1;
        }
        return std::log(N) - std::log(std::max(1.0, df));
      };
      std::set<Tokens> gc(cl.begin(), cl.end()), gr(rl.begin(), rl.end());
      double nc = 0, nr = 0, dot = 0;
      for (const auto& g : gc) {
        const double w = count_of(cl, g) * idf(g);
        nc += w * w;
      }
      for (const auto& g : gr) {
        const double w = count_of(rl, g) * idf(g);
        nr += w * w;
        if (gc.count(g)) dot += std::min(count_of(cl, g) * idf(g), w) * w;
      }
      if (nc > 0 && nr > 0) {
        const double d = static_cast<double>(cands[s].size()) - static_cast<double>(refs[s].size());
        sum += dot / std::sqrt(nc * nr) * std::exp(-d * d / (2 * sigma * sigma));
      }
    }
    out.push_back(10.0 * sum / 4.0);
  }
  return out;
}

// ROC AUC by counting every positive/negative pair.
inline double auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      if (s[i] > s[j]) num += 1;
      else if (s[i] == s[j]) num += 0.5;
    }
  return 100.0 * num / pairs;
}

// Rank = 1 + (#smaller) + (#equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<double> r;
  for (double a : x) {
    double less = 0, eq = 0;
    for (double b : x) {
      if (b < a) less += 1;
      if (b == a) eq += 1;
    }
    r.push_back(1 + less + (eq - 1) / 2);
  }
  return r;
}

// Exact two-sided Wilcoxon signed-rank p over all 2^n sign patterns.
inline double wilcoxon(const std::vector<double>& diffs) {
  std::vector<double> nz;
  for (double d : diffs)
    if (d != 0) nz.push_back(d);
  if (nz.empty()) return 1.0;
  std::vector<double> mag;
  for (double d : nz) mag.push_back(std::fabs(d));
  const auto rk = ranks(mag);
  double w = 0;
  for (std::size_t i = 0; i < nz.size(); ++i)
    if (nz[i] > 0) w += rk[i];
  const std::size_t n = nz.size();
  double le = 0, ge = 0, total = 0;
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1ull << i)) s += rk[i];
    total += 1;
    if (s <= w + 1e-9) le += 1;
    if (s >= w - 1e-9) ge += 1;
  }
  return std::min(1.0, 2 * std::min(le, ge) / total);
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

// Two-sided Student t tail by Simpson integration of the density on [0, |t|].
inline double t_two_sided(double t, double df) {
  const double lc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto pdf = [&](double x) { return std::exp(lc - (df + 1) / 2 * std::log1p(x * x / df)); };
  const int steps = 200000;
  const double a = 0, b = std::fabs(t), h = (b - a) / steps;
  double sum = pdf(a) + pdf(b);
  for (int i = 1; i < steps; ++i) sum += pdf(a + i * h) * (i % 2 ? 4 : 2);
  const double half = sum * h / 3;
  return std::max(0.0, 1.0 - 2 * half);
}

}  // namespace oracle
