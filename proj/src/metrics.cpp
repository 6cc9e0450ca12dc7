#include "vidcap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "vidcap/error.hpp"
#include "vidcap/log.hpp"
#include "vidcap/stemmer.hpp"

namespace vidcap {

namespace {

void check_paired(std::span<const Tokens> c, std::span<const Tokens> r, const char* what) {
  if (c.size() != r.size()) {
    throw ValidationError(std::string(what) + ": " + std::to_string(c.size()) + " candidates vs " +
                          std::to_string(r.size()) + " references");
  }
  if (c.empty()) throw ValidationError(std::string(what) + ": no segments");
}

void check_reference(const Tokens& r, const char* what) {
  if (r.empty()) throw ValidationError(std::string(what) + ": empty reference");
}

using NgramCounts = std::map<std::vector<std::string_view>, int>;

NgramCounts ngrams(const Tokens& toks, std::size_t n) {
  NgramCounts out;
  if (toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::vector<std::string_view> g(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                    toks.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++out[g];
  }
  return out;
}

// Clipped matches and candidate n-gram total for one pair.
std::pair<double, double> clipped(const Tokens& c, const Tokens& r, std::size_t n) {
  const auto cc = ngrams(c, n);
  const auto rc = ngrams(r, n);
  double match = 0.0, total = 0.0;
  for (const auto& [g, k] : cc) {
    total += k;
    auto it = rc.find(g);
    if (it != rc.end()) match += std::min(k, it->second);
  }
  return {match, total};
}

}  // namespace

// ---------------------------------------------------------------------------
// BLEU

double bleu4(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  check_paired(candidates, references, "bleu4");
  double match[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  double c_len = 0.0, r_len = 0.0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    c_len += static_cast<double>(candidates[s].size());
    r_len += static_cast<double>(references[s].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      auto [m, t] = clipped(candidates[s], references[s], n);
      match[n - 1] += m;
      total[n - 1] += t;
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0.0 || match[n] == 0.0) return 0.0;
    log_sum += std::log(match[n] / total[n]);
  }
  const double bp = c_len < r_len ? std::exp(1.0 - r_len / c_len) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

double sentence_bleu4_smoothed(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto [m, t] = clipped(candidate, reference, n);
    if (n > 1) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double c = static_cast<double>(candidate.size()), r = static_cast<double>(reference.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

// ---------------------------------------------------------------------------
// ROUGE-L

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_sentence(const Tokens& candidate, const Tokens& reference, double beta) {
  check_reference(reference, "rouge_l");
  if (candidate.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double rouge_l(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  check_paired(candidates, references, "rouge_l");
  double sum = 0.0;
  for (std::size_t s = 0; s < candidates.size(); ++s) sum += rouge_l_sentence(candidates[s], references[s]);
  return 100.0 * sum / static_cast<double>(candidates.size());
}

// ---------------------------------------------------------------------------
// METEOR

namespace {

class MeteorSearch {
 public:
  MeteorSearch(const Tokens& c, const Tokens& r, std::size_t node_cap) : c_(c), r_(r), cap_(node_cap) {
    for (const auto& w : c) c_stem_.push_back(porter_stem(w));
    for (const auto& w : r) r_stem_.push_back(porter_stem(w));
    std::map<std::string, int> cnt_c, cnt_r;
    for (const auto& w : c) ++cnt_c[w];
    for (const auto& w : r) ++cnt_r[w];
    std::map<std::string, int> left_c, left_r;
    for (const auto& [w, k] : cnt_r) {
      const int e = cnt_c.count(w) ? std::min(k, cnt_c[w]) : 0;
      if (e) need_exact_[w] = e;
      if (k - e) left_r[porter_stem(w)] += k - e;
    }
    for (const auto& [w, k] : cnt_c) {
      const int e = cnt_r.count(w) ? std::min(k, cnt_r[w]) : 0;
      if (k - e) left_c[porter_stem(w)] += k - e;
    }
    for (const auto& [s, k] : left_r) {
      if (left_c.count(s)) {
        const int m = std::min(k, left_c[s]);
        if (m) need_stem_[s] = m;
      }
    }
    for (const auto& [w, k] : need_exact_) total_ += static_cast<std::size_t>(k);
    for (const auto& [s, k] : need_stem_) total_ += static_cast<std::size_t>(k);
    // Remaining reference occurrences per word / stem from position j on.
    rem_word_.resize(r.size() + 1);
    rem_stem_.resize(r.size() + 1);
    for (std::size_t j = r.size(); j-- > 0;) {
      rem_word_[j] = rem_word_[j + 1];
      rem_stem_[j] = rem_stem_[j + 1];
      ++rem_word_[j][r[j]];
      ++rem_stem_[j][r_stem_[j]];
    }
    used_.assign(c.size(), false);
    assign_.assign(r.size(), -1);
  }

  MeteorAlignment solve() {
    if (total_ == 0) return {};
    best_chunks_ = std::numeric_limits<std::size_t>::max();
    dfs(0, 0, 0);
    return {total_, best_chunks_};
  }

 private:
  bool feasible(std::size_t j) const {
    for (const auto& [w, k] : need_exact_) {
      const int have = got_exact_.count(w) ? got_exact_.at(w) : 0;
      auto it = rem_word_[j].find(w);
      const int rem = it == rem_word_[j].end() ? 0 : it->second;
      if (k - have > rem) return false;
    }
    for (const auto& [s, k] : need_stem_) {
      const int have = got_stem_.count(s) ? got_stem_.at(s) : 0;
      auto it = rem_stem_[j].find(s);
      const int rem = it == rem_stem_[j].end() ? 0 : it->second;
      if (k - have > rem) return false;
    }
    return true;
  }

  void dfs(std::size_t j, std::size_t matched, std::size_t chunks) {
    if (++nodes_ > cap_ && best_chunks_ != std::numeric_limits<std::size_t>::max()) return;
    if (chunks >= best_chunks_) return;
    if (j == r_.size()) {
      if (matched == total_) best_chunks_ = chunks;
      return;
    }
    if (!feasible(j)) return;
    const int prev = j > 0 ? assign_[j - 1] : -1;

    // Candidate options in order: the one continuing the current chunk first.
    std::vector<std::pair<int, bool>> options;  // (cand index, exact)
    auto consider = [&](std::size_t i) {
      if (used_[i]) return;
      if (c_[i] == r_[j]) {
        const int k = need_exact_.count(r_[j]) ? need_exact_.at(r_[j]) : 0;
        const int have = got_exact_.count(r_[j]) ? got_exact_.at(r_[j]) : 0;
        if (have < k) options.emplace_back(static_cast<int>(i), true);
      } else if (c_stem_[i] == r_stem_[j]) {
        const auto& s = r_stem_[j];
        const int k = need_stem_.count(s) ? need_stem_.at(s) : 0;
        const int have = got_stem_.count(s) ? got_stem_.at(s) : 0;
        if (have < k) options.emplace_back(static_cast<int>(i), false);
      }
    };
    if (prev >= 0 && static_cast<std::size_t>(prev + 1) < c_.size()) consider(static_cast<std::size_t>(prev + 1));
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (prev >= 0 && static_cast<int>(i) == prev + 1) continue;
      consider(i);
    }
    for (const auto& [i, exact] : options) {
      const bool extends = prev >= 0 && i == prev + 1;
      used_[static_cast<std::size_t>(i)] = true;
      assign_[j] = i;
      auto& bucket = exact ? got_exact_[r_[j]] : got_stem_[r_stem_[j]];
      ++bucket;
      dfs(j + 1, matched + 1, chunks + (extends ? 0 : 1));
      --bucket;
      assign_[j] = -1;
      used_[static_cast<std::size_t>(i)] = false;
    }
    dfs(j + 1, matched, chunks);
  }

  const Tokens& c_;
  const Tokens& r_;
  std::size_t cap_;
  std::vector<std::string> c_stem_, r_stem_;
  std::map<std::string, int> need_exact_, need_stem_;
  std::map<std::string, int> got_exact_, got_stem_;
  std::vector<std::map<std::string, int>> rem_word_, rem_stem_;
  std::vector<bool> used_;
  std::vector<int> assign_;
  std::size_t total_ = 0;
  std::size_t best_chunks_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference, const MeteorParams& p) {
  return MeteorSearch(candidate, reference, p.max_search_nodes).solve();
}

double meteor_sentence(const Tokens& candidate, const Tokens& reference, const MeteorParams& p) {
  check_reference(reference, "meteor");
  if (candidate.empty()) return 0.0;
  const auto a = meteor_align(candidate, reference, p);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double prec = m / static_cast<double>(candidate.size());
  const double rec = m / static_cast<double>(reference.size());
  const double fmean = prec * rec / (p.alpha * prec + (1.0 - p.alpha) * rec);
  const double penalty = p.gamma * std::pow(static_cast<double>(a.chunks) / m, p.beta);
  return fmean * (1.0 - penalty);
}

double meteor(std::span<const Tokens> candidates, std::span<const Tokens> references, const MeteorParams& p) {
  check_paired(candidates, references, "meteor");
  double sum = 0.0;
  for (std::size_t s = 0; s < candidates.size(); ++s) sum += meteor_sentence(candidates[s], references[s], p);
  return 100.0 * sum / static_cast<double>(candidates.size());
}

// ---------------------------------------------------------------------------
// CIDEr-D

std::vector<double> cider_segments(std::span<const Tokens> candidates, std::span<const Tokens> references,
                                   const CiderParams& p) {
  check_paired(candidates, references, "cider");
  const std::size_t n_seg = candidates.size();
  const auto max_n = static_cast<std::size_t>(p.max_n);
  // Per n: document frequency over reference segments.
  std::vector<std::map<std::vector<std::string_view>, double>> df(max_n);
  std::vector<std::vector<NgramCounts>> ref_counts(max_n), cand_counts(max_n);
  for (std::size_t n = 1; n <= max_n; ++n) {
    for (std::size_t s = 0; s < n_seg; ++s) {
      ref_counts[n - 1].push_back(ngrams(references[s], n));
      cand_counts[n - 1].push_back(ngrams(candidates[s], n));
      for (const auto& [g, k] : ref_counts[n - 1].back()) df[n - 1][g] += 1.0;
    }
  }
  const double log_n = std::log(static_cast<double>(n_seg));
  if (log_n == 0.0) log_warning("cider: single reference segment, every idf is zero");

  std::vector<double> scores(n_seg, 0.0);
  for (std::size_t s = 0; s < n_seg; ++s) {
    const double delta = static_cast<double>(candidates[s].size()) - static_cast<double>(references[s].size());
    const double penalty = std::exp(-(delta * delta) / (2.0 * p.sigma * p.sigma));
    double total = 0.0;
    for (std::size_t n = 0; n < max_n; ++n) {
      auto weight = [&](const std::vector<std::string_view>& g, int tf) {
        auto it = df[n].find(g);
        const double d = it == df[n].end() ? 0.0 : it->second;
        return static_cast<double>(tf) * (log_n - std::log(std::max(1.0, d)));
      };
      std::map<std::vector<std::string_view>, double> vr;
      double norm_r = 0.0, norm_c = 0.0, dot = 0.0;
      for (const auto& [g, k] : ref_counts[n][s]) {
        const double w = weight(g, k);
        vr[g] = w;
        norm_r += w * w;
      }
      for (const auto& [g, k] : cand_counts[n][s]) {
        const double w = weight(g, k);
        norm_c += w * w;
        auto it = vr.find(g);
        if (it != vr.end()) dot += std::min(w, it->second) * it->second;
      }
      if (norm_c > 0.0 && norm_r > 0.0) total += dot / (std::sqrt(norm_c) * std::sqrt(norm_r)) * penalty;
    }
    scores[s] = 10.0 * total / static_cast<double>(max_n);
  }
  return scores;
}

double cider(std::span<const Tokens> candidates, std::span<const Tokens> references, const CiderParams& p) {
  const auto seg = cider_segments(candidates, references, p);
  double sum = 0.0;
  for (double x : seg) sum += x;
  return sum / static_cast<double>(seg.size());
}

// ---------------------------------------------------------------------------

MetricReport score_all(std::span<const Tokens> candidates, std::span<const Tokens> references, std::string system,
                       int fold) {
  check_paired(candidates, references, "score_all");
  MetricReport rep;
  rep.system = std::move(system);
  rep.fold = fold;
  rep.bleu4 = bleu4(candidates, references);
  rep.seg_cider = cider_segments(candidates, references);
  double cider_sum = 0.0, rouge_sum = 0.0, meteor_sum = 0.0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    rep.seg_bleu4.push_back(sentence_bleu4_smoothed(candidates[s], references[s]));
    rep.seg_rouge_l.push_back(100.0 * rouge_l_sentence(candidates[s], references[s]));
    rep.seg_meteor.push_back(100.0 * meteor_sentence(candidates[s], references[s]));
    rouge_sum += rep.seg_rouge_l.back();
    meteor_sum += rep.seg_meteor.back();
    cider_sum += rep.seg_cider[s];
  }
  const double n = static_cast<double>(candidates.size());
  rep.rouge_l = rouge_sum / n;
  rep.meteor = meteor_sum / n;
  rep.cider = cider_sum / n;
  return rep;
}

DiversityReport diversity(std::span<const Tokens> predictions, std::span<const Tokens> train_captions,
                          const Vocabulary& vocab) {
  if (predictions.empty()) throw ValidationError("diversity: no predictions");
  std::set<std::string> used;
  std::set<std::string> distinct;
  std::set<std::string> train;
  for (const auto& t : train_captions) train.insert(join(t));
  double not_copied = 0.0;
  for (const auto& p : predictions) {
    used.insert(p.begin(), p.end());
    const auto s = join(p);
    distinct.insert(s);
    if (!train.count(s)) not_copied += 1.0;
  }
  DiversityReport d;
  const auto words = vocab.words();
  if (!words.empty()) {
    double covered = 0.0;
    for (const auto& w : words)
      if (used.count(w)) covered += 1.0;
    d.vocab_coverage = 100.0 * covered / static_cast<double>(words.size());
  }
  const double n = static_cast<double>(predictions.size());
  d.pct_not_copied = 100.0 * not_copied / n;
  d.pct_unique = 100.0 * static_cast<double>(distinct.size()) / n;
  return d;
}

}  // namespace vidcap
