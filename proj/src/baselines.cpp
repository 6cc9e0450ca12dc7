#include "vidcap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "vidcap/error.hpp"

namespace vidcap {

ConstantPredictor::ConstantPredictor() : caption_(tokenize(kConstantCaption)) {}

TokenSequence predict_asc(const Segment& segment) { return {segment.asr.tokens, TokenSource::kGenerated}; }

// ---------------------------------------------------------------------------
// FASC

double FascModel::r(const std::string& w) const {
  auto it = ratio.find(w);
  return it == ratio.end() ? 0.0 : it->second;
}

FascModel fit_fasc(std::span<const Segment* const> train_segments, double keep_threshold, int fold_index) {
  if (train_segments.empty()) throw ValidationError("fit_fasc: empty training split");
  std::unordered_map<std::string, double> gt, asr;
  double n_gt = 0.0, n_asr = 0.0;
  for (const auto* s : train_segments) {
    for (const auto& w : s->caption.tokens) gt[w] += 1.0;
    for (const auto& w : s->asr.tokens) asr[w] += 1.0;
    n_gt += static_cast<double>(s->caption.size());
    n_asr += static_cast<double>(s->asr.size());
  }
  std::set<std::string> types;
  for (const auto& [w, c] : gt) types.insert(w);
  for (const auto& [w, c] : asr) types.insert(w);
  const double v = static_cast<double>(types.size());

  FascModel m;
  m.keep_threshold = keep_threshold;
  m.trained_on = fold_index;
  for (const auto& w : types) {
    const double c_gt = gt.count(w) ? gt[w] : 0.0;
    const double c_asr = asr.count(w) ? asr[w] : 0.0;
    const double p_gt = (c_gt + 1.0) / (n_gt + v);
    const double p_asr = (c_asr + 1.0) / (n_asr + v);
    m.ratio[w] = p_gt / p_asr;
  }
  return m;
}

TokenSequence predict_fasc(const FascModel& model, const Segment& segment) {
  TokenSequence out{{}, TokenSource::kGenerated};
  for (const auto& w : segment.asr.tokens) {
    auto it = model.ratio.find(w);
    if (it != model.ratio.end() && it->second > model.keep_threshold) out.tokens.push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// RET

std::unordered_map<std::string, double> RetrievalIndex::vectorize(const Tokens& tokens) const {
  std::unordered_map<std::string, double> tf;
  for (const auto& w : tokens) tf[w] += 1.0;
  std::unordered_map<std::string, double> vec;
  for (const auto& [w, c] : tf) {
    auto it = idf.find(w);
    if (it != idf.end() && it->second != 0.0) vec[w] = c * it->second;
  }
  return vec;
}

namespace {

double norm_of(const std::unordered_map<std::string, double>& v) {
  double s = 0.0;
  for (const auto& [w, x] : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

RetrievalIndex build_retrieval_index(std::span<const Segment* const> train_segments, int fold_index,
                                     Tokens fallback) {
  if (train_segments.empty()) throw ValidationError("build_retrieval_index: no training captions");
  RetrievalIndex idx;
  idx.trained_on = fold_index;
  idx.fallback = fallback.empty() ? ConstantPredictor().caption() : std::move(fallback);
  std::unordered_map<std::string, double> df;
  for (const auto* s : train_segments) {
    idx.captions.push_back(s->caption.tokens);
    std::set<std::string> uniq(s->caption.tokens.begin(), s->caption.tokens.end());
    for (const auto& w : uniq) df[w] += 1.0;
  }
  const double n = static_cast<double>(idx.captions.size());
  for (const auto& [w, d] : df) idx.idf[w] = std::log(n / d);
  for (const auto& cap : idx.captions) {
    idx.vectors.push_back(idx.vectorize(cap));
    idx.norms.push_back(norm_of(idx.vectors.back()));
  }
  return idx;
}

TokenSequence predict_ret(const RetrievalIndex& index, const Segment& segment) {
  const auto q = index.vectorize(segment.asr.tokens);
  const double qn = norm_of(q);
  std::ptrdiff_t best = -1;
  double best_cos = 0.0;
  if (qn > 0.0) {
    for (std::size_t i = 0; i < index.captions.size(); ++i) {
      if (index.norms[i] == 0.0) continue;
      double dot = 0.0;
      for (const auto& [w, x] : q) {
        auto it = index.vectors[i].find(w);
        if (it != index.vectors[i].end()) dot += x * it->second;
      }
      const double cos = dot / (qn * index.norms[i]);
      if (cos > best_cos) {
        best_cos = cos;
        best = static_cast<std::ptrdiff_t>(i);
      }
    }
  }
  if (best < 0) return {index.fallback, TokenSource::kGenerated};
  return {index.captions[static_cast<std::size_t>(best)], TokenSource::kGenerated};
}

// ---------------------------------------------------------------------------
// Oracle object detector

std::string normalize_morphology(const std::string& w) {
  static const std::map<std::string, std::string> irregular{
      {"leaves", "leaf"},   {"knives", "knife"},   {"loaves", "loaf"},     {"halves", "half"},
      {"pies", "pie"},      {"cookies", "cookie"}, {"children", "child"},  {"teeth", "tooth"},
      {"geese", "goose"},   {"mice", "mouse"},     {"shelves", "shelf"},   {"tortillas", "tortilla"}};
  if (auto it = irregular.find(w); it != irregular.end()) return it->second;
  auto ends = [&](std::string_view suf) {
    return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (w.size() <= 3) return w;
  if (ends("ies")) return w.substr(0, w.size() - 3) + "y";
  if (ends("oes") || ends("ches") || ends("shes") || ends("xes") || ends("sses") || ends("zes")) {
    return w.substr(0, w.size() - 2);
  }
  if (ends("ss") || ends("us") || ends("is")) return w;
  if (ends("s")) return w.substr(0, w.size() - 1);
  return w;
}

OracleDetector::OracleDetector(std::span<const std::string> labels) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    auto n = normalize_morphology(l);
    if (n.empty()) throw ValidationError("oracle detector: empty label");
    if (!seen.insert(n).second) throw ValidationError("oracle detector: duplicate label after normalization: " + l);
    labels_.push_back(std::move(n));
  }
  rank_ = labels_;
  std::sort(rank_.begin(), rank_.end());
}

void OracleDetector::fit_frequency(std::span<const Segment* const> train_segments) {
  std::map<std::string, int> freq;
  for (const auto& l : labels_) freq[l] = 0;
  for (const auto* s : train_segments) {
    std::set<std::string> toks;
    for (const auto& t : s->caption.tokens) toks.insert(normalize_morphology(t));
    for (const auto& l : labels_)
      if (toks.count(l)) ++freq[l];
  }
  rank_ = labels_;
  std::sort(rank_.begin(), rank_.end(), [&](const std::string& a, const std::string& b) {
    return freq[a] != freq[b] ? freq[a] > freq[b] : a < b;
  });
}

std::vector<std::string> OracleDetector::selected(double fraction) const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("oracle fraction must lie in (0, 1]");
  // Guard against 0.3 * 10 = 3.0000000000000004 style round-up.
  const double want = fraction * static_cast<double>(rank_.size());
  auto k = static_cast<std::size_t>(std::ceil(want - 1e-9));
  k = std::min(rank_.size(), std::max<std::size_t>(k, 1));
  return {rank_.begin(), rank_.begin() + static_cast<std::ptrdiff_t>(k)};
}

std::vector<std::string> OracleDetector::detect(const Segment& segment, double fraction) const {
  const auto sel = selected(fraction);
  std::set<std::string> toks;
  for (const auto& t : segment.caption.tokens) toks.insert(normalize_morphology(t));
  std::vector<std::string> out;
  for (const auto& l : sel)
    if (toks.count(l)) out.push_back(l);
  std::sort(out.begin(), out.end());
  return out;
}

Tokens shuffle_labels(std::vector<std::string> labels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace vidcap
