#include "vidcap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "vidcap/error.hpp"
#include "vidcap/stats.hpp"

namespace vidcap {

using ad::Matrix;
using ad::Var;

DanClassifier::DanClassifier(DanModality modality, DanParams params, Vocabulary caption_vocab, Vocabulary asr_vocab,
                             std::size_t feature_dim)
    : modality_(modality),
      cfg_(params),
      vocab_(std::move(caption_vocab)),
      asr_vocab_(std::move(asr_vocab)),
      feature_dim_(feature_dim) {
  if (cfg_.hidden <= 0 || cfg_.steps < 0 || cfg_.batch_size <= 0 || !(cfg_.lr > 0.0))
    throw ConfigError("bad classifier hyperparameters");
  const int h = cfg_.hidden;
  const int v = static_cast<int>(vocab_.size());
  const std::uint64_t s = cfg_.seed;
  int in_dim = 0;
  if (modality_ == DanModality::kAsr) {
    in_dim = h;
    params_.add("emb", ad::normal_init(static_cast<Eigen::Index>(asr_vocab_.size()), h, derive_seed(s, "emb"),
                                       1.0 / std::sqrt(h)),
                false);
  } else {
    if (feature_dim_ == 0) throw ConfigError("video classifier needs frame features");
    in_dim = static_cast<int>(feature_dim_);
  }
  params_.add("in.w", ad::xavier_uniform(in_dim, h, derive_seed(s, "in.w")), true);
  params_.add("in.b", Matrix::Zero(1, h), false);
  for (const char* l : {"l1", "l2"}) {
    const std::string p = l;
    params_.add(p + ".w", ad::xavier_uniform(h, h, derive_seed(s, p + ".w")), true);
    params_.add(p + ".b", Matrix::Zero(1, h), false);
  }
  params_.add("out.w", ad::xavier_uniform(h, v, derive_seed(s, "out.w"), 0.1), true);
  params_.add("out.b", Matrix::Zero(1, v), false);
}

Var DanClassifier::logits(ad::Tape& tape, std::span<const Segment* const> segments) {
  auto P = [&](const std::string& n) { return tape.param(params_.get(n)); };
  Var x;
  if (modality_ == DanModality::kAsr) {
    std::vector<int> ids;
    std::vector<int> offsets{0};
    for (const Segment* s : segments) {
      for (int id : asr_vocab_.encode(s->asr.tokens)) ids.push_back(id);
      offsets.push_back(static_cast<int>(ids.size()));
    }
    x = ad::segment_mean(ad::gather_rows(P("emb"), std::move(ids)), std::move(offsets));
  } else {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(segments.size()), static_cast<Eigen::Index>(feature_dim_));
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& f = segments[i]->frames;
      if (f.empty()) continue;
      if (f.cols != feature_dim_) throw ValidationError("segment " + segments[i]->segment_id + ": feature dimension mismatch");
      for (std::size_t r = 0; r < f.rows; ++r) {
        const auto row = f.row(r);
        for (std::size_t c = 0; c < f.cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) += row[c];
      }
      m.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(f.rows);
    }
    x = tape.constant(std::move(m));
  }
  Var h = ad::add_row(ad::matmul(x, P("in.w")), P("in.b"));
  for (const char* l : {"l1", "l2"}) {
    const std::string p = l;
    h = ad::add(h, ad::relu(ad::add_row(ad::matmul(h, P(p + ".w")), P(p + ".b"))));
  }
  return ad::add_row(ad::matmul(h, P("out.w")), P("out.b"));
}

Matrix DanClassifier::predict(std::span<const Segment* const> segments) {
  ad::Tape tape(false);
  return ad::softmax_rows(logits(tape, segments).value());
}

std::vector<double> unigram_target(const Segment& segment, const Vocabulary& vocab) {
  std::vector<double> t(vocab.size(), 0.0);
  double total = 0.0;
  for (const auto& w : segment.caption.tokens) {
    if (!vocab.contains(w)) continue;
    t[static_cast<std::size_t>(vocab.id(w))] += 1.0;
    total += 1.0;
  }
  if (total > 0.0)
    for (auto& x : t) x /= total;
  return t;
}

Var DanClassifier::loss(ad::Tape& tape, std::span<const Segment* const> segments) {
  Matrix target(static_cast<Eigen::Index>(segments.size()), static_cast<Eigen::Index>(vocab_.size()));
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto t = unigram_target(*segments[i], vocab_);
    for (std::size_t j = 0; j < t.size(); ++j) target(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[j];
  }
  return ad::soft_cross_entropy(logits(tape, segments), std::move(target));
}

DanClassifier make_dan(DanModality modality, const DanParams& params, const Vocabulary& caption_vocab,
                       std::span<const Segment* const> train_segments, std::size_t feature_dim) {
  Vocabulary asr_vocab;
  if (modality == DanModality::kAsr) {
    std::vector<const Tokens*> lists;
    for (const Segment* s : train_segments) lists.push_back(&s->asr.tokens);
    try {
      asr_vocab = Vocabulary::from_token_lists(lists, params.asr_min_count);
    } catch (const ValidationError&) {
      asr_vocab = Vocabulary();  // reserved entries only: everything maps to UNK
    }
  }
  return DanClassifier(modality, params, caption_vocab, std::move(asr_vocab), feature_dim);
}

DanTrainResult train_dan(DanClassifier& dan, std::span<const Segment* const> train_segments) {
  std::vector<const Segment*> usable;
  for (const Segment* s : train_segments) {
    const bool any = std::any_of(s->caption.tokens.begin(), s->caption.tokens.end(),
                                 [&](const std::string& w) { return dan.caption_vocab().contains(w); });
    if (any) usable.push_back(s);
  }
  if (usable.empty()) throw ValidationError("classifier training: no caption has an in-vocabulary word");
  const DanParams& cfg = dan.params_config();
  ad::Adam adam(cfg.lr);
  std::mt19937_64 rng(derive_seed(cfg.seed, "dan-batches"));
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  DanTrainResult res;
  int above = 0;
  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<const Segment*> batch;
    for (int i = 0; i < cfg.batch_size; ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(usable[order[cursor++]]);
    }
    dan.params().zero_grad();
    ad::Tape tape(true);
    Var l = dan.loss(tape, batch);
    const double lv = l.scalar();
    if (!std::isfinite(lv)) throw NumericError("classifier loss is not finite at step " + std::to_string(step));
    tape.backward(l);
    if (step == 1) res.initial_loss = lv;
    res.final_loss = lv;
    res.losses.push_back(lv);
    if (lv > 10.0 * res.initial_loss) {
      if (++above >= 100) throw NumericError("classifier training diverged at step " + std::to_string(step));
    } else {
      above = 0;
    }
    adam.step(dan.params());
  }
  return res;
}

ad::GradCheckResult dan_gradient_check(DanClassifier& dan, std::span<const Segment* const> segments, double eps,
                                       int per_param, std::uint64_t seed) {
  return ad::gradient_check(
      dan.params(), [&](ad::Tape& t) { return dan.loss(t, segments); }, eps, per_param, seed);
}

namespace {

bool contains_word(const Tokens& t, const std::string& w) { return std::find(t.begin(), t.end(), w) != t.end(); }

}  // namespace

double stated_rate(const std::string& word, std::span<const Segment* const> segments) {
  int in_gt = 0, both = 0;
  for (const Segment* s : segments) {
    if (!contains_word(s->caption.tokens, word)) continue;
    ++in_gt;
    if (contains_word(s->asr.tokens, word)) ++both;
  }
  if (in_gt == 0) throw ValidationError("stated rate undefined: '" + word + "' never appears in a caption");
  return static_cast<double>(both) / in_gt;
}

std::vector<FoldWordAuc> word_aucs(DanClassifier& asr_dan, DanClassifier& video_dan,
                                   std::span<const Segment* const> test_segments,
                                   std::span<const std::string> words) {
  const Matrix pt = asr_dan.predict(test_segments);
  const Matrix pv = video_dan.predict(test_segments);
  std::vector<FoldWordAuc> out;
  for (const auto& w : words) {
    if (!asr_dan.caption_vocab().contains(w) || !video_dan.caption_vocab().contains(w)) continue;
    const int it = asr_dan.caption_vocab().id(w), iv = video_dan.caption_vocab().id(w);
    std::vector<int> labels;
    std::vector<double> st, sv;
    int pos = 0;
    for (std::size_t i = 0; i < test_segments.size(); ++i) {
      const int y = contains_word(test_segments[i]->caption.tokens, w) ? 1 : 0;
      pos += y;
      labels.push_back(y);
      st.push_back(pt(static_cast<Eigen::Index>(i), it));
      sv.push_back(pv(static_cast<Eigen::Index>(i), iv));
    }
    if (pos == 0 || pos == static_cast<int>(labels.size())) continue;
    out.push_back(FoldWordAuc{w, roc_auc(st, labels), roc_auc(sv, labels)});
  }
  return out;
}

std::vector<std::pair<std::string, int>> caption_word_frequencies(std::span<const Segment* const> segments) {
  std::map<std::string, int> freq;
  for (const Segment* s : segments) {
    std::set<std::string> seen(s->caption.tokens.begin(), s->caption.tokens.end());
    for (const auto& w : seen) ++freq[w];
  }
  return {freq.begin(), freq.end()};
}

std::vector<WordAucRecord> average_word_aucs(const std::vector<std::vector<FoldWordAuc>>& folds,
                                             std::span<const Segment* const> all_segments) {
  std::map<std::string, WordAucRecord> acc;
  for (const auto& fold : folds) {
    for (const auto& f : fold) {
      auto& r = acc[f.word];
      r.word = f.word;
      r.auc_t += f.auc_t;
      r.auc_v += f.auc_v;
      ++r.folds;
    }
  }
  std::map<std::string, int> freq;
  for (const auto& [w, n] : caption_word_frequencies(all_segments)) freq[w] = n;
  std::vector<WordAucRecord> out;
  for (auto& [w, r] : acc) {
    r.auc_t /= r.folds;
    r.auc_v /= r.folds;
    r.auc_mu = (r.auc_t + r.auc_v) / 2.0;
    r.auc_delta = r.auc_t - r.auc_v;
    r.gt_segment_freq = freq[w];
    if (r.gt_segment_freq > 0) r.stated_rate = stated_rate(w, all_segments);
    out.push_back(r);
  }
  return out;
}

ComplementarityReport complementarity_report(std::vector<WordAucRecord> records, std::size_t top_k) {
  ComplementarityReport rep;
  rep.records = std::move(records);
  auto top = [&](auto key, bool descending) {
    std::vector<WordAucRecord> v = rep.records;
    std::stable_sort(v.begin(), v.end(), [&](const WordAucRecord& a, const WordAucRecord& b) {
      const double ka = key(a), kb = key(b);
      if (ka != kb) return descending ? ka > kb : ka < kb;
      return a.word < b.word;
    });
    if (v.size() > top_k) v.resize(top_k);
    return v;
  };
  auto mu = [](const WordAucRecord& r) { return r.auc_mu; };
  auto delta = [](const WordAucRecord& r) { return r.auc_delta; };
  rep.easiest = top(mu, true);
  rep.hardest = top(mu, false);
  rep.asr_better = top(delta, true);
  rep.video_better = top(delta, false);

  std::vector<double> sr, fq, d1, d2;
  for (const auto& r : rep.records) {
    if (r.stated_rate) {
      sr.push_back(*r.stated_rate);
      d1.push_back(r.auc_delta);
    }
    fq.push_back(r.gt_segment_freq);
    d2.push_back(r.auc_delta);
  }
  if (sr.size() < 3) throw ValidationError("complementarity report needs at least 3 words with a stated rate");
  const auto s1 = spearman(sr, d1);
  rep.stated_vs_delta = {s1.rho, s1.p, sr.size()};
  const auto s2 = spearman(fq, d2);
  rep.freq_vs_delta = {s2.rho, s2.p, fq.size()};
  return rep;
}

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

nlohmann::ordered_json record_json(const WordAucRecord& r) {
  nlohmann::ordered_json j;
  j["word"] = r.word;
  j["auc_t"] = r.auc_t;
  j["auc_v"] = r.auc_v;
  j["auc_mu"] = r.auc_mu;
  j["auc_delta"] = r.auc_delta;
  j["stated_rate"] = r.stated_rate ? nlohmann::ordered_json(*r.stated_rate) : nlohmann::ordered_json();
  j["freq"] = r.gt_segment_freq;
  return j;
}

}  // namespace

std::string records_csv(const std::vector<WordAucRecord>& records) {
  std::string out = "word,auc_t,auc_v,auc_mu,auc_delta,stated_rate,freq\n";
  for (const auto& r : records) {
    out += csv_field(r.word) + "," + num(r.auc_t) + "," + num(r.auc_v) + "," + num(r.auc_mu) + "," +
           num(r.auc_delta) + "," + (r.stated_rate ? num(*r.stated_rate) : "") + "," +
           std::to_string(r.gt_segment_freq) + "\n";
  }
  return out;
}

std::string scatter_csv(const std::vector<WordAucRecord>& records) {
  std::string out = "word,auc_t,auc_v\n";
  for (const auto& r : records) out += csv_field(r.word) + "," + num(r.auc_t) + "," + num(r.auc_v) + "\n";
  return out;
}

std::string report_json(const ComplementarityReport& rep) {
  nlohmann::ordered_json j;
  j["num_words"] = rep.records.size();
  auto table = [](const std::vector<WordAucRecord>& v) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& r : v) a.push_back(record_json(r));
    return a;
  };
  j["easiest"] = table(rep.easiest);
  j["hardest"] = table(rep.hardest);
  j["asr_better"] = table(rep.asr_better);
  j["video_better"] = table(rep.video_better);
  j["spearman_stated_rate_vs_delta"] = {
      {"rho", rep.stated_vs_delta.rho}, {"p", rep.stated_vs_delta.p}, {"n", rep.stated_vs_delta.n}};
  j["spearman_freq_vs_delta"] = {{"rho", rep.freq_vs_delta.rho}, {"p", rep.freq_vs_delta.p}, {"n", rep.freq_vs_delta.n}};
  return j.dump(2) + "\n";
}

}  // namespace vidcap
