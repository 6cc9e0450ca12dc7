#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vidcap/analysis.hpp"
#include "vidcap/error.hpp"
#include "vidcap/synth.hpp"

using namespace vidcap;
using testutil::make_segment;

namespace {

std::vector<const Segment*> ptrs(const std::vector<Segment>& v) {
  std::vector<const Segment*> p;
  for (const auto& s : v) p.push_back(&s);
  return p;
}

Corpus small_corpus(std::size_t videos = 10) {
  SynthSpec s;
  s.num_videos = videos;
  s.feature_dim = 6;
  s.frames_min = 2;
  s.frames_max = 4;
  return generate_synthetic_corpus(s, 4);
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("unigram target") {
  const std::vector<Segment> segs{make_segment("a", 0, 1, "add the oil", "")};
  const auto vocab = Vocabulary::build(ptrs(segs), 1);
  const auto t = unigram_target(segs[0], vocab);
  REQUIRE(t.size() == vocab.size());
  int nz = 0;
  for (double x : t)
    if (x > 0) {
      ++nz;
      CHECK(x == doctest::Approx(1.0 / 3.0));
    }
  CHECK(nz == 3);
  const auto oov = make_segment("z", 0, 1, "qqq rrr", "");
  for (double x : unigram_target(oov, vocab)) CHECK(x == 0.0);
}

TEST_CASE("dan gradient check for both modalities") {
  const Corpus c = small_corpus();
  const auto segs = c.segments();
  const auto vocab = Vocabulary::build(segs, 1);
  DanParams p;
  p.hidden = 6;
  p.asr_min_count = 1;
  p.seed = 2;
  for (DanModality m : {DanModality::kAsr, DanModality::kVideo}) {
    auto dan = make_dan(m, p, vocab, segs, c.feature_dim);
    testutil::jitter_biases(dan.params(), 12);
    const auto r = dan_gradient_check(dan, std::span(segs).subspan(0, 6), 1e-5, 8, 1);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("dan training lowers loss and outputs distributions") {
  const Corpus c = small_corpus(20);
  const auto segs = c.segments();
  const auto vocab = Vocabulary::build(segs, 1);
  DanParams p;
  p.hidden = 32;
  p.steps = 150;
  p.batch_size = 32;
  p.lr = 3e-3;
  p.asr_min_count = 1;
  auto dan = make_dan(DanModality::kAsr, p, vocab, segs, c.feature_dim);
  const auto r = train_dan(dan, segs);
  CHECK(r.final_loss < r.initial_loss);
  const auto probs = dan.predict(std::span(segs).subspan(0, 5));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) CHECK(probs.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("all-OOV captions do not contribute to the loss") {
  std::vector<Segment> segs{make_segment("a", 0, 1, "add oil", "add oil"),
                            make_segment("b", 0, 1, "stir soup", "stir soup")};
  const auto vocab = Vocabulary::build(ptrs(segs), 1);
  DanParams p;
  p.hidden = 4;
  p.asr_min_count = 1;
  auto dan = make_dan(DanModality::kAsr, p, vocab, ptrs(segs), 0);
  const std::vector<Segment> with_oov{segs[0], segs[1], make_segment("c", 0, 1, "zzz yyy", "add")};
  ad::Tape t1(false), t2(false);
  const double a = dan.loss(t1, ptrs(segs)).scalar();
  const double b = dan.loss(t2, ptrs(with_oov)).scalar();
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("stated rate") {
  const std::vector<Segment> segs{make_segment("a", 0, 1, "add oil", "oil please"),
                                  make_segment("b", 0, 1, "heat oil", "now oil"),
                                  make_segment("c", 0, 1, "oil the pan", "the oil"),
                                  make_segment("d", 0, 1, "drizzle oil", "drizzle it"),
                                  make_segment("e", 0, 1, "stir", "oil")};
  CHECK(stated_rate("oil", ptrs(segs)) == doctest::Approx(0.75));
  CHECK(stated_rate("pan", ptrs(segs)) == 0.0);
  CHECK_THROWS_AS(stated_rate("knife", ptrs(segs)), ValidationError);
}

TEST_CASE("auc mean and delta arithmetic") {
  std::vector<Segment> segs{make_segment("a", 0, 1, "add oil", "oil")};
  const std::vector<std::vector<FoldWordAuc>> folds{{{"oil", 98.0, 68.0}}};
  const auto recs = average_word_aucs(folds, ptrs(segs));
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].auc_mu == doctest::Approx(83.0));
  CHECK(recs[0].auc_delta == doctest::Approx(30.0));
  const auto swapped = average_word_aucs({{{"oil", 68.0, 98.0}}}, ptrs(segs));
  CHECK(swapped[0].auc_delta == doctest::Approx(-30.0));
  CHECK(swapped[0].auc_mu == recs[0].auc_mu);

  const auto two = average_word_aucs({{{"oil", 90.0, 70.0}}, {{"oil", 80.0, 60.0}}}, ptrs(segs));
  CHECK(two[0].auc_t == doctest::Approx(85.0));
  CHECK(two[0].folds == 2);
}

TEST_CASE("complementarity report ranks words") {
  std::vector<WordAucRecord> recs;
  for (int i = 0; i < 6; ++i) {
    WordAucRecord r;
    r.word = "w" + std::to_string(i);
    r.auc_t = 60 + 5 * i;
    r.auc_v = 80 - 2 * i;
    r.auc_mu = (r.auc_t + r.auc_v) / 2;
    r.auc_delta = r.auc_t - r.auc_v;
    r.stated_rate = 0.1 * i;
    r.gt_segment_freq = 10 + i;
    recs.push_back(r);
  }
  const auto rep = complementarity_report(recs, 2);
  CHECK(rep.easiest.size() == 2);
  CHECK(rep.easiest[0].word == "w5");
  CHECK(rep.hardest[0].word == "w0");
  CHECK(rep.asr_better[0].word == "w5");
  CHECK(rep.video_better[0].word == "w0");
  CHECK(rep.stated_vs_delta.rho == doctest::Approx(1.0));
}

}  // TEST_SUITE
