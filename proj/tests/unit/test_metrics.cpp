#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "helpers.hpp"
#include "vidcap/error.hpp"
#include "vidcap/metrics.hpp"
#include "vidcap/stemmer.hpp"

using namespace vidcap;
using testutil::words;

namespace {
const std::vector<std::string> kSmallVocab{"a", "b", "c", "d", "e"};
const std::vector<std::string> kStemVocab{"cat", "cats", "run", "running", "the", "oil", "add", "added"};
}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("lcs matches subset enumeration") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto a = testutil::random_tokens(rng, kSmallVocab, 0, 12);
    const auto b = testutil::random_tokens(rng, kSmallVocab, 0, 12);
    REQUIRE(lcs_length(a, b) == oracle::lcs(a, b));
  }
}

TEST_CASE("rouge-l hand fixture and degenerate cases") {
  // LCS 3 of 4 on both sides
  CHECK(rouge_l_sentence(words("a b c d"), words("a c b d")) == doctest::Approx(0.75).epsilon(1e-12));
  const std::vector<Tokens> c{words("a b c d")}, r{words("a c b d")};
  CHECK(rouge_l(c, r) == doctest::Approx(75.0));
  CHECK(rouge_l_sentence({}, words("a b")) == 0.0);
  CHECK_THROWS_AS(rouge_l_sentence(words("a"), {}), ValidationError);
  const std::vector<Tokens> same{words("x y z"), words("p q")};
  CHECK(rouge_l(same, same) == doctest::Approx(100.0));
}

TEST_CASE("rouge-l recall never drops when a reference token is appended") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto c = testutil::random_tokens(rng, kSmallVocab, 1, 8);
    const auto r = testutil::random_tokens(rng, kSmallVocab, 1, 8);
    const double before = static_cast<double>(lcs_length(c, r)) / r.size();
    c.push_back(r[rng() % r.size()]);
    CHECK(static_cast<double>(lcs_length(c, r)) / r.size() >= before);
  }
}

TEST_CASE("bleu4 agrees with brute-force n-gram enumeration") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 150; ++i) {
    std::vector<Tokens> c, r;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int s = 0; s < n; ++s) {
      c.push_back(testutil::random_tokens(rng, {"a", "b", "c"}, 1, 9));
      r.push_back(testutil::random_tokens(rng, {"a", "b", "c"}, 1, 9));
    }
    REQUIRE(bleu4(c, r) == doctest::Approx(oracle::bleu4(c, r)).epsilon(1e-9));
  }
}

TEST_CASE("bleu4 fixtures") {
  const std::vector<Tokens> c{words("the cat sat")}, r{words("the cat sat down")};
  // no candidate 4-gram: zero by convention
  CHECK(bleu4(c, r) == 0.0);
  const std::vector<Tokens> c2{words("the cat sat"), words("the cat sat")}, r2{words("the cat sat down"), words("the cat sat down")};
  CHECK(bleu4(c2, r2) == 0.0);
  const std::vector<Tokens> id{words("put the pan on the stove"), words("add oil to the pan")};
  CHECK(bleu4(id, id) == doctest::Approx(100.0));
  const std::vector<Tokens> miss{words("a b c d e")}, ref{words("f g h i j")};
  CHECK(bleu4(miss, ref) == 0.0);
  // brevity penalty on a 4-gram-bearing candidate
  const std::vector<Tokens> c3{words("a b c d")}, r3{words("a b c d e f")};
  CHECK(bleu4(c3, r3) == doctest::Approx(100.0 * std::exp(1.0 - 6.0 / 4.0)));
  CHECK_THROWS_AS(bleu4(c3, r2), ValidationError);
}

TEST_CASE("porter stemmer reference words") {
  CHECK(porter_stem("caresses") == "caress");
  CHECK(porter_stem("ponies") == "poni");
  CHECK(porter_stem("cats") == "cat");
  CHECK(porter_stem("running") == "run");
  CHECK(porter_stem("relational") == "relat");
  CHECK(porter_stem("hopeful") == "hope");
  CHECK(porter_stem("generalization") == "gener");
  CHECK(porter_stem("sky") == "sky");
}

TEST_CASE("meteor matches alignment enumeration") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const auto c = testutil::random_tokens(rng, kStemVocab, 0, 6);
    const auto r = testutil::random_tokens(rng, kStemVocab, 1, 6);
    const auto a = meteor_align(c, r);
    const auto o = oracle::meteor_counts(c, r);
    REQUIRE(static_cast<int>(a.matches) == o.matches);
    REQUIRE(static_cast<int>(a.chunks) == o.chunks);
    REQUIRE(meteor_sentence(c, r) == doctest::Approx(oracle::meteor_sentence(c, r)).epsilon(1e-12));
  }
}

TEST_CASE("meteor fixtures") {
  const auto s = words("add the oil to pan");
  CHECK(meteor_sentence(s, s) == doctest::Approx(1.0 - 0.5 * 0.008).epsilon(1e-12));
  CHECK(meteor_sentence(words("x y"), words("a b")) == 0.0);
  CHECK(meteor_sentence(words("cats"), words("cat")) > 0.0);
  CHECK_THROWS_AS(meteor_sentence(s, {}), ValidationError);
}

TEST_CASE("cider-d matches the literal formula") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    std::vector<Tokens> c, r;
    const int n = 2 + static_cast<int>(rng() % 4);
    for (int s = 0; s < n; ++s) {
      c.push_back(testutil::random_tokens(rng, kSmallVocab, 1, 8));
      r.push_back(testutil::random_tokens(rng, kSmallVocab, 1, 8));
    }
    const auto got = cider_segments(c, r);
    const auto want = oracle::cider_segments(c, r);
    for (std::size_t s = 0; s < got.size(); ++s) REQUIRE(got[s] == doctest::Approx(want[s]).epsilon(1e-9));
  }
}

TEST_CASE("cider-d fixtures") {
  // disjoint vocabularies: every n-gram has df 1 < N
  const std::vector<Tokens> refs{words("add oil to the pan"), words("stir rice in a pot")};
  const auto seg = cider_segments(refs, refs);
  CHECK(seg[0] == doctest::Approx(10.0));
  CHECK(seg[1] == doctest::Approx(10.0));
  const std::vector<Tokens> miss{words("x y z"), words("q r")};
  CHECK(cider(miss, refs) == 0.0);
  const std::vector<Tokens> one{words("add oil")};
  CHECK(cider(one, one) == 0.0);
}

TEST_CASE("metrics are invariant to joint segment reordering") {
  std::mt19937_64 rng(29);
  std::vector<Tokens> c, r;
  for (int s = 0; s < 8; ++s) {
    c.push_back(testutil::random_tokens(rng, kStemVocab, 2, 8));
    r.push_back(testutil::random_tokens(rng, kStemVocab, 2, 8));
  }
  const auto a = score_all(c, r);
  std::vector<Tokens> c2(c.rbegin(), c.rend()), r2(r.rbegin(), r.rend());
  const auto b = score_all(c2, r2);
  CHECK(a.bleu4 == doctest::Approx(b.bleu4));
  CHECK(a.meteor == doctest::Approx(b.meteor));
  CHECK(a.rouge_l == doctest::Approx(b.rouge_l));
  CHECK(a.cider == doctest::Approx(b.cider));
}

TEST_CASE("score_all ranges and per-segment vectors") {
  std::mt19937_64 rng(31);
  std::vector<Tokens> c, r;
  for (int s = 0; s < 10; ++s) {
    c.push_back(testutil::random_tokens(rng, kStemVocab, 0, 8));
    r.push_back(testutil::random_tokens(rng, kStemVocab, 1, 8));
  }
  const auto rep = score_all(c, r, "x", 2);
  CHECK(rep.system == "x");
  CHECK(rep.fold == 2);
  CHECK(rep.seg_bleu4.size() == 10);
  CHECK(rep.seg_cider.size() == 10);
  for (double v : {rep.bleu4, rep.meteor, rep.rouge_l}) {
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
  }
  CHECK(rep.cider >= 0.0);
  CHECK(rep.cider <= 10.0);
}

TEST_CASE("smoothed sentence bleu") {
  CHECK(sentence_bleu4_smoothed(words("a b c d"), words("a b c d")) == doctest::Approx(100.0));
  // unigram precision 1, higher orders smoothed: (1 * 3/3 * 2/2 * 1/1) with no 4-grams -> (0+1)/(0+1)
  CHECK(sentence_bleu4_smoothed(words("the cat sat"), words("the cat sat")) == doctest::Approx(100.0));
  CHECK(sentence_bleu4_smoothed({}, words("a")) == 0.0);
  CHECK(sentence_bleu4_smoothed(words("x"), words("a")) == 0.0);
}

TEST_CASE("diversity fixtures") {
  Vocabulary v = [] {
    std::vector<Tokens> lists;
    Tokens all;
    for (int i = 0; i < 80; ++i) all.push_back("w" + std::to_string(i));
    lists.push_back(all);
    std::vector<const Tokens*> ptrs{&lists[0]};
    return Vocabulary::from_token_lists(ptrs, 1);
  }();
  std::vector<Tokens> preds;
  for (int i = 0; i < 40; i += 2) preds.push_back({"w" + std::to_string(i), "w" + std::to_string(i + 1)});
  const std::vector<Tokens> train{preds[0], preds[1]};
  const auto d = diversity(preds, train, v);
  CHECK(d.vocab_coverage == doctest::Approx(50.0));
  CHECK(d.pct_not_copied == doctest::Approx(100.0 * 18 / 20));
  CHECK(d.pct_unique == doctest::Approx(100.0));

  const std::vector<Tokens> constant(4, words("heat the oil"));
  const auto d2 = diversity(constant, constant, v);
  CHECK(d2.pct_unique == doctest::Approx(25.0));
  CHECK(d2.pct_not_copied == 0.0);
}

}  // TEST_SUITE
