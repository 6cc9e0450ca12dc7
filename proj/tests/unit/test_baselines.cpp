#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vidcap/baselines.hpp"
#include "vidcap/error.hpp"
#include "vidcap/synth.hpp"

using namespace vidcap;
using testutil::make_segment;
using testutil::words;

namespace {

std::vector<const Segment*> ptrs(const std::vector<Segment>& v) {
  std::vector<const Segment*> p;
  for (const auto& s : v) p.push_back(&s);
  return p;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("constant and asc") {
  const ConstantPredictor cp;
  const auto a = make_segment("a", 0, 1, "x", "now add the oil");
  const auto b = make_segment("b", 0, 1, "y", "");
  CHECK(join(cp.predict(a).tokens) == kConstantCaption);
  CHECK(cp.predict(a) == cp.predict(b));
  CHECK(predict_asc(a).tokens == words("now add the oil"));
  CHECK(predict_asc(b).tokens.empty());
}

TEST_CASE("fasc ratio arithmetic") {
  // GT: oil x9 plus 81 other tokens (N_GT = 90); ASR: oil x4 plus 186 others (N_ASR = 190).
  // Word types: oil, g1..g4 (GT only), a1..a5 (ASR only) -> V = 10.
  std::vector<Segment> segs;
  auto s = make_segment("s", 0, 1, "x", "");
  s.caption.tokens.clear();
  for (int i = 0; i < 9; ++i) s.caption.tokens.push_back("oil");
  for (int i = 0; i < 81; ++i) s.caption.tokens.push_back("g" + std::to_string(1 + i % 4));
  for (int i = 0; i < 4; ++i) s.asr.tokens.push_back("oil");
  for (int i = 0; i < 186; ++i) s.asr.tokens.push_back("a" + std::to_string(1 + i % 5));
  segs.push_back(s);
  const auto m = fit_fasc(ptrs(segs), 1.0, 3);
  CHECK(m.trained_on == 3);
  CHECK(m.r("oil") == doctest::Approx(4.0));
  CHECK(m.r("a1") < 1.0);
  CHECK(m.r("never") == 0.0);
  CHECK_THROWS(fit_fasc(std::vector<const Segment*>{}, 1.0));
}

TEST_CASE("fasc symmetric corpora give ratio one") {
  std::vector<Segment> segs{make_segment("a", 0, 1, "add the oil", "add the oil"),
                            make_segment("b", 0, 1, "stir the pot", "stir the pot")};
  const auto m = fit_fasc(ptrs(segs));
  for (const auto& w : words("add the oil stir pot")) CHECK(m.r(w) == doctest::Approx(1.0));
}

TEST_CASE("fasc prediction keeps order and is a subsequence of asc") {
  FascModel m;
  m.ratio = {{"add", 3.0}, {"oil", 4.0}, {"the", 1.1}, {"ah", 0.5}, {"wish", 0.2}};
  m.keep_threshold = 1.0;
  const auto s = make_segment("s", 0, 1, "x", "ah add the oil wish");
  CHECK(predict_fasc(m, s).tokens == words("add the oil"));
  m.keep_threshold = 0.0;
  const auto s2 = make_segment("s2", 0, 1, "x", "ah unknown add");
  CHECK(predict_fasc(m, s2).tokens == words("ah add"));
  CHECK(predict_fasc(m, make_segment("e", 0, 1, "x", "")).tokens.empty());

  SynthSpec spec;
  spec.num_videos = 20;
  const Corpus c = generate_synthetic_corpus(spec, 9);
  const auto segs = c.segments();
  const auto fm = fit_fasc(segs);
  for (const Segment* seg : segs) {
    const auto out = predict_fasc(fm, *seg).tokens;
    const auto& asr = seg->asr.tokens;
    std::size_t j = 0;
    for (std::size_t i = 0; i < asr.size() && j < out.size(); ++i)
      if (asr[i] == out[j]) ++j;
    CHECK(j == out.size());
  }
}

TEST_CASE("retrieval idf and prediction") {
  std::vector<Segment> segs{make_segment("a", 0, 1, "add oil", ""), make_segment("b", 0, 1, "add salt", "")};
  const auto idx = build_retrieval_index(ptrs(segs), 1);
  CHECK(idx.idf.at("add") == 0.0);
  CHECK(idx.idf.at("oil") == doctest::Approx(std::log(2.0)));
  CHECK(idx.idf.at("salt") == doctest::Approx(std::log(2.0)));

  std::vector<Segment> one{make_segment("a", 0, 1, "add oil", "")};
  const auto single = build_retrieval_index(ptrs(one));
  for (const auto& [w, v] : single.idf) CHECK(v == 0.0);
  CHECK(join(predict_ret(single, make_segment("q", 0, 1, "x", "add oil")).tokens) == kConstantCaption);

  std::vector<Segment> toy{make_segment("a", 0, 1, "add oil", ""), make_segment("b", 0, 1, "stir the soup", "")};
  const auto t = build_retrieval_index(ptrs(toy));
  CHECK(predict_ret(t, make_segment("q", 0, 1, "x", "please stir soup")).tokens == words("stir the soup"));
  CHECK(predict_ret(t, make_segment("q", 0, 1, "x", "add oil")).tokens == words("add oil"));
  CHECK(join(predict_ret(t, make_segment("q", 0, 1, "x", "zzz")).tokens) == kConstantCaption);
}

TEST_CASE("retrieval returns training captions verbatim") {
  SynthSpec spec;
  spec.num_videos = 20;
  const Corpus c = generate_synthetic_corpus(spec, 10);
  const auto segs = c.segments();
  std::vector<const Segment*> train(segs.begin(), segs.begin() + 60), test(segs.begin() + 60, segs.end());
  const auto idx = build_retrieval_index(train);
  std::set<Tokens> caps;
  for (const Segment* s : train) caps.insert(s->caption.tokens);
  for (const Segment* s : test) {
    const auto out = predict_ret(idx, *s).tokens;
    CHECK((caps.count(out) == 1 || join(out) == kConstantCaption));
  }
}

TEST_CASE("oracle detector") {
  const std::vector<std::string> labels{"mushroom", "pan", "pot", "knife"};
  OracleDetector d(labels);
  const auto s = make_segment("s", 0, 1, "put the mushrooms in the pan", "");
  std::vector<Segment> train{s, make_segment("t", 0, 1, "heat the pan", ""), make_segment("u", 0, 1, "use a pot", "")};
  std::vector<const Segment*> tp;
  for (const auto& x : train) tp.push_back(&x);
  d.fit_frequency(tp);
  CHECK(d.frequency_rank().front() == "pan");
  CHECK(d.detect(s, 1.0) == std::vector<std::string>{"mushroom", "pan"});
  CHECK(d.detect(make_segment("n", 0, 1, "stir well", ""), 1.0).empty());
  for (double f : {0.25, 0.5, 0.75}) {
    const auto lo = d.detect(s, f), hi = d.detect(s, 1.0);
    for (const auto& l : lo) CHECK(std::find(hi.begin(), hi.end(), l) != hi.end());
  }
  CHECK(d.selected(0.25).size() == 1);
  CHECK(normalize_morphology("tomatoes") == "tomato");
  CHECK(normalize_morphology("dishes") == "dish");
  CHECK_THROWS(OracleDetector(std::vector<std::string>{"pan", "pans"}));
  CHECK(shuffle_labels({"a", "b", "c"}, 5) == shuffle_labels({"a", "b", "c"}, 5));
}

}  // TEST_SUITE
