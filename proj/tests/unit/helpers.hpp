#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vidcap/autodiff.hpp"
#include "vidcap/corpus.hpp"
#include "vidcap/text.hpp"

namespace testutil {

inline vidcap::Tokens words(const std::string& s) { return vidcap::tokenize(s); }

// Random sentence over a small vocabulary so n-grams collide often.
inline vidcap::Tokens random_tokens(std::mt19937_64& rng, const std::vector<std::string>& vocab, int min_len,
                                    int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  vidcap::Tokens t;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) t.push_back(vocab[pick(rng)]);
  return t;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("vidcap_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline vidcap::Segment make_segment(const std::string& id, double start, double end, const std::string& caption,
                                    const std::string& asr) {
  vidcap::Segment s;
  s.segment_id = id;
  s.start_s = start;
  s.end_s = end;
  s.caption = {vidcap::tokenize(caption), vidcap::TokenSource::kCaption};
  s.asr = {vidcap::tokenize(asr), vidcap::TokenSource::kAsr};
  return s;
}

// Zero-initialised biases put ReLU inputs exactly on the kink (e.g. an
// all-zero input row); finite differences are meaningless there.
inline void jitter_biases(vidcap::ad::ParameterSet& ps, std::uint64_t seed, double scale = 0.05) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  for (auto& p : ps) {
    if (p.name.size() < 2 || p.name.compare(p.name.size() - 2, 2, ".b") != 0) continue;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += g(rng);
  }
}

}  // namespace testutil
