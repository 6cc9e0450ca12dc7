#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vidcap/corpus.hpp"
#include "vidcap/text.hpp"

namespace vidcap {

// Every metric takes one candidate and one reference per segment and pools
// at segment level (micro-averaging). Percent-scale unless stated otherwise.

// Corpus BLEU-4: clipped n-gram counts pooled over segments, uniform
// geometric mean, brevity penalty. Any zero precision gives 0.
double bleu4(std::span<const Tokens> candidates, std::span<const Tokens> references);

// Add-one smoothed sentence BLEU-4 (n >= 2 smoothed) for paired tests.
double sentence_bleu4_smoothed(const Tokens& candidate, const Tokens& reference);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

constexpr double kRougeBeta = 1.2;
// F-measure of LCS precision/recall for one pair, in [0,1].
double rouge_l_sentence(const Tokens& candidate, const Tokens& reference, double beta = kRougeBeta);
double rouge_l(std::span<const Tokens> candidates, std::span<const Tokens> references);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
  // Cap on the chunk-minimizing search; beyond it the best alignment found so
  // far is used.
  std::size_t max_search_nodes = 200000;
};

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Exact stage then Porter-stem stage, each maximal; among those alignments the
// one with the fewest chunks.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference, const MeteorParams& p = {});
double meteor_sentence(const Tokens& candidate, const Tokens& reference, const MeteorParams& p = {});
double meteor(std::span<const Tokens> candidates, std::span<const Tokens> references, const MeteorParams& p = {});

// CIDEr-D with idf from the given reference set. Returns per-segment scores
// on the 0-10 scale.
struct CiderParams {
  double sigma = 6.0;
  int max_n = 4;
};
std::vector<double> cider_segments(std::span<const Tokens> candidates, std::span<const Tokens> references,
                                   const CiderParams& p = {});
double cider(std::span<const Tokens> candidates, std::span<const Tokens> references, const CiderParams& p = {});

struct MetricReport {
  std::string system;
  int fold = 0;
  double bleu4 = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  // Per-segment scores, same order as the inputs. BLEU uses the smoothed
  // sentence variant.
  std::vector<double> seg_bleu4, seg_meteor, seg_rouge_l, seg_cider;
};

MetricReport score_all(std::span<const Tokens> candidates, std::span<const Tokens> references,
                       std::string system = {}, int fold = 0);

struct DiversityReport {
  double vocab_coverage = 0.0;
  double pct_not_copied = 0.0;
  double pct_unique = 0.0;
};

DiversityReport diversity(std::span<const Tokens> predictions, std::span<const Tokens> train_captions,
                          const Vocabulary& vocab);

}  // namespace vidcap
