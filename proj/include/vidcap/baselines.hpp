#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vidcap/corpus.hpp"

namespace vidcap {

inline constexpr const char* kConstantCaption =
    "heat some oil in a pan and add salt and pepper to the pan and stir";

// CNST: the same caption for every segment.
class ConstantPredictor {
 public:
  ConstantPredictor();
  explicit ConstantPredictor(Tokens caption) : caption_(std::move(caption)) {}

  TokenSequence predict(const Segment&) const { return {caption_, TokenSource::kGenerated}; }
  const Tokens& caption() const { return caption_; }

 private:
  Tokens caption_;
};

// ASC: the segment's ASR tokens, untruncated.
TokenSequence predict_asc(const Segment& segment);

// FASC: Naive-Bayes style ratio r(w) = P(w|GT) / P(w|ASR) with add-one
// smoothing over the union of training caption and ASR word types.
struct FascModel {
  std::unordered_map<std::string, double> ratio;
  double keep_threshold = 1.0;
  int trained_on = -1;

  double r(const std::string& w) const;  // 0 for unseen words
};

FascModel fit_fasc(std::span<const Segment* const> train_segments, double keep_threshold = 1.0,
                   int fold_index = -1);
// Keeps ASR tokens with r(w) > keep_threshold, in order; unseen words are dropped.
TokenSequence predict_fasc(const FascModel& model, const Segment& segment);

// RET: tf-idf over training captions, cosine against the test ASR.
struct RetrievalIndex {
  std::unordered_map<std::string, double> idf;
  std::vector<Tokens> captions;
  std::vector<std::unordered_map<std::string, double>> vectors;
  std::vector<double> norms;  // 0 flags a zero vector
  Tokens fallback;
  int trained_on = -1;

  std::unordered_map<std::string, double> vectorize(const Tokens& tokens) const;
};

RetrievalIndex build_retrieval_index(std::span<const Segment* const> train_segments, int fold_index = -1,
                                     Tokens fallback = {});
// Highest-cosine training caption, ties to the lowest ordinal. Falls back to
// the constant caption when the query or every candidate has zero norm.
TokenSequence predict_ret(const RetrievalIndex& index, const Segment& segment);

// Plural stripping with a small irregular table; applied to labels and
// caption tokens alike.
std::string normalize_morphology(const std::string& word);

class OracleDetector {
 public:
  // Labels are normalized; duplicates after normalization are rejected.
  explicit OracleDetector(std::span<const std::string> labels);

  // Ranks labels by the number of training segments whose normalized caption
  // mentions them (descending, ties by label).
  void fit_frequency(std::span<const Segment* const> train_segments);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& frequency_rank() const { return rank_; }

  // Top ceil(fraction * |labels|) labels by frequency.
  std::vector<std::string> selected(double fraction) const;
  // Sorted set of selected labels mentioned in the ground-truth caption.
  std::vector<std::string> detect(const Segment& segment, double fraction) const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> rank_;
};

// Detected labels serialized in a seed-determined random order.
Tokens shuffle_labels(std::vector<std::string> labels, std::uint64_t seed);

}  // namespace vidcap
