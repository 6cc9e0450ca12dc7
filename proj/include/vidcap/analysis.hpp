#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vidcap/autodiff.hpp"
#include "vidcap/corpus.hpp"

namespace vidcap {

enum class DanModality { kAsr, kVideo };

struct DanParams {
  int hidden = 256;
  int steps = 400;
  int batch_size = 64;
  double lr = 0.001;
  int asr_min_count = 5;  // input vocabulary threshold over training ASR
  std::uint64_t seed = 0;
};

// Deep averaging network: mean of learned ASR token embeddings (or of the
// raw frame rows) -> linear -> two residual ReLU layers -> softmax over the
// caption vocabulary.
class DanClassifier {
 public:
  DanClassifier(DanModality modality, DanParams params, Vocabulary caption_vocab, Vocabulary asr_vocab,
                std::size_t feature_dim);

  DanModality modality() const { return modality_; }
  const DanParams& params_config() const { return cfg_; }
  const Vocabulary& caption_vocab() const { return vocab_; }
  const Vocabulary& asr_vocab() const { return asr_vocab_; }
  ad::ParameterSet& params() { return params_; }

  // Logits (rows = segments) on the given tape.
  ad::Var logits(ad::Tape& tape, std::span<const Segment* const> segments);
  // Row-stochastic output distributions.
  ad::Matrix predict(std::span<const Segment* const> segments);
  // Mean soft cross-entropy against caption unigram targets; segments whose
  // caption has no in-vocabulary word are ignored.
  ad::Var loss(ad::Tape& tape, std::span<const Segment* const> segments);

 private:
  DanModality modality_;
  DanParams cfg_;
  Vocabulary vocab_;
  Vocabulary asr_vocab_;
  std::size_t feature_dim_;
  ad::ParameterSet params_;
};

// count(w in caption) / |caption| over in-vocabulary words, renormalized.
// All zeros when no caption word is in the vocabulary.
std::vector<double> unigram_target(const Segment& segment, const Vocabulary& vocab);

struct DanTrainResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> losses;
};

// Builds the ASR input vocabulary from train_segments when the modality is
// ASR. Segments with all-OOV captions are skipped.
DanClassifier make_dan(DanModality modality, const DanParams& params, const Vocabulary& caption_vocab,
                       std::span<const Segment* const> train_segments, std::size_t feature_dim);
DanTrainResult train_dan(DanClassifier& dan, std::span<const Segment* const> train_segments);

ad::GradCheckResult dan_gradient_check(DanClassifier& dan, std::span<const Segment* const> segments,
                                       double eps = 1e-5, int per_param = 8, std::uint64_t seed = 0);

// P(w in ASR | w in GT). Throws ValidationError when w never appears in a caption.
double stated_rate(const std::string& word, std::span<const Segment* const> segments);

struct WordAucRecord {
  std::string word;
  double auc_t = 0.0;
  double auc_v = 0.0;
  double auc_mu = 0.0;
  double auc_delta = 0.0;
  std::optional<double> stated_rate;
  int gt_segment_freq = 0;
  int folds = 0;  // folds contributing to the average
};

// Per-fold AUCs of one classifier pair on test segments, for words in
// `words`. Words with a single label class in these segments are omitted.
struct FoldWordAuc {
  std::string word;
  double auc_t = 0.0;
  double auc_v = 0.0;
};
std::vector<FoldWordAuc> word_aucs(DanClassifier& asr_dan, DanClassifier& video_dan,
                                   std::span<const Segment* const> test_segments,
                                   std::span<const std::string> words);

// Ground-truth segment frequency per caption word over the given segments.
std::vector<std::pair<std::string, int>> caption_word_frequencies(std::span<const Segment* const> segments);

// Averages fold AUCs per word and attaches stated rate and frequency
// computed over all_segments. Sorted by word.
std::vector<WordAucRecord> average_word_aucs(const std::vector<std::vector<FoldWordAuc>>& folds,
                                             std::span<const Segment* const> all_segments);

struct CorrelationResult {
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

struct ComplementarityReport {
  std::vector<WordAucRecord> records;
  std::vector<WordAucRecord> easiest, hardest, asr_better, video_better;
  CorrelationResult stated_vs_delta;
  CorrelationResult freq_vs_delta;
};

ComplementarityReport complementarity_report(std::vector<WordAucRecord> records, std::size_t top_k = 10);

std::string records_csv(const std::vector<WordAucRecord>& records);
std::string scatter_csv(const std::vector<WordAucRecord>& records);
std::string report_json(const ComplementarityReport& report);

}  // namespace vidcap
