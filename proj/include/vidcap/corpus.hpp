#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vidcap/text.hpp"

namespace vidcap {

enum class TokenSource { kAsr, kCaption, kGenerated };

struct TokenSequence {
  Tokens tokens;
  TokenSource source = TokenSource::kGenerated;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
  bool operator==(const TokenSequence&) const = default;
};

// F frames x D dims, row-major, temporally ordered.
struct FrameFeatureSet {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
  std::vector<double> frame_times;  // empty or one per row, nondecreasing

  bool empty() const { return rows == 0; }
  std::span<const float> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  bool operator==(const FrameFeatureSet&) const = default;
};

struct Segment {
  std::string segment_id;
  double start_s = 0.0;
  double end_s = 0.0;
  TokenSequence caption;
  TokenSequence asr;
  FrameFeatureSet frames;

  double duration() const { return end_s - start_s; }
  bool operator==(const Segment&) const = default;
};

struct Video {
  std::string video_id;
  double duration_s = 0.0;
  std::vector<Segment> segments;
  std::optional<std::string> language_hint;

  bool operator==(const Video&) const = default;
};

// Videos sorted by id. feature_dim is 0 when no segment carries frames.
struct Corpus {
  std::vector<Video> videos;
  std::size_t feature_dim = 0;

  std::size_t num_segments() const;
  std::vector<const Segment*> segments() const;
  // Segments of the given videos, in corpus order.
  std::vector<const Segment*> segments_of(const std::vector<std::string>& video_ids) const;
  const Video* find_video(const std::string& id) const;
  bool operator==(const Corpus&) const = default;
};

// Checks every Video/Segment/FrameFeatureSet invariant, sorts videos by id and
// recomputes feature_dim. Throws ValidationError naming the offender.
void validate(Corpus& corpus);

// Reads the JSON-lines corpus file plus its per-segment feature files.
Corpus ingest(const std::filesystem::path& corpus_path,
              const std::filesystem::path& features_dir);

// Writes corpus_path and one feature file per segment with frames into
// features_dir. ingest() of the result reproduces the corpus exactly.
void emit(const Corpus& corpus, const std::filesystem::path& corpus_path,
          const std::filesystem::path& features_dir);

struct CorpusStats {
  double asr_len_mean = 0.0;
  double asr_len_median = 0.0;
  double zero_asr_fraction = 0.0;
  double wpm_mean = 0.0;
  double caption_len_mean = 0.0;
  double segments_per_video_mean = 0.0;
  std::size_t num_videos = 0;
  std::size_t num_segments = 0;
};

CorpusStats compute_stats(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumReserved = 4;

  Vocabulary();

  // Builds from caption tokens only. Words occurring fewer than min_count times
  // are dropped; throws ValidationError when nothing survives.
  static Vocabulary build(std::span<const Segment* const> train_segments, int min_count = 5);
  // Same counting rule over arbitrary token lists (used for ASR input vocabularies).
  static Vocabulary from_token_lists(std::span<const Tokens* const> lists, int min_count);

  int id(const std::string& word) const;  // UNK when absent
  const std::string& word(int id) const;
  bool contains(const std::string& word) const { return word_to_id_.count(word) != 0; }
  std::size_t size() const { return id_to_word_.size(); }
  // Non-reserved entries in id order.
  std::span<const std::string> words() const {
    return std::span<const std::string>(id_to_word_).subspan(kNumReserved);
  }
  int min_count() const { return min_count_; }

  std::vector<int> encode(const Tokens& tokens) const;

 private:
  std::unordered_map<std::string, int> word_to_id_;
  std::vector<std::string> id_to_word_;
  int min_count_ = 5;
};

// ---------------------------------------------------------------------------
// Cross-validation splits

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> dev_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;

  bool operator==(const FoldSplit&) const = default;
};

// J independent 80/10/10 resamples over video ids. dev and test each get
// floor(n/10) videos (at least one); the remainder goes to train.
std::vector<FoldSplit> make_folds(const Corpus& corpus, int num_folds, std::uint64_t seed);
std::vector<FoldSplit> make_folds(std::vector<std::string> video_ids, int num_folds,
                                  std::uint64_t seed);

std::string folds_to_json(const std::vector<FoldSplit>& folds, std::uint64_t seed);
std::vector<FoldSplit> folds_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Preprocessing

struct PreparedExample {
  std::vector<int> input_ids;    // truncated ASR, OOV -> UNK
  std::vector<int> caption_ids;  // BOS caption EOS
  bool operator==(const PreparedExample&) const = default;
};

constexpr std::size_t kDefaultMaxInputTokens = 80;

// Keeps the first max_tokens tokens.
Tokens truncate_tokens(const Tokens& tokens, std::size_t max_tokens);

PreparedExample preprocess(const Segment& segment, const Vocabulary& vocab,
                           std::size_t max_input_tokens = kDefaultMaxInputTokens);

}  // namespace vidcap
