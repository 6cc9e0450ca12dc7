#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vidcap/autodiff.hpp"
#include "vidcap/corpus.hpp"

namespace vidcap {

enum class Modality { kAsr, kVideo, kAsrVideo, kOracle, kAsrOracle };

Modality parse_modality(const std::string& name);  // "asr", "video", "asr+video", "oracle", "asr+oracle"
std::string modality_name(Modality m);
bool uses_asr(Modality m);
bool uses_video(Modality m);
bool uses_oracle(Modality m);

struct HyperParams {
  int d_model = 64;
  int n_layers = 2;
  double lambda_reg = 0.0005;
  int d_ffn = 64;  // kept equal to d_model
  int n_heads = 4;
  int batch_size = 32;
  double lr = 0.001;
  int train_steps = 1000;
  int checkpoint_every = 0;  // 0: train_steps / 10
  int k_frames = 10;
  int max_input_tokens = 80;
  int max_decode_len = 30;
  std::uint64_t seed = 0;

  static HyperParams paper();
  static HyperParams desk();
  int checkpoint_interval() const;
  void validate() const;  // ConfigError
  std::string to_json() const;
  static HyperParams from_json(const std::string& text);
};

// One encoder input before embedding: [tokens][frames][oracle labels].
struct EncoderInput {
  std::vector<int> token_ids;
  ad::Matrix frames;  // k x D, temporally sorted sample; 0 rows when video is off
  std::vector<int> oracle_ids;
  std::size_t length() const {
    return token_ids.size() + static_cast<std::size_t>(frames.rows()) + oracle_ids.size();
  }
};

class TransformerModel {
 public:
  TransformerModel(HyperParams hp, Modality modality, Vocabulary vocab, std::size_t feature_dim);

  const HyperParams& hparams() const { return hp_; }
  Modality modality() const { return modality_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::size_t feature_dim() const { return feature_dim_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

 private:
  HyperParams hp_;
  Modality modality_;
  Vocabulary vocab_;
  std::size_t feature_dim_;
  ad::ParameterSet params_;
};

// Builds the encoder input for one segment. ASR ids are truncated to
// max_input_tokens; frames are k draws with replacement (sorted by index),
// or k zero rows for a frameless segment; oracle labels are shuffled. All
// randomness derives from (seed, segment id).
EncoderInput encode_inputs(const TransformerModel& model, const Segment& segment,
                           const std::vector<std::string>& oracle_labels, std::uint64_t seed);

struct Batch {
  int batch = 0;
  int enc_len = 0;
  int dec_len = 0;
  std::vector<int> enc_tokens;  // B*Le, -1 where not a token position
  ad::Matrix enc_frames;        // B*Le x D (zero outside frame positions)
  std::vector<int> enc_types;   // B*Le, -1 on padding
  std::vector<int> enc_pos;     // B*Le position within modality
  std::vector<std::uint8_t> enc_valid;
  std::vector<int> dec_inputs;  // B*Ld
  std::vector<int> dec_targets;  // B*Ld, -1 on padding
  std::vector<std::uint8_t> dec_valid;
};

// caption_ids are BOS ... EOS sequences (may be empty for inference).
// mask_frames drops frame positions from the attention masks.
Batch make_batch(const TransformerModel& model, const std::vector<EncoderInput>& inputs,
                 const std::vector<std::vector<int>>& caption_ids, bool mask_frames = false);

struct ForwardResult {
  ad::Var loss;    // ce + lambda * l2
  ad::Var ce;
  ad::Var logits;  // B*Ld x |V|
};

ForwardResult forward(TransformerModel& model, ad::Tape& tape, const Batch& batch);

// Output distributions for every decoder position, rows of B*Ld.
ad::Matrix predict_distributions(TransformerModel& model, const Batch& batch);

// Greedy decoding from BOS; argmax with ties to the lowest id, PAD and BOS
// never emitted. Stops at EOS or max_decode_len.
std::vector<Tokens> greedy_decode(TransformerModel& model, const std::vector<EncoderInput>& inputs,
                                  int batch_size = 64);

// Sum of squared weight-matrix entries (the regularized set).
double weight_l2(const TransformerModel& model);

}  // namespace vidcap
