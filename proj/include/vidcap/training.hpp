#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vidcap/baselines.hpp"
#include "vidcap/transformer.hpp"

namespace vidcap {

struct TrainExample {
  const Segment* segment = nullptr;
  std::vector<int> caption_ids;      // BOS ... EOS
  std::vector<std::string> oracle;   // detected labels (unordered)
};

// detector may be null when the modality takes no oracle input.
std::vector<TrainExample> make_examples(std::span<const Segment* const> segments, const Vocabulary& vocab,
                                        const OracleDetector* detector = nullptr, double fraction = 1.0);

struct Checkpoint {
  long step = 0;
  double dev_rouge_l = 0.0;
  std::vector<ad::Matrix> params;  // only kept for the best checkpoint
};

struct TrainResult {
  std::vector<Checkpoint> checkpoints;
  std::size_t best = 0;
  std::vector<double> losses;  // per step, regularized
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct TrainOptions {
  // Evaluate dev ROUGE-L at checkpoints; when off every checkpoint scores 0
  // and the last one is kept.
  bool evaluate_dev = true;
  std::function<void(long step, double loss)> on_step;
};

// Adam on teacher-forced cross-entropy plus L2. Leaves the model holding the
// best checkpoint's parameters. Throws NumericError on divergence.
TrainResult train(TransformerModel& model, std::span<const TrainExample> train_set,
                  std::span<const TrainExample> dev_set, const TrainOptions& opts = {});

// Decodes the examples with the model's seed and returns the outputs.
std::vector<Tokens> decode_examples(TransformerModel& model, std::span<const TrainExample> examples,
                                    std::uint64_t seed, int batch_size = 64);

double dev_rouge_l(TransformerModel& model, std::span<const TrainExample> dev_set, std::uint64_t seed);

struct GridSpec {
  std::vector<int> d_model;
  std::vector<int> n_layers;
  std::vector<double> lambda_reg;

  static GridSpec paper();
  static GridSpec single(const HyperParams& hp);
  std::vector<HyperParams> cells(const HyperParams& base) const;
};

struct GridCell {
  HyperParams hparams;
  TrainResult result;
  std::string error;  // non-empty if the cell failed
};

struct GridResult {
  std::unique_ptr<TransformerModel> model;
  std::size_t best_cell = 0;
  std::vector<GridCell> cells;
  double best_dev_rouge_l() const;
};

// Trains every cell; picks the best dev ROUGE-L checkpoint over all cells,
// ties to the earliest checkpoint of the first cell. Fails only when every
// cell fails.
GridResult grid_search(const HyperParams& base, const GridSpec& grid, Modality modality, const Vocabulary& vocab,
                       std::size_t feature_dim, std::span<const TrainExample> train_set,
                       std::span<const TrainExample> dev_set, int jobs = 1);

// Finite-difference check of the full regularized loss on one batch.
ad::GradCheckResult gradient_check(TransformerModel& model, std::span<const TrainExample> batch, double eps = 1e-5,
                                   int per_param = 8, std::uint64_t seed = 0);

}  // namespace vidcap
