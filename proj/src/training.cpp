#include "vidcap/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vidcap/error.hpp"
#include "vidcap/log.hpp"
#include "vidcap/metrics.hpp"
#include "vidcap/parallel.hpp"

namespace vidcap {

std::vector<TrainExample> make_examples(std::span<const Segment* const> segments, const Vocabulary& vocab,
                                        const OracleDetector* detector, double fraction) {
  std::vector<TrainExample> out;
  out.reserve(segments.size());
  for (const Segment* s : segments) {
    TrainExample e;
    e.segment = s;
    e.caption_ids = preprocess(*s, vocab, 0).caption_ids;
    if (detector) e.oracle = detector->detect(*s, fraction);
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::vector<EncoderInput> encode_all(const TransformerModel& model, std::span<const TrainExample> ex,
                                     std::uint64_t seed) {
  std::vector<EncoderInput> in;
  in.reserve(ex.size());
  for (const auto& e : ex) in.push_back(encode_inputs(model, *e.segment, e.oracle, seed));
  return in;
}

}  // namespace

std::vector<Tokens> decode_examples(TransformerModel& model, std::span<const TrainExample> examples,
                                    std::uint64_t seed, int batch_size) {
  return greedy_decode(model, encode_all(model, examples, seed), batch_size);
}

double dev_rouge_l(TransformerModel& model, std::span<const TrainExample> dev_set, std::uint64_t seed) {
  if (dev_set.empty()) return 0.0;
  const auto hyp = decode_examples(model, dev_set, seed);
  std::vector<Tokens> refs;
  refs.reserve(dev_set.size());
  for (const auto& e : dev_set) refs.push_back(e.segment->caption.tokens);
  return rouge_l(hyp, refs);
}

TrainResult train(TransformerModel& model, std::span<const TrainExample> train_set,
                  std::span<const TrainExample> dev_set, const TrainOptions& opts) {
  if (train_set.empty()) throw ValidationError("train: empty training set");
  const HyperParams& hp = model.hparams();
  const int interval = hp.checkpoint_interval();
  ad::Adam adam(hp.lr);
  std::mt19937_64 order_rng(derive_seed(hp.seed, "batches"));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), order_rng);
  std::size_t cursor = 0;

  TrainResult res;
  double best = -1.0;
  int above = 0;
  const std::uint64_t dev_seed = derive_seed(hp.seed, "dev");
  for (long step = 1; step <= hp.train_steps; ++step) {
    std::vector<EncoderInput> inputs;
    std::vector<std::vector<int>> caps;
    const std::uint64_t step_seed = derive_seed(hp.seed, static_cast<std::uint64_t>(step));
    for (int i = 0; i < hp.batch_size; ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      const auto& e = train_set[order[cursor++]];
      inputs.push_back(encode_inputs(model, *e.segment, e.oracle, step_seed));
      caps.push_back(e.caption_ids);
    }
    const Batch batch = make_batch(model, inputs, caps);
    model.params().zero_grad();
    double loss = 0.0;
    {
      ad::Tape tape(true);
      ForwardResult fr = forward(model, tape, batch);
      loss = fr.loss.scalar();
      tape.backward(fr.loss);
    }
    if (step == 1) res.initial_loss = loss;
    res.losses.push_back(loss);
    res.final_loss = loss;
    if (loss > 10.0 * res.initial_loss) {
      if (++above >= 100) throw NumericError("training diverged at step " + std::to_string(step));
    } else {
      above = 0;
    }
    adam.step(model.params());
    for (const auto& p : model.params()) {
      if (!p.value.allFinite()) throw NumericError("non-finite parameter " + p.name + " at step " + std::to_string(step));
    }
    if (opts.on_step) opts.on_step(step, loss);

    if (step % interval == 0 || step == hp.train_steps) {
      Checkpoint c;
      c.step = step;
      c.dev_rouge_l = opts.evaluate_dev ? dev_rouge_l(model, dev_set, dev_seed) : 0.0;
      // strict > keeps the earliest of equal scores; without dev scoring the
      // latest checkpoint wins
      const bool better = opts.evaluate_dev ? c.dev_rouge_l > best : true;
      if (better) {
        best = c.dev_rouge_l;
        for (auto& old : res.checkpoints) old.params.clear();
        c.params = model.params().snapshot();
        res.best = res.checkpoints.size();
      }
      log(LogLevel::kDebug, "step " + std::to_string(step) + " loss " + std::to_string(loss) + " dev rouge-l " +
                                std::to_string(c.dev_rouge_l));
      res.checkpoints.push_back(std::move(c));
    }
  }
  if (!res.checkpoints.empty()) model.params().restore(res.checkpoints[res.best].params);
  return res;
}

// --- grid search -------------------------------------------------------------

GridSpec GridSpec::paper() { return GridSpec{{128, 256}, {2, 3}, {0.0005, 0.001}}; }

GridSpec GridSpec::single(const HyperParams& hp) { return GridSpec{{hp.d_model}, {hp.n_layers}, {hp.lambda_reg}}; }

std::vector<HyperParams> GridSpec::cells(const HyperParams& base) const {
  if (d_model.empty() || n_layers.empty() || lambda_reg.empty()) throw ConfigError("grid has an empty axis");
  std::vector<HyperParams> out;
  for (int d : d_model)
    for (int l : n_layers)
      for (double lam : lambda_reg) {
        HyperParams h = base;
        h.d_model = d;
        h.d_ffn = d;
        h.n_layers = l;
        h.lambda_reg = lam;
        h.validate();
        out.push_back(h);
      }
  return out;
}

double GridResult::best_dev_rouge_l() const {
  const auto& r = cells.at(best_cell).result;
  return r.checkpoints.empty() ? 0.0 : r.checkpoints[r.best].dev_rouge_l;
}

GridResult grid_search(const HyperParams& base, const GridSpec& grid, Modality modality, const Vocabulary& vocab,
                       std::size_t feature_dim, std::span<const TrainExample> train_set,
                       std::span<const TrainExample> dev_set, int jobs) {
  const auto hps = grid.cells(base);
  GridResult gr;
  gr.cells.resize(hps.size());
  std::vector<std::unique_ptr<TransformerModel>> models(hps.size());
  parallel_for(hps.size(), jobs, [&](std::size_t i) {
    gr.cells[i].hparams = hps[i];
    try {
      auto m = std::make_unique<TransformerModel>(hps[i], modality, vocab, feature_dim);
      gr.cells[i].result = train(*m, train_set, dev_set);
      models[i] = std::move(m);
    } catch (const NumericError& e) {
      gr.cells[i].error = e.what();
      log_warning(std::string("grid cell ") + std::to_string(i) + " failed: " + e.what());
    }
  });
  bool any = false;
  double best = 0.0;
  for (std::size_t i = 0; i < hps.size(); ++i) {
    if (!models[i]) continue;
    const auto& r = gr.cells[i].result;
    const double s = r.checkpoints.empty() ? 0.0 : r.checkpoints[r.best].dev_rouge_l;
    if (!any || s > best) {
      any = true;
      best = s;
      gr.best_cell = i;
    }
  }
  if (!any) throw NumericError("grid search: every cell failed (" + gr.cells.front().error + ")");
  gr.model = std::move(models[gr.best_cell]);
  return gr;
}

ad::GradCheckResult gradient_check(TransformerModel& model, std::span<const TrainExample> batch, double eps,
                                   int per_param, std::uint64_t seed) {
  std::vector<EncoderInput> inputs;
  std::vector<std::vector<int>> caps;
  for (const auto& e : batch) {
    inputs.push_back(encode_inputs(model, *e.segment, e.oracle, seed));
    caps.push_back(e.caption_ids);
  }
  const Batch b = make_batch(model, inputs, caps);
  return ad::gradient_check(
      model.params(), [&](ad::Tape& t) { return forward(model, t, b).loss; }, eps, per_param, seed);
}

}  // namespace vidcap
