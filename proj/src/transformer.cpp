#include "vidcap/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "vidcap/baselines.hpp"
#include "vidcap/error.hpp"

namespace vidcap {

using ad::Matrix;
using ad::Tape;
using ad::Var;

Modality parse_modality(const std::string& name) {
  if (name == "asr") return Modality::kAsr;
  if (name == "video") return Modality::kVideo;
  if (name == "asr+video") return Modality::kAsrVideo;
  if (name == "oracle") return Modality::kOracle;
  if (name == "asr+oracle") return Modality::kAsrOracle;
  throw ConfigError("unknown modality '" + name + "'");
}

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::kAsr: return "asr";
    case Modality::kVideo: return "video";
    case Modality::kAsrVideo: return "asr+video";
    case Modality::kOracle: return "oracle";
    case Modality::kAsrOracle: return "asr+oracle";
  }
  return "?";
}

bool uses_asr(Modality m) { return m == Modality::kAsr || m == Modality::kAsrVideo || m == Modality::kAsrOracle; }
bool uses_video(Modality m) { return m == Modality::kVideo || m == Modality::kAsrVideo; }
bool uses_oracle(Modality m) { return m == Modality::kOracle || m == Modality::kAsrOracle; }

// --- hyperparameters --------------------------------------------------------

HyperParams HyperParams::paper() {
  HyperParams h;
  h.d_model = 256;
  h.d_ffn = 256;
  h.n_layers = 2;
  h.lambda_reg = 0.001;
  h.n_heads = 4;
  h.batch_size = 128;
  h.train_steps = 100000;
  return h;
}

HyperParams HyperParams::desk() { return HyperParams{}; }

int HyperParams::checkpoint_interval() const {
  if (checkpoint_every > 0) return checkpoint_every;
  return std::max(1, train_steps / 10);
}

void HyperParams::validate() const {
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0)
    throw ConfigError("d_model must be a positive multiple of n_heads");
  if (d_ffn != d_model) throw ConfigError("d_ffn must equal d_model");
  if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (lambda_reg < 0.0) throw ConfigError("lambda_reg must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (train_steps < 0) throw ConfigError("train_steps must be >= 0");
  if (k_frames < 1) throw ConfigError("k_frames must be >= 1");
  if (max_input_tokens < 0 || max_decode_len < 0) throw ConfigError("length limits must be >= 0");
}

std::string HyperParams::to_json() const {
  nlohmann::ordered_json j;
  j["d_model"] = d_model;
  j["n_layers"] = n_layers;
  j["lambda_reg"] = lambda_reg;
  j["d_ffn"] = d_ffn;
  j["n_heads"] = n_heads;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["train_steps"] = train_steps;
  j["checkpoint_every"] = checkpoint_every;
  j["k_frames"] = k_frames;
  j["max_input_tokens"] = max_input_tokens;
  j["max_decode_len"] = max_decode_len;
  j["seed"] = seed;
  return j.dump();
}

HyperParams HyperParams::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hyperparameters: ") + e.what());
  }
  HyperParams h;
  try {
    h.d_model = j.value("d_model", h.d_model);
    h.n_layers = j.value("n_layers", h.n_layers);
    h.lambda_reg = j.value("lambda_reg", h.lambda_reg);
    h.d_ffn = j.value("d_ffn", h.d_model);
    h.n_heads = j.value("n_heads", h.n_heads);
    h.batch_size = j.value("batch_size", h.batch_size);
    h.lr = j.value("lr", h.lr);
    h.train_steps = j.value("train_steps", h.train_steps);
    h.checkpoint_every = j.value("checkpoint_every", h.checkpoint_every);
    h.k_frames = j.value("k_frames", h.k_frames);
    h.max_input_tokens = j.value("max_input_tokens", h.max_input_tokens);
    h.max_decode_len = j.value("max_decode_len", h.max_decode_len);
    h.seed = j.value("seed", h.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hyperparameters: ") + e.what());
  }
  return h;
}

// --- model ------------------------------------------------------------------

namespace {

constexpr int kTypeToken = 0;
constexpr int kTypeFrame = 1;
constexpr int kTypeOracle = 2;

void add_param(ad::ParameterSet& ps, const std::string& name, Matrix init, bool decay) {
  ps.add(name, std::move(init), decay);
}

Matrix glorot(std::uint64_t seed, const std::string& name, int r, int c, double gain = 1.0) {
  return ad::xavier_uniform(r, c, derive_seed(seed, name), gain);
}

void add_ln(ad::ParameterSet& ps, const std::string& p, int d) {
  add_param(ps, p + ".g", Matrix::Ones(1, d), false);
  add_param(ps, p + ".b", Matrix::Zero(1, d), false);
}

void add_attn(ad::ParameterSet& ps, std::uint64_t seed, const std::string& p, int d) {
  for (const char* w : {".wq", ".wk", ".wv", ".wo"}) add_param(ps, p + w, glorot(seed, p + w, d, d), true);
}

void add_ffn(ad::ParameterSet& ps, std::uint64_t seed, const std::string& p, int d, int f) {
  add_param(ps, p + ".w1", glorot(seed, p + ".w1", d, f), true);
  add_param(ps, p + ".b1", Matrix::Zero(1, f), false);
  add_param(ps, p + ".w2", glorot(seed, p + ".w2", f, d), true);
  add_param(ps, p + ".b2", Matrix::Zero(1, d), false);
}

}  // namespace

TransformerModel::TransformerModel(HyperParams hp, Modality modality, Vocabulary vocab, std::size_t feature_dim)
    : hp_(hp), modality_(modality), vocab_(std::move(vocab)), feature_dim_(feature_dim) {
  hp_.validate();
  if (uses_video(modality_) && feature_dim_ == 0) throw ConfigError("video modality needs frame features");
  const int d = hp_.d_model;
  const int v = static_cast<int>(vocab_.size());
  const std::uint64_t s = hp_.seed;
  // Parameter seeds depend only on names, so models with different
  // modalities share every common parameter at initialization.
  add_param(params_, "tok_emb", ad::normal_init(v, d, derive_seed(s, "tok_emb"), 1.0 / std::sqrt(d)), false);
  add_param(params_, "type_emb", ad::normal_init(3, d, derive_seed(s, "type_emb"), 0.1), false);
  if (uses_video(modality_)) {
    add_param(params_, "frame_proj",
              glorot(s, "frame_proj", static_cast<int>(feature_dim_), d), true);
  }
  for (int l = 0; l < hp_.n_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);
    add_ln(params_, p + ".ln1", d);
    add_attn(params_, s, p + ".att", d);
    add_ln(params_, p + ".ln2", d);
    add_ffn(params_, s, p + ".ffn", d, hp_.d_ffn);
  }
  add_ln(params_, "enc.lnf", d);
  for (int l = 0; l < hp_.n_layers; ++l) {
    const std::string p = "dec" + std::to_string(l);
    add_ln(params_, p + ".ln1", d);
    add_attn(params_, s, p + ".self", d);
    add_ln(params_, p + ".ln2", d);
    add_attn(params_, s, p + ".cross", d);
    add_ln(params_, p + ".ln3", d);
    add_ffn(params_, s, p + ".ffn", d, hp_.d_ffn);
  }
  add_ln(params_, "dec.lnf", d);
  // Small output weights: near-uniform predictions at initialization.
  add_param(params_, "out.w", glorot(s, "out.w", d, v, 0.1), true);
  add_param(params_, "out.b", Matrix::Zero(1, v), false);
}

// --- inputs -----------------------------------------------------------------

EncoderInput encode_inputs(const TransformerModel& model, const Segment& segment,
                           const std::vector<std::string>& oracle_labels, std::uint64_t seed) {
  const auto& hp = model.hparams();
  const Modality m = model.modality();
  EncoderInput in;
  if (uses_asr(m)) {
    const Tokens asr = truncate_tokens(segment.asr.tokens, static_cast<std::size_t>(hp.max_input_tokens));
    in.token_ids = model.vocab().encode(asr);
  }
  if (uses_video(m)) {
    const auto d = static_cast<Eigen::Index>(model.feature_dim());
    in.frames = Matrix::Zero(hp.k_frames, d);
    if (!segment.frames.empty()) {
      if (segment.frames.cols != model.feature_dim()) throw ValidationError("segment " + segment.segment_id + ": feature dimension mismatch");
      std::mt19937_64 rng(derive_seed(derive_seed(seed, segment.segment_id), "frames"));
      std::uniform_int_distribution<std::size_t> pick(0, segment.frames.rows - 1);
      std::vector<std::size_t> idx(static_cast<std::size_t>(hp.k_frames));
      for (auto& i : idx) i = pick(rng);
      std::sort(idx.begin(), idx.end());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto row = segment.frames.row(idx[r]);
        for (Eigen::Index c = 0; c < d; ++c) in.frames(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
      }
    }
  } else {
    in.frames = Matrix(0, static_cast<Eigen::Index>(model.feature_dim()));
  }
  if (uses_oracle(m)) {
    const Tokens order = shuffle_labels(oracle_labels, derive_seed(derive_seed(seed, segment.segment_id), "oracle"));
    in.oracle_ids = model.vocab().encode(order);
  }
  return in;
}

Batch make_batch(const TransformerModel& model, const std::vector<EncoderInput>& inputs,
                 const std::vector<std::vector<int>>& caption_ids, bool mask_frames) {
  if (!caption_ids.empty() && caption_ids.size() != inputs.size())
    throw ValidationError("make_batch: inputs and captions differ in count");
  Batch b;
  b.batch = static_cast<int>(inputs.size());
  std::size_t le = 0;
  for (const auto& in : inputs) le = std::max(le, in.length());
  std::size_t ld = 0;
  for (const auto& c : caption_ids) ld = std::max(ld, c.empty() ? 0 : c.size() - 1);
  b.enc_len = static_cast<int>(le);
  b.dec_len = static_cast<int>(ld);
  const std::size_t B = inputs.size();
  const auto D = static_cast<Eigen::Index>(model.feature_dim());
  b.enc_tokens.assign(B * le, -1);
  b.enc_types.assign(B * le, -1);
  b.enc_pos.assign(B * le, -1);
  b.enc_valid.assign(B * le, 0);
  if (uses_video(model.modality())) b.enc_frames = Matrix::Zero(static_cast<Eigen::Index>(B * le), D);
  for (std::size_t i = 0; i < B; ++i) {
    const auto& in = inputs[i];
    std::size_t at = i * le;
    for (std::size_t t = 0; t < in.token_ids.size(); ++t, ++at) {
      b.enc_tokens[at] = in.token_ids[t];
      b.enc_types[at] = kTypeToken;
      b.enc_pos[at] = static_cast<int>(t);
      b.enc_valid[at] = 1;
    }
    for (Eigen::Index f = 0; f < in.frames.rows(); ++f, ++at) {
      if (b.enc_frames.rows() == 0) throw ValidationError("make_batch: frames given to a model without video");
      b.enc_frames.row(static_cast<Eigen::Index>(at)) = in.frames.row(f);
      b.enc_types[at] = kTypeFrame;
      b.enc_pos[at] = static_cast<int>(f);
      b.enc_valid[at] = mask_frames ? 0 : 1;
    }
    for (std::size_t t = 0; t < in.oracle_ids.size(); ++t, ++at) {
      b.enc_tokens[at] = in.oracle_ids[t];
      b.enc_types[at] = kTypeOracle;
      b.enc_pos[at] = static_cast<int>(t);
      b.enc_valid[at] = 1;
    }
  }
  b.dec_inputs.assign(B * ld, Vocabulary::kPad);
  b.dec_targets.assign(B * ld, -1);
  b.dec_valid.assign(B * ld, 0);
  for (std::size_t i = 0; i < caption_ids.size(); ++i) {
    const auto& c = caption_ids[i];
    for (std::size_t t = 0; t + 1 < c.size(); ++t) {
      b.dec_inputs[i * ld + t] = c[t];
      b.dec_targets[i * ld + t] = c[t + 1];
      b.dec_valid[i * ld + t] = 1;
    }
  }
  return b;
}

// --- forward ----------------------------------------------------------------

namespace {

Matrix positions(const std::vector<int>& pos, int d) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(pos.size()), d);
  for (std::size_t r = 0; r < pos.size(); ++r) {
    if (pos[r] < 0) continue;
    for (int i = 0; i < d; i += 2) {
      const double angle = pos[r] / std::pow(10000.0, static_cast<double>(i) / d);
      m(static_cast<Eigen::Index>(r), i) = std::sin(angle);
      if (i + 1 < d) m(static_cast<Eigen::Index>(r), i + 1) = std::cos(angle);
    }
  }
  return m;
}

struct Net {
  TransformerModel& model;
  Tape& tape;

  Var P(const std::string& name) { return tape.param(model.params().get(name)); }

  Var ln(const std::string& p, Var x) { return ad::layer_norm(x, P(p + ".g"), P(p + ".b")); }

  Var mha(const std::string& p, Var xq, Var xkv, const ad::AttentionLayout& L) {
    Var q = ad::matmul(xq, P(p + ".wq"));
    Var k = ad::matmul(xkv, P(p + ".wk"));
    Var v = ad::matmul(xkv, P(p + ".wv"));
    return ad::matmul(ad::attention(q, k, v, L), P(p + ".wo"));
  }

  Var ffn(const std::string& p, Var x) {
    Var h = ad::relu(ad::add_row(ad::matmul(x, P(p + ".w1")), P(p + ".b1")));
    return ad::add_row(ad::matmul(h, P(p + ".w2")), P(p + ".b2"));
  }

  Var encode(const Batch& b) {
    const int d = model.hparams().d_model;
    Var x = ad::scale(ad::gather_rows(P("tok_emb"), b.enc_tokens), std::sqrt(static_cast<double>(d)));
    if (uses_video(model.modality())) x = ad::add(x, ad::matmul(tape.constant(b.enc_frames), P("frame_proj")));
    x = ad::add(x, ad::gather_rows(P("type_emb"), b.enc_types));
    x = ad::add(x, tape.constant(positions(b.enc_pos, d)));
    ad::AttentionLayout L;
    L.batch = b.batch;
    L.query_len = b.enc_len;
    L.key_len = b.enc_len;
    L.heads = model.hparams().n_heads;
    L.key_valid = b.enc_valid;
    for (int l = 0; l < model.hparams().n_layers; ++l) {
      const std::string p = "enc" + std::to_string(l);
      Var h = ln(p + ".ln1", x);
      x = ad::add(x, mha(p + ".att", h, h, L));
      x = ad::add(x, ffn(p + ".ffn", ln(p + ".ln2", x)));
    }
    return ln("enc.lnf", x);
  }

  Var decode(Var memory, const Batch& b, const std::vector<int>& dec_inputs, int dec_len,
             const std::vector<std::uint8_t>& dec_valid) {
    const int d = model.hparams().d_model;
    Var y = ad::scale(ad::gather_rows(P("tok_emb"), dec_inputs), std::sqrt(static_cast<double>(d)));
    std::vector<int> pos(dec_inputs.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<int>(i % static_cast<std::size_t>(std::max(1, dec_len)));
    y = ad::add(y, tape.constant(positions(pos, d)));
    ad::AttentionLayout self;
    self.batch = b.batch;
    self.query_len = dec_len;
    self.key_len = dec_len;
    self.heads = model.hparams().n_heads;
    self.causal = true;
    self.key_valid = dec_valid;
    ad::AttentionLayout cross;
    cross.batch = b.batch;
    cross.query_len = dec_len;
    cross.key_len = b.enc_len;
    cross.heads = model.hparams().n_heads;
    cross.key_valid = b.enc_valid;
    for (int l = 0; l < model.hparams().n_layers; ++l) {
      const std::string p = "dec" + std::to_string(l);
      Var h = ln(p + ".ln1", y);
      y = ad::add(y, mha(p + ".self", h, h, self));
      y = ad::add(y, mha(p + ".cross", ln(p + ".ln2", y), memory, cross));
      y = ad::add(y, ffn(p + ".ffn", ln(p + ".ln3", y)));
    }
    return ln("dec.lnf", y);
  }

  Var logits(Var y) { return ad::add_row(ad::matmul(y, P("out.w")), P("out.b")); }
};

}  // namespace

ForwardResult forward(TransformerModel& model, Tape& tape, const Batch& batch) {
  Net net{model, tape};
  Var memory = net.encode(batch);
  Var y = net.decode(memory, batch, batch.dec_inputs, batch.dec_len, batch.dec_valid);
  ForwardResult r;
  r.logits = net.logits(y);
  r.ce = ad::cross_entropy(r.logits, batch.dec_targets);
  r.loss = r.ce;
  const double lambda = model.hparams().lambda_reg;
  if (lambda > 0.0) {
    std::vector<Var> ws;
    for (auto& p : model.params())
      if (p.decay) ws.push_back(tape.param(p));
    r.loss = ad::add(r.ce, ad::scale(ad::sum_squares(ws), lambda));
  }
  if (!std::isfinite(r.loss.scalar())) throw NumericError("non-finite loss in forward pass");
  return r;
}

Matrix predict_distributions(TransformerModel& model, const Batch& batch) {
  Tape tape(false);
  Net net{model, tape};
  Var memory = net.encode(batch);
  Var y = net.decode(memory, batch, batch.dec_inputs, batch.dec_len, batch.dec_valid);
  return ad::softmax_rows(net.logits(y).value());
}

std::vector<Tokens> greedy_decode(TransformerModel& model, const std::vector<EncoderInput>& inputs, int batch_size) {
  std::vector<Tokens> out(inputs.size());
  const int max_len = model.hparams().max_decode_len;
  if (max_len <= 0 || inputs.empty()) return out;
  const auto& vocab = model.vocab();
  for (std::size_t lo = 0; lo < inputs.size(); lo += static_cast<std::size_t>(batch_size)) {
    const std::size_t hi = std::min(inputs.size(), lo + static_cast<std::size_t>(batch_size));
    const std::vector<EncoderInput> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(lo),
                                          inputs.begin() + static_cast<std::ptrdiff_t>(hi));
    const Batch b = make_batch(model, chunk, {});
    Matrix memory;
    {
      Tape tape(false);
      Net net{model, tape};
      memory = net.encode(b).value();
    }
    const std::size_t B = chunk.size();
    std::vector<std::vector<int>> prefix(B, std::vector<int>{Vocabulary::kBos});
    std::vector<bool> done(B, false);
    std::size_t active = B;
    for (int t = 0; t < max_len && active > 0; ++t) {
      const int len = t + 1;
      std::vector<int> dec_in(B * static_cast<std::size_t>(len));
      std::vector<std::uint8_t> valid(dec_in.size(), 1);
      std::vector<int> last(B);
      for (std::size_t i = 0; i < B; ++i) {
        for (int s = 0; s < len; ++s) dec_in[i * static_cast<std::size_t>(len) + static_cast<std::size_t>(s)] = prefix[i][static_cast<std::size_t>(s)];
        last[i] = static_cast<int>(i) * len + t;
      }
      Tape tape(false);
      Net net{model, tape};
      Var mem = tape.constant(memory);
      Var y = net.decode(mem, b, dec_in, len, valid);
      const Matrix logits = net.logits(ad::gather_rows(y, last)).value();
      for (std::size_t i = 0; i < B; ++i) {
        if (done[i]) {
          prefix[i].push_back(Vocabulary::kPad);
          continue;
        }
        int best = -1;
        double bv = -std::numeric_limits<double>::infinity();
        for (Eigen::Index w = 0; w < logits.cols(); ++w) {
          if (w == Vocabulary::kPad || w == Vocabulary::kBos) continue;
          if (logits(static_cast<Eigen::Index>(i), w) > bv) {
            bv = logits(static_cast<Eigen::Index>(i), w);
            best = static_cast<int>(w);
          }
        }
        prefix[i].push_back(best);
        if (best == Vocabulary::kEos) {
          done[i] = true;
          --active;
        } else {
          out[lo + i].push_back(vocab.word(best));
        }
      }
    }
  }
  return out;
}

double weight_l2(const TransformerModel& model) {
  double s = 0.0;
  for (const auto& p : model.params())
    if (p.decay) s += p.value.squaredNorm();
  return s;
}

}  // namespace vidcap
