#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vidcap::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  // Weight matrices take part in the L2 penalty; biases, embeddings and
  // normalization gains do not.
  bool decay = false;
};

// Owns parameters with stable addresses, in creation order.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init, bool decay);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::deque<Parameter> params_;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Records operations for one forward pass. With recording off the tape only
// computes values (inference).
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix m);
  Var param(Parameter& p);

  // Seeds d(root)/d(root) = 1 and accumulates into Parameter::grad.
  void backward(Var root);

  bool recording() const { return record_; }

  // Op plumbing.
  struct Node {
    Matrix value;
    Matrix grad;
    const Matrix* external = nullptr;
    bool requires_grad = false;
    std::function<void(Tape&, Node&)> back;
    const Matrix& val() const { return external ? *external : value; }
  };
  Var push(Matrix value, bool requires_grad, std::function<void(Tape&, Node&)> back);
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  bool needs(Var v) const { return record_ && node(v.id()).requires_grad; }
  // Lazily zero-initialized gradient buffer of a node.
  Matrix& grad(int id);

 private:
  bool record_;
  std::deque<Node> nodes_;
};

// --- Operations -------------------------------------------------------------

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
// Adds a 1 x cols row vector to every row.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var relu(Var a);
// Row-wise layer normalization with learned gain and bias (1 x cols each).
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-6);
// out[i] = table[idx[i]]; idx -1 yields a zero row.
Var gather_rows(Var table, std::vector<int> idx);
Var concat_rows(Var a, Var b);
// Mean over consecutive row groups: group g covers rows [offsets[g], offsets[g+1]).
// Empty groups give zero rows.
Var segment_mean(Var x, std::vector<int> offsets);

struct AttentionLayout {
  int batch = 0;
  int query_len = 0;  // rows per example in q
  int key_len = 0;    // rows per example in k and v
  int heads = 1;
  bool causal = false;
  // batch * key_len flags; empty means all keys valid.
  std::vector<std::uint8_t> key_valid;
};

// Scaled dot-product multi-head attention on stacked [batch*len x d]
// matrices. A query with no valid key gets a zero output row.
Var attention(Var q, Var k, Var v, const AttentionLayout& layout);

// Mean token cross-entropy of row-wise softmax(logits) against class ids;
// rows with target -1 are ignored. Returns 1 x 1.
Var cross_entropy(Var logits, std::vector<int> targets);
// Mean over rows of -sum_j p_ij log softmax(logits)_ij; rows of target with
// zero mass are ignored. Returns 1 x 1.
Var soft_cross_entropy(Var logits, Matrix target);
// sum of squared entries over all inputs. Returns 1 x 1.
Var sum_squares(std::span<const Var> xs);

Matrix softmax_rows(const Matrix& logits);

// Xavier-uniform initialization with a deterministic stream.
Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double gain = 1.0);
Matrix normal_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double stddev);

// Adam with bias correction; state is created lazily per parameter.
class Adam {
 public:
  Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(ParameterSet& params);
  long steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // parameter holding the worst entry
};

// Compares backward() against central differences on up to per_param random
// entries of every parameter. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult gradient_check(ParameterSet& params, const std::function<Var(Tape&)>& loss, double eps = 1e-5,
                               int per_param = 8, std::uint64_t seed = 0);

}  // namespace vidcap::ad
