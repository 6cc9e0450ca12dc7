#include "vidcap/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vidcap/error.hpp"

namespace vidcap::ad {

// --- ParameterSet -----------------------------------------------------------

Parameter& ParameterSet::add(std::string name, Matrix init, bool decay) {
  if (contains(name)) throw ValidationError("duplicate parameter " + name);
  params_.push_back(Parameter{std::move(name), std::move(init), Matrix(), decay});
  auto& p = params_.back();
  p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
  return p;
}

Parameter& ParameterSet::get(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw ValidationError("unknown parameter " + name);
}

const Parameter& ParameterSet::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw ValidationError("unknown parameter " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

std::size_t ParameterSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw ValidationError("parameter snapshot size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].rows() != params_[i].value.rows() || values[i].cols() != params_[i].value.cols()) {
      throw ValidationError("parameter snapshot shape mismatch for " + params_[i].name);
    }
    params_[i].value = values[i];
  }
}

// --- Tape -------------------------------------------------------------------

const Matrix& Var::value() const { return tape_->node(id_).val(); }

Var Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&, Node&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Matrix m) { return push(std::move(m), false, nullptr); }

Var Tape::param(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.requires_grad = record_;
  if (record_) {
    Parameter* pp = &p;
    n.back = [pp](Tape&, Node& self) { pp->grad += self.grad; };
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Matrix& Tape::grad(int id) {
  auto& n = node(id);
  if (n.grad.size() == 0 && n.val().size() != 0) n.grad = Matrix::Zero(n.val().rows(), n.val().cols());
  if (n.grad.rows() != n.val().rows()) n.grad = Matrix::Zero(n.val().rows(), n.val().cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (!record_) throw ValidationError("backward on a non-recording tape");
  if (root.rows() != 1 || root.cols() != 1) throw ValidationError("backward root must be 1 x 1");
  grad(root.id())(0, 0) += 1.0;
  for (int id = root.id(); id >= 0; --id) {
    auto& n = node(id);
    if (!n.requires_grad || !n.back || n.grad.size() == 0) continue;
    n.back(*this, n);
  }
}

// --- Ops --------------------------------------------------------------------

namespace {

void same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw ValidationError("variables from different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  Tape& t = *a.tape();
  Matrix out = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), t.needs(a) || t.needs(b), [ia, ib](Tape& t, Tape::Node& self) {
    if (t.node(ia).requires_grad) t.grad(ia).noalias() += self.grad * t.node(ib).val().transpose();
    if (t.node(ib).requires_grad) t.grad(ib).noalias() += t.node(ia).val().transpose() * self.grad;
  });
}

Var matmul_nt(Var a, Var b) {
  same_tape(a, b);
  Tape& t = *a.tape();
  Matrix out = a.value() * b.value().transpose();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), t.needs(a) || t.needs(b), [ia, ib](Tape& t, Tape::Node& self) {
    if (t.node(ia).requires_grad) t.grad(ia).noalias() += self.grad * t.node(ib).val();
    if (t.node(ib).requires_grad) t.grad(ib).noalias() += self.grad.transpose() * t.node(ia).val();
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("add: shape mismatch");
  Tape& t = *a.tape();
  Matrix out = a.value() + b.value();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), t.needs(a) || t.needs(b), [ia, ib](Tape& t, Tape::Node& self) {
    if (t.node(ia).requires_grad) t.grad(ia) += self.grad;
    if (t.node(ib).requires_grad) t.grad(ib) += self.grad;
  });
}

Var add_row(Var a, Var row) {
  same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw ValidationError("add_row: shape mismatch");
  Tape& t = *a.tape();
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  const int ia = a.id(), ir = row.id();
  return t.push(std::move(out), t.needs(a) || t.needs(row), [ia, ir](Tape& t, Tape::Node& self) {
    if (t.node(ia).requires_grad) t.grad(ia) += self.grad;
    if (t.node(ir).requires_grad && self.grad.rows() > 0) t.grad(ir) += self.grad.colwise().sum();
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  Matrix out = a.value() * s;
  const int ia = a.id();
  return t.push(std::move(out), t.needs(a), [ia, s](Tape& t, Tape::Node& self) { t.grad(ia) += self.grad * s; });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  Matrix out = a.value().cwiseMax(0.0);
  const int ia = a.id();
  return t.push(std::move(out), t.needs(a), [ia](Tape& t, Tape::Node& self) {
    const Matrix& x = t.node(ia).val();
    t.grad(ia) += (x.array() > 0.0).select(self.grad, 0.0);
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  same_tape(x, gain);
  same_tape(x, bias);
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows(), d = xv.cols();
  auto xhat = std::make_shared<Matrix>(n, d);
  auto inv_std = std::make_shared<Eigen::VectorXd>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = xv.row(i).mean();
    const double var = (xv.row(i).array() - mu).square().mean();
    (*inv_std)(i) = 1.0 / std::sqrt(var + eps);
    xhat->row(i) = (xv.row(i).array() - mu) * (*inv_std)(i);
  }
  Matrix out = xhat->array().rowwise() * gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return t.push(std::move(out), t.needs(x) || t.needs(gain) || t.needs(bias),
                [ix, ig, ib, xhat, inv_std](Tape& t, Tape::Node& self) {
                  const Matrix& dy = self.grad;
                  if (dy.rows() == 0) return;
                  if (t.node(ig).requires_grad) t.grad(ig) += (dy.array() * xhat->array()).colwise().sum().matrix();
                  if (t.node(ib).requires_grad) t.grad(ib) += dy.colwise().sum();
                  if (!t.node(ix).requires_grad) return;
                  const auto& g = t.node(ig).val();
                  Matrix dxhat = dy.array().rowwise() * g.row(0).array();
                  Matrix& dx = t.grad(ix);
                  for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
                    const double m1 = dxhat.row(i).mean();
                    const double m2 = (dxhat.row(i).array() * xhat->row(i).array()).mean();
                    dx.row(i).array() +=
                        (*inv_std)(i) * (dxhat.row(i).array() - m1 - xhat->row(i).array() * m2);
                  }
                });
}

Var gather_rows(Var table, std::vector<int> idx) {
  Tape& t = *table.tape();
  const Matrix& tv = table.value();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), tv.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0) continue;
    if (idx[i] >= tv.rows()) throw ValidationError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = tv.row(idx[i]);
  }
  const int it = table.id();
  return t.push(std::move(out), t.needs(table), [it, idx = std::move(idx)](Tape& t, Tape::Node& self) {
    Matrix& g = t.grad(it);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= 0) g.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    }
  });
}

Var concat_rows(Var a, Var b) {
  same_tape(a, b);
  if (a.cols() != b.cols() && a.rows() && b.rows()) throw ValidationError("concat_rows: column mismatch");
  Tape& t = *a.tape();
  const Eigen::Index cols = a.rows() ? a.cols() : b.cols();
  Matrix out(a.rows() + b.rows(), cols);
  if (a.rows()) out.topRows(a.rows()) = a.value();
  if (b.rows()) out.bottomRows(b.rows()) = b.value();
  const int ia = a.id(), ib = b.id();
  const Eigen::Index na = a.rows();
  return t.push(std::move(out), t.needs(a) || t.needs(b), [ia, ib, na](Tape& t, Tape::Node& self) {
    if (t.node(ia).requires_grad && na) t.grad(ia) += self.grad.topRows(na);
    const Eigen::Index nb = self.grad.rows() - na;
    if (t.node(ib).requires_grad && nb) t.grad(ib) += self.grad.bottomRows(nb);
  });
}

Var segment_mean(Var x, std::vector<int> offsets) {
  Tape& t = *x.tape();
  if (offsets.empty()) throw ValidationError("segment_mean: offsets must hold at least one entry");
  const Matrix& xv = x.value();
  const auto groups = static_cast<Eigen::Index>(offsets.size() - 1);
  Matrix out = Matrix::Zero(groups, xv.cols());
  for (Eigen::Index g = 0; g < groups; ++g) {
    const int lo = offsets[static_cast<std::size_t>(g)], hi = offsets[static_cast<std::size_t>(g + 1)];
    if (hi > lo) out.row(g) = xv.middleRows(lo, hi - lo).colwise().mean();
  }
  const int ix = x.id();
  return t.push(std::move(out), t.needs(x), [ix, offsets = std::move(offsets)](Tape& t, Tape::Node& self) {
    Matrix& gx = t.grad(ix);
    for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
      const int lo = offsets[g], hi = offsets[g + 1];
      if (hi <= lo) continue;
      const double inv = 1.0 / (hi - lo);
      for (int r = lo; r < hi; ++r) gx.row(r) += self.grad.row(static_cast<Eigen::Index>(g)) * inv;
    }
  });
}

Var attention(Var q, Var k, Var v, const AttentionLayout& L) {
  same_tape(q, k);
  same_tape(q, v);
  Tape& t = *q.tape();
  const Matrix& Q = q.value();
  const Matrix& K = k.value();
  const Matrix& V = v.value();
  const Eigen::Index d = Q.cols();
  if (L.heads <= 0 || d % L.heads != 0) throw ValidationError("attention: model dim not divisible by heads");
  if (Q.rows() != static_cast<Eigen::Index>(L.batch) * L.query_len ||
      K.rows() != static_cast<Eigen::Index>(L.batch) * L.key_len || V.rows() != K.rows()) {
    throw ValidationError("attention: layout does not match inputs");
  }
  if (!L.key_valid.empty() && L.key_valid.size() != static_cast<std::size_t>(L.batch * L.key_len)) {
    throw ValidationError("attention: key mask size mismatch");
  }
  const Eigen::Index dh = d / L.heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto nblocks = static_cast<std::size_t>(L.batch * L.heads);
  auto probs = std::make_shared<std::vector<Matrix>>(nblocks);
  Matrix out = Matrix::Zero(Q.rows(), d);
  const Eigen::Index lq = L.query_len, lk = L.key_len;
  for (int b = 0; b < L.batch; ++b) {
    for (int h = 0; h < L.heads; ++h) {
      Matrix& P = (*probs)[static_cast<std::size_t>(b * L.heads + h)];
      if (lq == 0) continue;
      P = Matrix::Zero(lq, lk);
      if (lk == 0) continue;
      const auto qh = Q.block(b * lq, h * dh, lq, dh);
      const auto kh = K.block(b * lk, h * dh, lk, dh);
      Matrix S = (qh * kh.transpose()) * sc;
      for (Eigen::Index i = 0; i < lq; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < lk; ++j) {
          const bool ok = (L.key_valid.empty() || L.key_valid[static_cast<std::size_t>(b * lk + j)]) &&
                          (!L.causal || j <= i);
          if (ok) mx = std::max(mx, S(i, j));
          else S(i, j) = -std::numeric_limits<double>::infinity();
        }
        if (mx == -std::numeric_limits<double>::infinity()) continue;  // zero row
        double z = 0.0;
        for (Eigen::Index j = 0; j < lk; ++j) {
          const double e = S(i, j) == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(S(i, j) - mx);
          P(i, j) = e;
          z += e;
        }
        P.row(i) /= z;
      }
      out.block(b * lq, h * dh, lq, dh).noalias() = P * V.block(b * lk, h * dh, lk, dh);
    }
  }
  const int iq = q.id(), ik = k.id(), iv = v.id();
  const int batch = L.batch, heads = L.heads;
  return t.push(std::move(out), t.needs(q) || t.needs(k) || t.needs(v),
                [iq, ik, iv, probs, batch, heads, lq, lk, dh, sc](Tape& t, Tape::Node& self) {
                  if (lq == 0 || lk == 0) return;
                  const Matrix& Q = t.node(iq).val();
                  const Matrix& K = t.node(ik).val();
                  const Matrix& V = t.node(iv).val();
                  const bool gq = t.node(iq).requires_grad, gk = t.node(ik).requires_grad,
                             gv = t.node(iv).requires_grad;
                  Matrix* dQ = gq ? &t.grad(iq) : nullptr;
                  Matrix* dK = gk ? &t.grad(ik) : nullptr;
                  Matrix* dV = gv ? &t.grad(iv) : nullptr;
                  for (int b = 0; b < batch; ++b) {
                    for (int h = 0; h < heads; ++h) {
                      const Matrix& P = (*probs)[static_cast<std::size_t>(b * heads + h)];
                      const auto dO = self.grad.block(b * lq, h * dh, lq, dh);
                      if (dV) dV->block(b * lk, h * dh, lk, dh).noalias() += P.transpose() * dO;
                      if (!dQ && !dK) continue;
                      Matrix dP = dO * V.block(b * lk, h * dh, lk, dh).transpose();
                      Matrix dS = P.array() * (dP.colwise() - (dP.array() * P.array()).rowwise().sum().matrix()).array();
                      dS *= sc;
                      if (dQ) dQ->block(b * lq, h * dh, lq, dh).noalias() += dS * K.block(b * lk, h * dh, lk, dh);
                      if (dK) dK->block(b * lk, h * dh, lk, dh).noalias() += dS.transpose() * Q.block(b * lq, h * dh, lq, dh);
                    }
                  }
                });
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Var cross_entropy(Var logits, std::vector<int> targets) {
  Tape& t = *logits.tape();
  const Matrix& z = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != z.rows()) throw ValidationError("cross_entropy: target size");
  auto p = std::make_shared<Matrix>(softmax_rows(z));
  double loss = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0) continue;
    loss -= std::log(std::max((*p)(static_cast<Eigen::Index>(i), targets[i]), 1e-300));
    ++n;
  }
  const double inv = n ? 1.0 / n : 0.0;
  Matrix out(1, 1);
  out(0, 0) = loss * inv;
  const int il = logits.id();
  return t.push(std::move(out), t.needs(logits), [il, p, inv, targets = std::move(targets)](Tape& t, Tape::Node& self) {
    const double g = self.grad(0, 0) * inv;
    Matrix& dz = t.grad(il);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i] < 0) continue;
      const auto r = static_cast<Eigen::Index>(i);
      dz.row(r) += g * p->row(r);
      dz(r, targets[i]) -= g;
    }
  });
}

Var soft_cross_entropy(Var logits, Matrix target) {
  Tape& t = *logits.tape();
  const Matrix& z = logits.value();
  if (target.rows() != z.rows() || target.cols() != z.cols()) throw ValidationError("soft_cross_entropy: shape");
  auto p = std::make_shared<Matrix>(softmax_rows(z));
  double loss = 0.0;
  int n = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mass = target.row(i).sum();
    if (mass <= 0.0) continue;
    ++n;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (target(i, j) > 0.0) loss -= target(i, j) * std::log(std::max((*p)(i, j), 1e-300));
    }
  }
  const double inv = n ? 1.0 / n : 0.0;
  Matrix out(1, 1);
  out(0, 0) = loss * inv;
  const int il = logits.id();
  return t.push(std::move(out), t.needs(logits), [il, p, inv, target = std::move(target)](Tape& t, Tape::Node& self) {
    const double g = self.grad(0, 0) * inv;
    Matrix& dz = t.grad(il);
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
      const double mass = target.row(i).sum();
      if (mass <= 0.0) continue;
      dz.row(i) += g * (p->row(i) * mass - target.row(i));
    }
  });
}

Var sum_squares(std::span<const Var> xs) {
  if (xs.empty()) throw ValidationError("sum_squares: no inputs");
  Tape& t = *xs.front().tape();
  double s = 0.0;
  bool needs = false;
  std::vector<int> ids;
  for (const auto& x : xs) {
    s += x.value().squaredNorm();
    needs = needs || t.needs(x);
    ids.push_back(x.id());
  }
  Matrix out(1, 1);
  out(0, 0) = s;
  return t.push(std::move(out), needs, [ids = std::move(ids)](Tape& t, Tape::Node& self) {
    const double g = self.grad(0, 0);
    for (int id : ids) {
      if (t.node(id).requires_grad) t.grad(id) += 2.0 * g * t.node(id).val();
    }
  });
}

// --- Init / optimizer ---------------------------------------------------------

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double gain) {
  std::mt19937_64 rng(seed);
  const double a = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Matrix normal_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double stddev) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

void Adam::step(ParameterSet& params) {
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  const double eps_hat = eps_ * std::sqrt(c2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * p.grad;
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= step * m_[i].array() / (v_[i].array().sqrt() + eps_hat);
  }
}

GradCheckResult gradient_check(ParameterSet& params, const std::function<Var(Tape&)>& loss, double eps,
                               int per_param, std::uint64_t seed) {
  params.zero_grad();
  {
    Tape t(true);
    t.backward(loss(t));
  }
  std::mt19937_64 rng(seed);
  GradCheckResult r;
  auto eval = [&] {
    Tape t(false);
    return loss(t).scalar();
  };
  for (auto& p : params) {
    const auto n = static_cast<std::size_t>(p.value.size());
    if (n == 0) continue;
    std::vector<std::size_t> idx;
    if (n <= static_cast<std::size_t>(per_param)) {
      for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (int i = 0; i < per_param; ++i) idx.push_back(pick(rng));
    }
    for (std::size_t i : idx) {
      double& w = p.value.data()[i];
      const double saved = w;
      w = saved + eps;
      const double up = eval();
      w = saved - eps;
      const double down = eval();
      w = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p.grad.data()[i];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
      const double rel = std::fabs(analytic - numeric) / denom;
      ++r.checked;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = p.name;
      }
    }
  }
  return r;
}

}  // namespace vidcap::ad
