#include "bmgcn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bmgcn/errors.hpp"
#include "bmgcn/rng.hpp"

namespace bmgcn {

SparsePattern SparsePattern::from_graph(const Graph& g, const Mask& diagonal) {
  if (!diagonal.empty() && diagonal.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw std::invalid_argument("diagonal mask must have one entry per node");
  }
  SparsePattern p;
  p.rows = p.cols = g.num_nodes();
  p.offsets.assign(g.num_nodes() + 1, 0);
  p.columns.reserve(g.num_stored() + g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const bool self = !diagonal.empty() && diagonal[i];
    bool placed = !self;
    for (NodeId j : g.neighbors(i)) {
      if (!placed && j > i) {
        p.columns.push_back(i);
        placed = true;
      }
      p.columns.push_back(j);
    }
    if (!placed) p.columns.push_back(i);
    p.offsets[i + 1] = static_cast<std::int64_t>(p.columns.size());
  }
  return p;
}

Matrix SparsePattern::to_dense(const Matrix& values, double fill) const {
  Matrix out = Matrix::Constant(rows, cols, fill);
  for (std::int64_t i = 0; i < rows; ++i) {
    for (auto e = offsets[i]; e < offsets[i + 1]; ++e) out(i, columns[e]) = values(e, 0);
  }
  return out;
}

std::int64_t Var::rows() const { return value().rows(); }
std::int64_t Var::cols() const { return value().cols(); }
const Matrix& Var::value() const { return tape_->nodes_[id_].value; }
bool Var::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

Var Tape::constant(Matrix value) {
  if (!value.allFinite()) throw NumericalError("non-finite value in constant tensor");
  nodes_.push_back({std::move(value), {}, false, "constant", {}});
  return {this, nodes_.size() - 1};
}

Var Tape::variable(Matrix value) {
  if (!value.allFinite()) throw NumericalError("non-finite value in variable tensor");
  nodes_.push_back({std::move(value), {}, true, "variable", {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::string op, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.allFinite()) throw NumericalError("non-finite value produced by " + op);
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw std::invalid_argument(op + ": input recorded on another tape");
    needs = needs || nodes_[in.id_].requires_grad;
  }
  nodes_.push_back({std::move(value), {}, needs, std::move(op),
                    needs ? std::move(backward) : BackwardFn{}});
  return {this, nodes_.size() - 1};
}

Matrix& Tape::accumulate(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw std::invalid_argument("loss recorded on another tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw std::invalid_argument("backward needs a scalar loss");
  }
  for (Node& node : nodes_) node.grad.resize(0, 0);
  if (!nodes_[loss.id_].requires_grad) return;
  accumulate(loss.id_)(0, 0) = 1.0;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.size() == 0) continue;
    if (!node.grad.allFinite()) throw NumericalError("non-finite gradient at output of " + node.op);
    node.backward(*this, id);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& node = nodes_[v.id_];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

namespace {

void require(bool ok, const char* op, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": " + what);
}

void same_shape(Var a, Var b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op, "shape mismatch");
}

void check_pattern_values(const SparsePattern& p, Var values, const char* op) {
  require(values.rows() == p.nnz() && values.cols() == 1, op, "values must be nnz x 1");
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul", "inner dimensions differ");
  Tape& t = *a.tape();
  Matrix out = a.value() * b.value();
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), "matmul", {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_ref(self);
    if (t.needs_grad(ia)) t.accumulate(ia).noalias() += g * t.value(ib).transpose();
    if (t.needs_grad(ib)) t.accumulate(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var transpose(Var a) {
  const auto ia = a.id();
  return a.tape()->record(a.value().transpose(), "transpose", {a},
                          [ia](Tape& t, std::size_t self) {
                            t.accumulate(ia) += t.grad_ref(self).transpose();
                          });
}

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() + b.value(), "add", {a, b}, [ia, ib](Tape& t, std::size_t self) {
    if (t.needs_grad(ia)) t.accumulate(ia) += t.grad_ref(self);
    if (t.needs_grad(ib)) t.accumulate(ib) += t.grad_ref(self);
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row", "bias must be 1 x cols");
  Matrix out = a.value().rowwise() + row.value().row(0);
  const auto ia = a.id(), ir = row.id();
  return a.tape()->record(std::move(out), "add_row", {a, row}, [ia, ir](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_ref(self);
    if (t.needs_grad(ia)) t.accumulate(ia) += g;
    if (t.needs_grad(ir)) t.accumulate(ir) += g.colwise().sum();
  });
}

Var scale(Var a, double s) {
  const auto ia = a.id();
  return a.tape()->record(a.value() * s, "scale", {a}, [ia, s](Tape& t, std::size_t self) {
    t.accumulate(ia) += s * t.grad_ref(self);
  });
}

Var hadamard(Var a, Var b) {
  same_shape(a, b, "hadamard");
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().cwiseProduct(b.value()), "hadamard", {a, b},
                          [ia, ib](Tape& t, std::size_t self) {
                            const Matrix& g = t.grad_ref(self);
                            if (t.needs_grad(ia)) t.accumulate(ia) += g.cwiseProduct(t.value(ib));
                            if (t.needs_grad(ib)) t.accumulate(ib) += g.cwiseProduct(t.value(ia));
                          });
}

Var relu(Var a) {
  const auto ia = a.id();
  return a.tape()->record(a.value().cwiseMax(0.0), "relu", {a}, [ia](Tape& t, std::size_t self) {
    t.accumulate(ia) += (t.value(ia).array() > 0.0).cast<double>().matrix().cwiseProduct(
        t.grad_ref(self));
  });
}

Var dropout(Var a, double rate, bool train, std::uint64_t seed) {
  require(rate >= 0.0 && rate < 1.0, "dropout", "rate must lie in [0, 1)");
  if (!train || rate == 0.0) return a;
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index k = 0; k < mask.size(); ++k) {
    mask.data()[k] = rng.bernoulli(rate) ? 0.0 : keep_scale;
  }
  Matrix out = a.value().cwiseProduct(mask);
  const auto ia = a.id();
  return a.tape()->record(std::move(out), "dropout", {a},
                          [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
                            t.accumulate(ia) += t.grad_ref(self).cwiseProduct(mask);
                          });
}

namespace {

Matrix softmax_rows(const Matrix& x) {
  Matrix out = (x.colwise() - x.rowwise().maxCoeff()).array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

}  // namespace

Var row_softmax(Var a) {
  const auto ia = a.id();
  Tape& tape = *a.tape();
  return tape.record(softmax_rows(a.value()), "row_softmax", {a}, [ia](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad_ref(self);
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    t.accumulate(ia) += y.cwiseProduct(g.colwise() - dot);
  });
}

Var sum(Var a) {
  const auto ia = a.id();
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), "sum", {a},
                          [ia](Tape& t, std::size_t self) {
                            t.accumulate(ia).array() += t.grad_ref(self)(0, 0);
                          });
}

Var scale_diagonal(Var a, double factor) {
  require(a.rows() == a.cols(), "scale_diagonal", "matrix must be square");
  Matrix out = a.value();
  out.diagonal() *= factor;
  const auto ia = a.id();
  return a.tape()->record(std::move(out), "scale_diagonal", {a},
                          [ia, factor](Tape& t, std::size_t self) {
                            Matrix g = t.grad_ref(self);
                            g.diagonal() *= factor;
                            t.accumulate(ia) += g;
                          });
}

Var divide_guarded(Var a, Var b, double eps) {
  same_shape(a, b, "divide_guarded");
  const Matrix den = b.value().cwiseMax(eps);
  Matrix out = a.value().cwiseQuotient(den);
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), "divide_guarded", {a, b},
                          [ia, ib, eps, den](Tape& t, std::size_t self) {
                            const Matrix& g = t.grad_ref(self);
                            if (t.needs_grad(ia)) t.accumulate(ia) += g.cwiseQuotient(den);
                            if (t.needs_grad(ib)) {
                              const Matrix active = (t.value(ib).array() >= eps).cast<double>();
                              t.accumulate(ib) -= g.cwiseProduct(t.value(self))
                                                      .cwiseQuotient(den)
                                                      .cwiseProduct(active);
                            }
                          });
}

Var detach(Var a) { return a.tape()->record(a.value(), "detach", {}, {}); }

Var softmax_cross_entropy_masked(Var logits, const Matrix& targets, const Mask& mask) {
  require(targets.rows() == logits.rows() && targets.cols() == logits.cols(),
          "softmax_cross_entropy_masked", "targets must match logits");
  require(mask.size() == static_cast<std::size_t>(logits.rows()), "softmax_cross_entropy_masked",
          "mask must have one entry per row");
  const std::size_t m = count(mask);
  require(m > 0, "softmax_cross_entropy_masked", "mask selects no rows");

  const Matrix& x = logits.value();
  Matrix probs(x.rows(), x.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (!mask[i]) continue;
    const double mx = x.row(i).maxCoeff();
    const double log_z = mx + std::log((x.row(i).array() - mx).exp().sum());
    probs.row(i) = (x.row(i).array() - log_z).exp();
    loss -= (targets.row(i).array() * (x.row(i).array() - log_z)).sum();
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  const auto il = logits.id();
  return logits.tape()->record(
      Matrix::Constant(1, 1, loss * inv_m), "softmax_cross_entropy", {logits},
      [il, probs = std::move(probs), targets, mask, inv_m](Tape& t, std::size_t self) {
        const double g = t.grad_ref(self)(0, 0) * inv_m;
        Matrix& acc = t.accumulate(il);
        for (Eigen::Index i = 0; i < acc.rows(); ++i) {
          if (!mask[i]) continue;
          // Targets need not sum to one, so keep the general form.
          acc.row(i) += g * (probs.row(i) * targets.row(i).sum() - targets.row(i));
        }
      });
}

Var spmm(const PatternPtr& pattern, Var values, Var dense) {
  const SparsePattern& p = *pattern;
  check_pattern_values(p, values, "spmm");
  require(dense.rows() == p.cols, "spmm", "dense rows must equal pattern columns");
  const Matrix& v = values.value();
  const Matrix& z = dense.value();
  Matrix out = Matrix::Zero(p.rows, z.cols());
  for (std::int64_t i = 0; i < p.rows; ++i) {
    for (auto e = p.offsets[i]; e < p.offsets[i + 1]; ++e) out.row(i) += v(e, 0) * z.row(p.columns[e]);
  }
  const auto iv = values.id(), iz = dense.id();
  return values.tape()->record(std::move(out), "spmm", {values, dense},
                               [pattern, iv, iz](Tape& t, std::size_t self) {
                                 const SparsePattern& p = *pattern;
                                 const Matrix& g = t.grad_ref(self);
                                 const Matrix& v = t.value(iv);
                                 const Matrix& z = t.value(iz);
                                 if (t.needs_grad(iv)) {
                                   Matrix& dv = t.accumulate(iv);
                                   for (std::int64_t i = 0; i < p.rows; ++i) {
                                     for (auto e = p.offsets[i]; e < p.offsets[i + 1]; ++e) {
                                       dv(e, 0) += g.row(i).dot(z.row(p.columns[e]));
                                     }
                                   }
                                 }
                                 if (t.needs_grad(iz)) {
                                   Matrix& dz = t.accumulate(iz);
                                   for (std::int64_t i = 0; i < p.rows; ++i) {
                                     for (auto e = p.offsets[i]; e < p.offsets[i + 1]; ++e) {
                                       dz.row(p.columns[e]) += v(e, 0) * g.row(i);
                                     }
                                   }
                                 }
                               });
}

Var masked_row_softmax(const PatternPtr& pattern, Var values) {
  const SparsePattern& p = *pattern;
  check_pattern_values(p, values, "masked_row_softmax");
  const Matrix& v = values.value();
  Matrix out(p.nnz(), 1);
  for (std::int64_t i = 0; i < p.rows; ++i) {
    const auto lo = p.offsets[i], hi = p.offsets[i + 1];
    if (lo == hi) {
      throw NumericalError("masked_row_softmax: row " + std::to_string(i) + " has no stored entries");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (auto e = lo; e < hi; ++e) mx = std::max(mx, v(e, 0));
    double z = 0.0;
    for (auto e = lo; e < hi; ++e) z += out(e, 0) = std::exp(v(e, 0) - mx);
    for (auto e = lo; e < hi; ++e) out(e, 0) /= z;
  }
  const auto iv = values.id();
  return values.tape()->record(std::move(out), "masked_row_softmax", {values},
                               [pattern, iv](Tape& t, std::size_t self) {
                                 const SparsePattern& p = *pattern;
                                 const Matrix& y = t.value(self);
                                 const Matrix& g = t.grad_ref(self);
                                 Matrix& dv = t.accumulate(iv);
                                 for (std::int64_t i = 0; i < p.rows; ++i) {
                                   double dot = 0.0;
                                   for (auto e = p.offsets[i]; e < p.offsets[i + 1]; ++e) {
                                     dot += g(e, 0) * y(e, 0);
                                   }
                                   for (auto e = p.offsets[i]; e < p.offsets[i + 1]; ++e) {
                                     dv(e, 0) += y(e, 0) * (g(e, 0) - dot);
                                   }
                                 }
                               });
}

Var edgewise_bilinear(const PatternPtr& pattern, Var soft_labels, Var similarity) {
  const SparsePattern& p = *pattern;
  require(soft_labels.rows() == p.rows && p.rows == p.cols, "edgewise_bilinear",
          "soft labels must have one row per pattern node");
  require(similarity.rows() == soft_labels.cols() && similarity.cols() == soft_labels.cols(),
          "edgewise_bilinear", "similarity must be c x c");
  const Matrix& b = soft_labels.value();
  const Matrix bq = b * similarity.value();
  Matrix out(p.nnz(), 1);
  for (std::int64_t i = 0; i < p.rows; ++i) {
    for (auto e = p.offsets[i]; e < p.offsets[i + 1]; ++e) {
      out(e, 0) = bq.row(i).dot(b.row(p.columns[e]));
    }
  }
  const auto ib = soft_labels.id(), iq = similarity.id();
  return soft_labels.tape()->record(
      std::move(out), "edgewise_bilinear", {soft_labels, similarity},
      [pattern, ib, iq](Tape& t, std::size_t self) {
        const SparsePattern& p = *pattern;
        const Matrix& g = t.grad_ref(self);
        const Matrix& b = t.value(ib);
        const Matrix& q = t.value(iq);
        // G B, where G is the n x n sparse upstream gradient.
        Matrix gb = Matrix::Zero(b.rows(), b.cols());
        for (std::int64_t i = 0; i < p.rows; ++i) {
          for (auto e = p.offsets[i]; e < p.offsets[i + 1]; ++e) gb.row(i) += g(e, 0) * b.row(p.columns[e]);
        }
        if (t.needs_grad(iq)) t.accumulate(iq).noalias() += b.transpose() * gb;
        if (t.needs_grad(ib)) {
          // d/dB_i gets G B Q^T from the left factor; d/dB_j gets G^T B Q from the right.
          Matrix& db = t.accumulate(ib);
          db.noalias() += gb * q.transpose();
          const Matrix bq = b * q;
          for (std::int64_t i = 0; i < p.rows; ++i) {
            for (auto e = p.offsets[i]; e < p.offsets[i + 1]; ++e) db.row(p.columns[e]) += g(e, 0) * bq.row(i);
          }
        }
      });
}

}  // namespace bmgcn
