#include "hiertag/tape.hpp"

#include <limits>

#include "hiertag/errors.hpp"
#include "hiertag/kernels.hpp"

namespace hiertag {

namespace k = kernels;

Tape::Id Tape::push_leaf(Matrix value) {
  Node n;
  n.grad = Matrix(value.rows(), value.cols());
  n.adj = Matrix(value.rows(), value.cols());
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::push_op(int rows, int cols) {
  Node n;
  n.value = Matrix(rows, cols);
  n.grad = Matrix(rows, cols);
  n.adj = Matrix(rows, cols);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::input(Matrix value) { return push_leaf(std::move(value)); }

const Hierarchy& Tape::intern(const Hierarchy& h) {
  for (const Hierarchy& held : hierarchies_) {
    if (held == h) return held;
  }
  hierarchies_.push_back(h);
  return hierarchies_.back();
}

Tape::Id Tape::affine(Id weight, Id x, Id bias) {
  const Matrix& w = value(weight);
  const Matrix& xv = value(x);
  const Matrix& b = value(bias);
  if (w.cols() != xv.rows() || b.rows() != w.rows() || b.cols() != 1) {
    throw ShapeMismatch("affine: weight/input/bias shapes do not conform");
  }
  const Id out = push_op(w.rows(), xv.cols());
  node(out).forward_fn = [this, weight, x, bias, out] {
    k::matmul(value(weight), value(x), node(out).value, false);
    k::add_bias_cols(node(out).value, value(bias));
  };
  node(out).backward_fn = [this, weight, x, bias, out] {
    const Matrix& a = node(out).adj;
    k::matmul_nt(a, value(x), node(weight).adj, true);   // dW += a . x^T
    k::matmul_tn(value(weight), a, node(x).adj, true);   // dx += W^T . a
    k::row_sum_accum(a, node(bias).adj);                 // db += row sums
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::sigmoid(Id x) {
  const Id out = push_op(value(x).rows(), value(x).cols());
  node(out).forward_fn = [this, x, out] { k::map_sigmoid(value(x), node(out).value); };
  node(out).backward_fn = [this, x, out] {
    k::sigmoid_backward(node(out).value, node(out).adj, node(x).adj);
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::tanh(Id x) {
  const Id out = push_op(value(x).rows(), value(x).cols());
  node(out).forward_fn = [this, x, out] { k::map_tanh(value(x), node(out).value); };
  node(out).backward_fn = [this, x, out] {
    k::tanh_backward(node(out).value, node(out).adj, node(x).adj);
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::softmax_cols(Id x) {
  if (value(x).rows() < 1) throw ShapeMismatch("softmax_cols: need at least one row");
  const Id out = push_op(value(x).rows(), value(x).cols());
  node(out).forward_fn = [this, x, out] { k::softmax_cols(value(x), node(out).value); };
  node(out).backward_fn = [this, x, out] {
    k::softmax_cols_backward(node(out).value, node(out).adj, node(x).adj);
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::grouped_max(Id p, const Hierarchy& h) {
  if (value(p).rows() != h.n_fine()) {
    throw LengthMismatch("grouped_max: row count does not match the hierarchy's fine tags");
  }
  const Hierarchy& hh = intern(h);
  const int cols = value(p).cols();
  const Id out = push_op(hh.n_coarse(), cols);
  node(out).argmax.assign(static_cast<std::size_t>(hh.n_coarse()) * cols, 0);
  node(out).margin.assign(static_cast<std::size_t>(hh.n_coarse()) * cols, 0.0);
  node(out).has_margin = true;
  node(out).forward_fn = [this, p, out, &hh] {
    k::grouped_max(value(p), hh, node(out).value, node(out).argmax, node(out).margin);
  };
  node(out).backward_fn = [this, p, out] {
    k::grouped_max_backward(node(out).adj, node(out).argmax, node(p).adj);
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::grouped_avg(Id p, const Hierarchy& h) {
  if (value(p).rows() != h.n_fine()) {
    throw LengthMismatch("grouped_avg: row count does not match the hierarchy's fine tags");
  }
  const Hierarchy& hh = intern(h);
  const Id out = push_op(hh.n_coarse(), value(p).cols());
  node(out).forward_fn = [this, p, out, &hh] { k::grouped_avg(value(p), hh, node(out).value); };
  node(out).backward_fn = [this, p, out, &hh] {
    k::grouped_avg_backward(node(out).adj, hh, node(p).adj);
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::matvec_t(Id w, Id p) {
  const Matrix& wv = value(w);
  const Matrix& pv = value(p);
  if (wv.rows() != pv.rows()) throw ShapeMismatch("matvec_t: row counts differ");
  const Id out = push_op(wv.cols(), pv.cols());
  node(out).forward_fn = [this, w, p, out] {
    k::matmul_tn(value(w), value(p), node(out).value, false);
  };
  node(out).backward_fn = [this, w, p, out] {
    const Matrix& a = node(out).adj;
    k::matmul_nt(value(p), a, node(w).adj, true);  // dW += p . a^T
    k::matmul(value(w), a, node(p).adj, true);     // dp += W . a
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::gather_parent(Id coarse, const Hierarchy& h) {
  if (value(coarse).rows() != h.n_coarse()) {
    throw LengthMismatch("gather_parent: row count does not match the hierarchy's coarse tags");
  }
  const Hierarchy& hh = intern(h);
  const int cols = value(coarse).cols();
  const Id out = push_op(hh.n_fine(), cols);
  node(out).forward_fn = [this, coarse, out, &hh] {
    const Matrix& c = value(coarse);
    Matrix& o = node(out).value;
    for (int i = 0; i < hh.n_fine(); ++i) {
      for (int j = 0; j < o.cols(); ++j) o(i, j) = c(hh.parent(i), j);
    }
  };
  node(out).backward_fn = [this, coarse, out, &hh] {
    const Matrix& a = node(out).adj;
    Matrix& dc = node(coarse).adj;
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < a.cols(); ++j) dc(hh.parent(i), j) += a(i, j);
    }
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::mul(Id a, Id b) {
  if (!value(a).same_shape(value(b))) throw ShapeMismatch("mul: shapes differ");
  const Id out = push_op(value(a).rows(), value(a).cols());
  node(out).forward_fn = [this, a, b, out] { k::mul_ew(value(a), value(b), node(out).value); };
  node(out).backward_fn = [this, a, b, out] {
    k::mul_ew_backward(value(b), node(out).adj, node(a).adj);
    k::mul_ew_backward(value(a), node(out).adj, node(b).adj);
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::add(Id a, Id b) {
  if (!value(a).same_shape(value(b))) throw ShapeMismatch("add: shapes differ");
  const Id out = push_op(value(a).rows(), value(a).cols());
  node(out).forward_fn = [this, a, b, out] { k::add(value(a), value(b), node(out).value); };
  node(out).backward_fn = [this, a, b, out] {
    k::axpy(1.0, node(out).adj, node(a).adj);
    k::axpy(1.0, node(out).adj, node(b).adj);
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::scale(Id a, double s) {
  const Id out = push_op(value(a).rows(), value(a).cols());
  node(out).forward_fn = [this, a, s, out] { k::scale(value(a), s, node(out).value); };
  node(out).backward_fn = [this, a, s, out] { k::axpy(s, node(out).adj, node(a).adj); };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::reshape(Id a, int rows, int cols) {
  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != value(a).size()) {
    throw ShapeMismatch("reshape: element count changed");
  }
  const Id out = push_op(rows, cols);
  node(out).forward_fn = [this, a, out] {
    const Matrix& src = value(a);
    Matrix& dst = node(out).value;
    for (std::size_t e = 0; e < src.size(); ++e) dst.data()[e] = src.data()[e];
  };
  node(out).backward_fn = [this, a, out] {
    const Matrix& adj = node(out).adj;
    Matrix& da = node(a).adj;
    for (std::size_t e = 0; e < adj.size(); ++e) da.data()[e] += adj.data()[e];
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::concat_cols(const std::vector<Id>& xs) {
  if (xs.empty()) throw ShapeMismatch("concat_cols: empty input list");
  const int rows = value(xs[0]).rows();
  int total = 0;
  for (Id x : xs) {
    if (value(x).rows() != rows) throw ShapeMismatch("concat_cols: row counts differ");
    total += value(x).cols();
  }
  const Id out = push_op(rows, total);
  auto inputs = xs;
  node(out).forward_fn = [this, inputs, out] {
    Matrix& o = node(out).value;
    int off = 0;
    for (Id x : inputs) {
      const Matrix& src = value(x);
      for (int i = 0; i < src.rows(); ++i) {
        for (int j = 0; j < src.cols(); ++j) o(i, off + j) = src(i, j);
      }
      off += src.cols();
    }
  };
  node(out).backward_fn = [this, inputs, out] {
    const Matrix& a = node(out).adj;
    int off = 0;
    for (Id x : inputs) {
      Matrix& dx = node(x).adj;
      for (int i = 0; i < dx.rows(); ++i) {
        for (int j = 0; j < dx.cols(); ++j) dx(i, j) += a(i, off + j);
      }
      off += dx.cols();
    }
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::sum_entries(Id x) {
  const Id out = push_op(1, 1);
  node(out).forward_fn = [this, x, out] {
    const Matrix& src = value(x);
    double acc = 0.0;
    for (std::size_t e = 0; e < src.size(); ++e) acc += src.data()[e];
    node(out).value(0, 0) = acc;
  };
  node(out).backward_fn = [this, x, out] {
    const double a = node(out).adj(0, 0);
    Matrix& dx = node(x).adj;
    for (std::size_t e = 0; e < dx.size(); ++e) dx.data()[e] += a;
  };
  node(out).forward_fn();
  return out;
}

Tape::Id Tape::masked_bce(Id p, StateMatrix states) {
  const Matrix& pv = value(p);
  if (pv.rows() != states.rows() || pv.cols() != states.cols()) {
    throw LengthMismatch("masked_bce: probability and state shapes differ");
  }
  const Id out = push_op(1, 1);
  node(out).states = std::move(states);
  node(out).forward_fn = [this, p, out] {
    node(out).value(0, 0) =
        k::masked_bce_mean(value(p), node(out).states, node(out).observed);
  };
  node(out).backward_fn = [this, p, out] {
    if (node(out).observed == 0) return;
    const double coeff = node(out).adj(0, 0) / static_cast<double>(node(out).observed);
    k::masked_bce_backward(value(p), node(out).states, coeff, node(p).adj);
  };
  node(out).forward_fn();
  return out;
}

void Tape::forward_all() {
  for (Node& n : nodes_) {
    if (n.forward_fn) n.forward_fn();
  }
}

void Tape::backward(Id root) {
  Node& r = node(root);
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw NonScalarRoot("backward root must be a 1x1 scalar");
  }
  for (Node& n : nodes_) n.adj.fill(0.0);
  r.adj(0, 0) = 1.0;
  for (Id i = root; i >= 0; --i) {
    Node& n = node(i);
    if (n.backward_fn) n.backward_fn();
  }
  for (Node& n : nodes_) {
    for (std::size_t e = 0; e < n.grad.size(); ++e) n.grad.data()[e] += n.adj.data()[e];
  }
}

void Tape::zero_grads() {
  for (Node& n : nodes_) n.grad.fill(0.0);
}

double Tape::min_grouped_max_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (const Node& n : nodes_) {
    if (!n.has_margin) continue;
    for (double v : n.margin) m = std::min(m, v);
  }
  return m;
}

}  // namespace hiertag
