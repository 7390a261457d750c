#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "hiertag/hierarchy.hpp"
#include "hiertag/matrix.hpp"

namespace hiertag {

// Reverse-mode autodiff over dense double matrices.
//
// A Tape owns every node of one computation graph. Ops append nodes and
// return integer handles; inputs always have smaller handles than their
// outputs, so one reverse sweep in handle order is a valid topological
// backward pass.
//
// Gradient contract: backward(root) accumulates d root / d node into each
// node's grad. The pass itself runs on per-node scratch adjoints that are
// reset every call, so calling backward twice without zero_grads() yields
// exactly doubled grads (plain accumulation, no compounding).
//
// A tape is confined to one thread from construction through backward;
// distinct tapes may run on distinct threads concurrently.
class Tape {
 public:
  using Id = int;

  Tape() = default;
  Tape(const Tape&) = delete;             // closures capture `this`
  Tape& operator=(const Tape&) = delete;

  // Leaf holding a caller-supplied value. Leaves are the only nodes whose
  // values may be mutated between forward passes.
  Id input(Matrix value);

  // weight (m,n) . x (n,k) + bias (m,1) broadcast over columns -> (m,k)
  Id affine(Id weight, Id x, Id bias);
  Id sigmoid(Id x);
  Id tanh(Id x);
  // Column-wise softmax with max subtraction; rows >= 1.
  Id softmax_cols(Id x);
  // Per-group max over fine rows -> (n_coarse, k). Backward routes each
  // incoming gradient entirely to the argmax row, ties to the lowest index.
  // Hierarchy-taking ops intern a copy, so `h` may be a temporary.
  Id grouped_max(Id p, const Hierarchy& h);
  // Per-group mean; backward splits 1/|group| to each member.
  Id grouped_avg(Id p, const Hierarchy& h);
  // w (n_fine, n_coarse), p (n_fine, k) -> w^T . p, shape (n_coarse, k).
  Id matvec_t(Id w, Id p);
  // out(i, j) = coarse(parent(i), j); the top-down broadcast of a coarse
  // column to fine positions.
  Id gather_parent(Id coarse, const Hierarchy& h);
  Id mul(Id a, Id b);  // elementwise
  Id add(Id a, Id b);
  Id scale(Id a, double s);
  // Same flat contents, new shape (row-major order preserved).
  Id reshape(Id a, int rows, int cols);
  // Horizontal concatenation of equal-height blocks.
  Id concat_cols(const std::vector<Id>& xs);
  // Scalar sum of all entries.
  Id sum_entries(Id x);
  // Mean binary cross-entropy over observed entries of `states` (same shape
  // as p); scalar 0 with zero gradient when nothing is observed.
  Id masked_bce(Id p, StateMatrix states);

  const Matrix& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  // For finite-difference probes; only leaves should be touched.
  Matrix& mutable_value(Id id) { return nodes_[static_cast<std::size_t>(id)].value; }

  // Recomputes every non-leaf value in creation order.
  void forward_all();
  // Accumulates grads of every node reachable below `root`. Throws
  // NonScalarRoot unless value(root) is 1x1.
  void backward(Id root);
  void zero_grads();

  std::size_t node_count() const { return nodes_.size(); }

  // Smallest max-vs-runner-up gap over all grouped_max nodes as of the last
  // forward; +inf when no grouped_max exists. Lets callers detect (near-)ties
  // where the max subgradient is not a derivative.
  double min_grouped_max_margin() const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Matrix adj;                        // scratch adjoint, reset per backward
    std::function<void()> forward_fn;  // empty for leaves
    std::function<void()> backward_fn;

    // grouped_max bookkeeping
    std::vector<int> argmax;
    std::vector<double> margin;
    bool has_margin = false;

    // masked_bce bookkeeping
    StateMatrix states;
    long observed = 0;
  };

  Node& node(Id id) { return nodes_[static_cast<std::size_t>(id)]; }
  Id push_leaf(Matrix value);
  Id push_op(int rows, int cols);
  // One stable copy per distinct hierarchy used on this tape.
  const Hierarchy& intern(const Hierarchy& h);

  std::vector<Node> nodes_;
  std::deque<Hierarchy> hierarchies_;
};

}  // namespace hiertag
