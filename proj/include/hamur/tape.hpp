#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "hamur/tensor.hpp"

namespace hamur {

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over an append-only operation record. Nodes are
// stored in topological order by construction (an op can only reference
// already-created Vars). Gradients accumulate into per-node buffers that
// are allocated on first touch, so untouched subgraphs cost nothing.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves. requires_grad is taken from the tensor.
  Var leaf(Tensor t);
  Var constant(Tensor t);  // leaf with requires_grad forced off

  // Elementwise, same shape.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var square(Var a);

  // Elementwise with a scalar constant.
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);

  // Broadcast over the batch dimension: x is (B x h), v is (h).
  Var add_rowvec(Var x, Var v);
  Var sub_rowvec(Var x, Var v);
  Var mul_rowvec(Var x, Var v);

  // Per-row scaling: x is (B x h), s is (B x 1).
  Var row_scale(Var x, Var s);

  // Dense products.
  Var matmul(Var a, Var b);     // (m x k) * (k x n)
  Var matmul_bt(Var a, Var b);  // (m x k) * (n x k)^T -> (m x n)
  Var bmv(Var a, Var x);        // (b x p x q) batch of matrices times (b x q)
  Var lmm(Var w, Var a);        // (p x q) * (b x q x r) -> (b x p x r)
  Var rmm(Var a, Var w);        // (b x p x q) * (q x r) -> (b x p x r)

  // Nonlinearities and scalar maps.
  Var sigmoid(Var a);
  Var relu(Var a);
  Var log(Var a);                       // requires positive input
  Var rsqrt_shift(Var a, double eps);   // 1 / sqrt(a + eps)
  Var clip(Var a, double lo, double hi);

  // Structure.
  Var reshape(Var a, std::vector<std::size_t> shape);
  Var concat_cols(const std::vector<Var>& parts);  // all (B x w_i)
  // Gather rows of a (N x w) tensor; repeated ids accumulate gradient.
  Var rows(Var a, std::vector<std::size_t> ids);
  // Inverse of per-domain row selection: part j supplies the rows listed in
  // index[j]; the index lists must partition [0, total_rows).
  Var scatter_rows(const std::vector<Var>& parts,
                   const std::vector<std::vector<std::size_t>>& index,
                   std::size_t total_rows);

  // Reductions.
  Var col_mean(Var a);  // (B x h) -> (h)
  Var sum_all(Var a);   // -> scalar
  Var mean_all(Var a);  // -> scalar

  // Access.
  const Tensor& val(Var v) const { return nodes_[v.id].value; }
  // Gradient of a node; empty tensor if backward never reached it.
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  Tensor grad_or_zeros(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and sweeps the record in reverse. loss must
  // be scalar. Only nodes that can influence a requires_grad leaf, and
  // that the loss actually reaches, participate.
  void backward(Var loss);

  // Recomputes every non-leaf value in order from current leaf values.
  void replay();

  void zero_grads();

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until first accumulation
    bool needs_grad = false;
    std::function<void(Tape&)> back;     // null for leaves
    std::function<void(Tape&)> compute;  // null for leaves
  };

  friend struct TapeOps;
  std::vector<Node> nodes_;

  Var emit(Tensor value, bool needs_grad, std::function<void(Tape&)> compute,
           std::function<void(Tape&)> back);
  Tensor& gbuf(int id);  // gradient buffer, allocated to zeros on demand
  bool ngrad(Var v) const { return nodes_[v.id].needs_grad; }
};

// Per-column mean and biased variance of a (B x h) tensor, both
// differentiable. Composed from tape ops, so backward comes for free.
std::pair<Var, Var> batch_stats(Tape& t, Var x);

}  // namespace hamur
