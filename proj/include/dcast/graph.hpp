#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dcast/params.hpp"
#include "dcast/tensor.hpp"

namespace dcast::nn {

class Graph;

/// Handle to a node on a Graph tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// Reverse-mode tape. One Graph records one forward pass; backward() walks
/// the trace once in reverse creation order and accumulates into the bound
/// NetworkParams gradient slots. Nodes are appended in topological order by
/// construction, so the trace is acyclic and each node is visited exactly
/// once.
///
/// Every op validates its input shapes (throws ConfigError) and checks its
/// output for NaN/Inf (throws NumericError): a non-finite value anywhere in
/// a forward pass is a hard error, not something to propagate.
class Graph {
 public:
  /// Leaf carrying data that needs no gradient (inputs, targets).
  Var input(Tensor value);

  /// Leaf bound to a parameter slot; backward() accumulates into
  /// params.slot(slot_index).grad. The NetworkParams must outlive the Graph.
  /// Call once per parameter per forward pass and reuse the Var.
  Var param(NetworkParams& params, int slot_index);

  Var matmul(Var a, Var b);                     // [m,k]·[k,n] -> [m,n]
  Var add_bias(Var m, Var bias);                // [r,c] + [c] broadcast over rows
  Var add(Var a, Var b);                        // elementwise, same shape
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var affine(Var a, double scale, double shift);  // scale*a + shift
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var square(Var a);
  Var slice_cols(Var a, std::size_t c0, std::size_t c1);  // [r,C] -> [r,c1-c0]
  Var concat_cols(Var a, Var b);                          // [r,c1]+[r,c2] -> [r,c1+c2]
  Var time_slice(Var seq, std::size_t t);                 // [B,L,C] -> [B,C]
  Var reshape(Var a, std::vector<std::size_t> shape);     // same element count
  Var conv1d(Var x, Var w, Var bias, std::size_t stride); // see kernels.hpp
  Var select_actions(Var q, const std::vector<int>& actions);  // [B,A] -> [B,1]
  Var mean_all(Var a);                                    // -> [1]

  /// mean((pred - target)^2), the training loss everywhere in this project.
  Var mse(Var pred, Var target);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }

  /// Gradient of the last backward()'s loss wrt this node.
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  /// Reverse accumulation from a scalar loss. Parameters that did not
  /// participate in the loss keep whatever is already in their grad slot
  /// (zero, if the caller zeroed).
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Graph&, const Tensor&)> back;  // nullptr for leaves
    NetworkParams* sink = nullptr;
    int sink_slot = -1;
  };

  std::vector<Node> nodes_;

  Var emit(const char* op, Tensor value, std::function<void(Graph&, const Tensor&)> back);
  Tensor& grad_buf(std::size_t id) { return nodes_[id].grad; }
  const Tensor& val(std::size_t id) const { return nodes_[id].value; }
  void check(Var v, const char* op) const;
};

}  // namespace dcast::nn
