#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gift/tensor.hpp"

namespace gift {

/// Trainable tensor with accumulated gradient. Gradients are summed across
/// backward passes; the caller zeroes them between optimizer steps.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape)) {}

  void zero_grad() { grad.fill(0.0); }
};

/// Reverse-mode tape. Ops append nodes in topological order, so backward()
/// is a single reverse sweep over creation order. One tape per forward pass;
/// reset() between items. Parameters are leaves shared across tapes.
class Graph {
 public:
  using Id = int;

  Id input(Tensor t);
  Id param(Parameter& p);  // cached: one node per parameter per tape

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id add_rowvec(Id x, Id v);  // x: M×N, v: 1×N broadcast over rows
  Id scale(Id a, double c);
  Id mul(Id a, Id b);  // elementwise
  Id matmul(Id a, Id b);
  Id matmul_nt(Id a, Id b);  // a · bᵀ
  Id slice_rows(Id a, int r0, int n);
  Id slice_cols(Id a, int c0, int n);
  Id gather_rows(Id a, std::vector<int> row_index);
  Id concat_cols(const std::vector<Id>& parts);

  /// Row softmax. Masked columns (mask[j] == 0) get probability exactly 0;
  /// a row with every column masked is an error. Null mask = all columns live.
  Id softmax_rows(Id a, const std::vector<std::uint8_t>* col_mask = nullptr);
  Id log_softmax_row(Id a);  // a: 1×K

  Id layer_norm(Id x, Id gain, Id bias);  // per-row; gain/bias 1×d
  Id gelu(Id x);                          // exact x·Φ(x) form
  Id linear(Id x, Id w, Id b) { return add_rowvec(matmul(x, w), b); }

  /// Rows of an embedding table selected by id. Backward scatter-adds.
  Id embedding_rows(Parameter& table, const std::vector<int>& ids);

  /// out[k] = src.data[flat_index[k]], reshaped to rows×cols. Used to expand
  /// the per-layer edge scalars into an M×M logit multiplier.
  Id gather(Id src, std::vector<int> flat_index, int rows, int cols);

  Id sum_all(Id a);                               // scalar
  Id neg_sum_selected(Id a, std::vector<int> idx);  // scalar −Σ a[idx], a: 1×K
  Id bce_with_logits(Id z, double target);        // z: 1×1 scalar logit

  void backward(Id loss);

  const Tensor& val(Id id) const { return nodes_[id].value; }
  const Tensor& grad(Id id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }
  void reset();

  /// Test hook: scales the named op's backward rule by a bogus factor so the
  /// gradcheck negative control has a real defect to catch. Empty = off.
  void inject_backward_fault(std::string op_name) { fault_op_ = std::move(op_name); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Graph&, Node&)> backprop;  // may be empty (leaf)
    Parameter* bound = nullptr;
  };

  Id push(Tensor value, std::function<void(Graph&, Node&)> backprop = {});
  Tensor& grad_mut(Id id) { return nodes_[id].grad; }
  double fault_factor(const char* op) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, Id> param_cache_;
  std::string fault_op_;
};

}  // namespace gift
