#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drsl/tensor.hpp"

namespace drsl {

struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op : uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  AddBias,
  ScaleConst,
  MulScalarVar,
  MatMul,
  Transpose,
  Relu,
  Gelu,
  Exp,
  L2NormalizeRows,
  MeanAll,
  MeanAxis0,
  LayerNorm,
  SoftmaxRows,
  CrossEntropyRows,
  SelectRows,
  SliceRows,
  Concat,
  Reshape,
  VladPool,
};

const char* op_name(Op op);

// Eager reverse-mode tape: every builder computes its value immediately and
// records what backward() needs. Node ids are insertion-ordered, the graph is
// acyclic by construction, and backward walks the tape once in reverse.
// Single-threaded per graph; independent graphs may run on separate threads.
template <typename T>
class Graph {
 public:
  explicit Graph(bool check_finite = true) : check_finite_(check_finite) {}

  // ---- leaves ----
  Var input(const Tensor<T>& value);  // requires_grad taken from the tensor
  Var constant(const Tensor<T>& value);

  // ---- elementwise / broadcast ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_bias(Var m, Var bias);  // bias broadcast over rows
  Var scale(Var a, T c);
  Var mul_scalar(Var a, Var s);  // s is a 1-element var
  Var relu(Var a);
  Var gelu(Var a);  // exact erf form
  Var exp(Var a);

  // ---- linear algebra ----
  Var matmul(Var a, Var b);
  Var transpose(Var a);

  // ---- reductions / normalization ----
  Var l2_normalize_rows(Var a, T eps = T(1e-12));
  Var mean_all(Var a);
  Var mean_axis0(Var a);
  Var layer_norm(Var x, Var gamma, Var beta, T eps = T(1e-5));
  Var softmax_rows(Var a);
  // mean over rows of -log softmax(row)[target]; max-subtracted
  Var cross_entropy_rows(Var logits, const std::vector<int>& targets);

  // ---- structure ----
  Var select_rows(Var a, const std::vector<int>& rows);
  Var slice_rows(Var a, int64_t begin, int64_t count);
  Var concat(const std::vector<Var>& parts);  // flat 1-D result
  Var reshape(Var a, std::vector<int64_t> shape);

  // Residual pooling against a fixed codebook. `fresh` is an F x d matrix of
  // graph-attached rows with tile indices `fresh_tiles`; stale rows are
  // constants. Residuals accumulate per assigned centroid in ascending tile
  // index order; output is the flat K*d block concatenation (unnormalized).
  // Gradient reaches only the fresh rows; assignments are saved constants.
  Var vlad_pool(std::optional<Var> fresh, const std::vector<int>& fresh_tiles,
                const std::vector<int>& stale_tiles,
                const std::vector<std::vector<T>>& stale_features,
                const Tensor<double>& centroids,
                std::vector<int>* out_assignments = nullptr);

  // ---- execution ----
  void backward(Var scalar_output);

  const Tensor<T>& value(Var v) const { return node(v).value; }
  const Tensor<T>& grad(Var v) const;
  bool has_grad(Var v) const { return !node(v).grad.data.empty(); }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    std::vector<int32_t> inputs;
    Tensor<T> value;
    Tensor<T> grad;  // empty until backward touches it
    bool needs_grad = false;
    std::vector<int> meta_ints;
    std::vector<T> meta_scalars;
    std::vector<T> saved;  // op-specific forward by-products
  };

  Node& node(Var v) { return nodes_[size_t(v.id)]; }
  const Node& node(Var v) const { return nodes_[size_t(v.id)]; }
  Var push(Op op, Tensor<T> value, std::vector<int32_t> inputs);
  Tensor<T>& grad_buffer(int32_t id);
  void backward_node(int32_t id);
  void check_value(const Tensor<T>& t, Op op);

  std::vector<Node> nodes_;
  bool check_finite_;
};

using GraphF = Graph<float>;
using GraphD = Graph<double>;

}  // namespace drsl
