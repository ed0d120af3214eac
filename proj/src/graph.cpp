#include "drsl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "drsl/kernels.hpp"

namespace drsl {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::AddBias: return "add_bias";
    case Op::ScaleConst: return "scale";
    case Op::MulScalarVar: return "mul_scalar";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::Relu: return "relu";
    case Op::Gelu: return "gelu";
    case Op::Exp: return "exp";
    case Op::L2NormalizeRows: return "l2_normalize_rows";
    case Op::MeanAll: return "mean_all";
    case Op::MeanAxis0: return "mean_axis0";
    case Op::LayerNorm: return "layer_norm";
    case Op::SoftmaxRows: return "softmax_rows";
    case Op::CrossEntropyRows: return "cross_entropy_rows";
    case Op::SelectRows: return "select_rows";
    case Op::SliceRows: return "slice_rows";
    case Op::Concat: return "concat";
    case Op::Reshape: return "reshape";
    case Op::VladPool: return "vlad_pool";
  }
  return "?";
}

namespace {

double gauss_cdf(double x) { return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)); }
double gauss_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         a.shape_str() + " vs " + b.shape_str());
  }
}

template <typename T>
void require_rank2(const Tensor<T>& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         a.shape_str());
  }
}

}  // namespace

template <typename T>
void Graph<T>::check_value(const Tensor<T>& t, Op op) {
  if (!check_finite_) return;
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value out of op '") +
                       op_name(op) + "' at node " +
                       std::to_string(nodes_.size()));
  }
}

template <typename T>
Var Graph<T>::push(Op op, Tensor<T> value, std::vector<int32_t> inputs) {
  check_value(value, op);
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  n.needs_grad = false;
  for (int32_t in : n.inputs) {
    if (nodes_[size_t(in)].needs_grad) n.needs_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var{int32_t(nodes_.size() - 1)};
}

template <typename T>
Var Graph<T>::input(const Tensor<T>& value) {
  Var v = push(Op::Leaf, value, {});
  node(v).needs_grad = value.requires_grad;
  return v;
}

template <typename T>
Var Graph<T>::constant(const Tensor<T>& value) {
  Var v = push(Op::Leaf, value, {});
  node(v).value.requires_grad = false;
  node(v).needs_grad = false;
  return v;
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
  const auto& ta = value(a);
  const auto& tb = value(b);
  require_same_shape(ta, tb, "add");
  Tensor<T> out = ta;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
  return push(Op::Add, std::move(out), {a.id, b.id});
}

template <typename T>
Var Graph<T>::sub(Var a, Var b) {
  const auto& ta = value(a);
  const auto& tb = value(b);
  require_same_shape(ta, tb, "sub");
  Tensor<T> out = ta;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= tb.data[i];
  return push(Op::Sub, std::move(out), {a.id, b.id});
}

template <typename T>
Var Graph<T>::mul(Var a, Var b) {
  const auto& ta = value(a);
  const auto& tb = value(b);
  require_same_shape(ta, tb, "mul");
  Tensor<T> out = ta;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
  return push(Op::Mul, std::move(out), {a.id, b.id});
}

template <typename T>
Var Graph<T>::add_bias(Var m, Var bias) {
  const auto& tm = value(m);
  const auto& tb = value(bias);
  if (tb.rank() != 1 || tb.cols() != tm.cols()) {
    throw DimensionError("add_bias: bias " + tb.shape_str() +
                         " does not match matrix " + tm.shape_str());
  }
  Tensor<T> out = tm;
  int64_t rows = tm.rows(), cols = tm.cols();
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) out.data[size_t(i * cols + j)] += tb.data[size_t(j)];
  }
  return push(Op::AddBias, std::move(out), {m.id, bias.id});
}

template <typename T>
Var Graph<T>::scale(Var a, T c) {
  Tensor<T> out = value(a);
  for (auto& v : out.data) v *= c;
  Var r = push(Op::ScaleConst, std::move(out), {a.id});
  node(r).meta_scalars = {c};
  return r;
}

template <typename T>
Var Graph<T>::mul_scalar(Var a, Var s) {
  const auto& ts = value(s);
  if (ts.numel() != 1) {
    throw DimensionError("mul_scalar: scalar operand has shape " +
                         ts.shape_str());
  }
  T c = ts.data[0];
  Tensor<T> out = value(a);
  for (auto& v : out.data) v *= c;
  return push(Op::MulScalarVar, std::move(out), {a.id, s.id});
}

template <typename T>
Var Graph<T>::matmul(Var a, Var b) {
  const auto& ta = value(a);
  const auto& tb = value(b);
  require_rank2(ta, "matmul");
  require_rank2(tb, "matmul");
  if (ta.shape[1] != tb.shape[0]) {
    throw DimensionError("matmul: inner dimensions disagree, " +
                         ta.shape_str() + " vs " + tb.shape_str());
  }
  int64_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
  Tensor<T> out = Tensor<T>::zeros({m, n});
  kernels::matmul(ta.data.data(), tb.data.data(), out.data.data(), m, k, n);
  return push(Op::MatMul, std::move(out), {a.id, b.id});
}

template <typename T>
Var Graph<T>::transpose(Var a) {
  const auto& ta = value(a);
  require_rank2(ta, "transpose");
  int64_t m = ta.shape[0], n = ta.shape[1];
  Tensor<T> out = Tensor<T>::zeros({n, m});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) out.data[size_t(j * m + i)] = ta.data[size_t(i * n + j)];
  }
  return push(Op::Transpose, std::move(out), {a.id});
}

template <typename T>
Var Graph<T>::relu(Var a) {
  Tensor<T> out = value(a);
  for (auto& v : out.data) v = v > T(0) ? v : T(0);
  return push(Op::Relu, std::move(out), {a.id});
}

template <typename T>
Var Graph<T>::gelu(Var a) {
  Tensor<T> out = value(a);
  for (auto& v : out.data) v = T(double(v) * gauss_cdf(double(v)));
  return push(Op::Gelu, std::move(out), {a.id});
}

template <typename T>
Var Graph<T>::exp(Var a) {
  Tensor<T> out = value(a);
  for (auto& v : out.data) v = T(std::exp(double(v)));
  Var r = push(Op::Exp, std::move(out), {a.id});
  node(r).saved = node(r).value.data;  // e^x reused in backward
  return r;
}

template <typename T>
Var Graph<T>::l2_normalize_rows(Var a, T eps) {
  const auto& ta = value(a);
  int64_t rows = ta.rows(), cols = ta.cols();
  Tensor<T> out = ta;
  std::vector<T> norms(static_cast<size_t>(rows), T(0));
  for (int64_t r = 0; r < rows; ++r) {
    double sq = 0;
    for (int64_t j = 0; j < cols; ++j) {
      double v = double(out.data[size_t(r * cols + j)]);
      sq += v * v;
    }
    T norm = T(std::sqrt(sq));
    norms[size_t(r)] = norm;
    if (norm > eps) {
      for (int64_t j = 0; j < cols; ++j) out.data[size_t(r * cols + j)] /= norm;
    }
  }
  Var v = push(Op::L2NormalizeRows, std::move(out), {a.id});
  node(v).saved = std::move(norms);
  node(v).meta_scalars = {eps};
  return v;
}

template <typename T>
Var Graph<T>::mean_all(Var a) {
  const auto& ta = value(a);
  double acc = 0;
  for (T v : ta.data) acc += double(v);
  Tensor<T> out = Tensor<T>::scalar(T(acc / double(ta.numel())));
  return push(Op::MeanAll, std::move(out), {a.id});
}

template <typename T>
Var Graph<T>::mean_axis0(Var a) {
  const auto& ta = value(a);
  require_rank2(ta, "mean_axis0");
  int64_t m = ta.shape[0], n = ta.shape[1];
  Tensor<T> out = Tensor<T>::zeros({n});
  for (int64_t j = 0; j < n; ++j) {
    double acc = 0;
    for (int64_t i = 0; i < m; ++i) acc += double(ta.data[size_t(i * n + j)]);
    out.data[size_t(j)] = T(acc / double(m));
  }
  return push(Op::MeanAxis0, std::move(out), {a.id});
}

template <typename T>
Var Graph<T>::layer_norm(Var x, Var gamma, Var beta, T eps) {
  const auto& tx = value(x);
  const auto& tg = value(gamma);
  const auto& tb = value(beta);
  int64_t rows = tx.rows(), cols = tx.cols();
  if (tg.numel() != cols || tb.numel() != cols) {
    throw DimensionError("layer_norm: scale/offset " + tg.shape_str() + "/" +
                         tb.shape_str() + " do not match " + tx.shape_str());
  }
  Tensor<T> out = tx;
  std::vector<T> saved(size_t(rows * cols + rows), T(0));  // x_hat rows then rstd
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = tx.data.data() + r * cols;
    double mean = 0;
    for (int64_t j = 0; j < cols; ++j) mean += double(row[j]);
    mean /= double(cols);
    double var = 0;
    for (int64_t j = 0; j < cols; ++j) {
      double dv = double(row[j]) - mean;
      var += dv * dv;
    }
    var /= double(cols);
    double rstd = 1.0 / std::sqrt(var + double(eps));
    saved[size_t(rows * cols + r)] = T(rstd);
    for (int64_t j = 0; j < cols; ++j) {
      T xh = T((double(row[j]) - mean) * rstd);
      saved[size_t(r * cols + j)] = xh;
      out.data[size_t(r * cols + j)] = xh * tg.data[size_t(j)] + tb.data[size_t(j)];
    }
  }
  Var v = push(Op::LayerNorm, std::move(out), {x.id, gamma.id, beta.id});
  node(v).saved = std::move(saved);
  return v;
}

template <typename T>
Var Graph<T>::softmax_rows(Var a) {
  const auto& ta = value(a);
  int64_t rows = ta.rows(), cols = ta.cols();
  Tensor<T> out = ta;
  for (int64_t r = 0; r < rows; ++r) {
    T* row = out.data.data() + r * cols;
    double mx = double(row[0]);
    for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, double(row[j]));
    double sum = 0;
    for (int64_t j = 0; j < cols; ++j) {
      double e = std::exp(double(row[j]) - mx);
      row[j] = T(e);
      sum += e;
    }
    for (int64_t j = 0; j < cols; ++j) row[j] = T(double(row[j]) / sum);
  }
  Var v = push(Op::SoftmaxRows, std::move(out), {a.id});
  node(v).saved = node(v).value.data;
  return v;
}

template <typename T>
Var Graph<T>::cross_entropy_rows(Var logits, const std::vector<int>& targets) {
  const auto& tl = value(logits);
  int64_t rows = tl.rows(), cols = tl.cols();
  if (int64_t(targets.size()) != rows) {
    throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(rows) + " rows");
  }
  std::vector<T> probs(size_t(rows * cols), T(0));
  double total = 0;
  for (int64_t r = 0; r < rows; ++r) {
    int t = targets[size_t(r)];
    if (t < 0 || int64_t(t) >= cols) {
      throw IndexError("cross_entropy_rows: target " + std::to_string(t) +
                       " out of range [0, " + std::to_string(cols) + ")");
    }
    const T* row = tl.data.data() + r * cols;
    double mx = double(row[0]);
    for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, double(row[j]));
    double sum = 0;
    for (int64_t j = 0; j < cols; ++j) sum += std::exp(double(row[j]) - mx);
    double log_z = mx + std::log(sum);
    total += log_z - double(row[t]);
    for (int64_t j = 0; j < cols; ++j) {
      probs[size_t(r * cols + j)] = T(std::exp(double(row[j]) - log_z));
    }
  }
  Tensor<T> out = Tensor<T>::scalar(T(total / double(rows)));
  Var v = push(Op::CrossEntropyRows, std::move(out), {logits.id});
  node(v).saved = std::move(probs);
  node(v).meta_ints = targets;
  return v;
}

template <typename T>
Var Graph<T>::select_rows(Var a, const std::vector<int>& rows) {
  const auto& ta = value(a);
  require_rank2(ta, "select_rows");
  int64_t m = ta.shape[0], n = ta.shape[1];
  Tensor<T> out = Tensor<T>::zeros({int64_t(rows.size()), n});
  for (size_t k = 0; k < rows.size(); ++k) {
    int r = rows[k];
    if (r < 0 || int64_t(r) >= m) {
      throw IndexError("select_rows: row " + std::to_string(r) +
                       " out of range [0, " + std::to_string(m) + ")");
    }
    std::copy_n(ta.data.data() + int64_t(r) * n, n, out.data.data() + int64_t(k) * n);
  }
  Var v = push(Op::SelectRows, std::move(out), {a.id});
  node(v).meta_ints = rows;
  return v;
}

template <typename T>
Var Graph<T>::slice_rows(Var a, int64_t begin, int64_t count) {
  const auto& ta = value(a);
  // rank-1 slices elements, rank-2 slices rows; shape[0] bounds both
  int64_t m = ta.shape[0], n = ta.cols();
  if (begin < 0 || count <= 0 || begin + count > m) {
    throw IndexError("slice_rows: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     ta.shape_str());
  }
  Tensor<T> out = ta.rank() == 1 ? Tensor<T>::zeros({count})
                                 : Tensor<T>::zeros({count, n});
  if (ta.rank() == 1) {
    std::copy_n(ta.data.data() + begin, count, out.data.data());
  } else {
    std::copy_n(ta.data.data() + begin * n, count * n, out.data.data());
  }
  Var v = push(Op::SliceRows, std::move(out), {a.id});
  node(v).meta_ints = {int(begin), int(count)};
  return v;
}

template <typename T>
Var Graph<T>::concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat: no inputs");
  std::vector<T> data;
  std::vector<int32_t> ids;
  for (Var p : parts) {
    const auto& tp = value(p);
    data.insert(data.end(), tp.data.begin(), tp.data.end());
    ids.push_back(p.id);
  }
  Tensor<T> out = Tensor<T>::vec(std::move(data));
  return push(Op::Concat, std::move(out), std::move(ids));
}

template <typename T>
Var Graph<T>::reshape(Var a, std::vector<int64_t> shape) {
  const auto& ta = value(a);
  int64_t n = shape.empty() ? 0 : 1;
  std::string wanted = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    n *= shape[i];
    wanted += (i ? "x" : "") + std::to_string(shape[i]);
  }
  wanted += "]";
  if (n != ta.numel()) {
    throw DimensionError("reshape: cannot view " + ta.shape_str() + " as " +
                         wanted);
  }
  Tensor<T> out(std::move(shape), ta.data);
  return push(Op::Reshape, std::move(out), {a.id});
}

template <typename T>
Var Graph<T>::vlad_pool(std::optional<Var> fresh,
                        const std::vector<int>& fresh_tiles,
                        const std::vector<int>& stale_tiles,
                        const std::vector<std::vector<T>>& stale_features,
                        const Tensor<double>& centroids,
                        std::vector<int>* out_assignments) {
  if (centroids.rank() != 2) {
    throw DimensionError("vlad_pool: centroids must be a matrix, got " +
                         centroids.shape_str());
  }
  const int64_t k = centroids.shape[0];
  const int64_t d = centroids.shape[1];
  int64_t f_count = 0;
  if (fresh.has_value()) {
    const auto& tf = value(*fresh);
    require_rank2(tf, "vlad_pool");
    if (tf.shape[1] != d) {
      throw DimensionError("vlad_pool: fresh features " + tf.shape_str() +
                           " do not match centroid dim " + std::to_string(d));
    }
    f_count = tf.shape[0];
  }
  if (int64_t(fresh_tiles.size()) != f_count) {
    throw DimensionError("vlad_pool: fresh tile index count mismatch");
  }
  if (stale_tiles.size() != stale_features.size()) {
    throw DimensionError("vlad_pool: stale tile index count mismatch");
  }
  for (const auto& s : stale_features) {
    if (int64_t(s.size()) != d) {
      throw DimensionError("vlad_pool: stale feature of length " +
                           std::to_string(s.size()) + ", expected " +
                           std::to_string(d));
    }
  }

  struct Entry {
    int tile;
    bool is_fresh;
    int row;
  };
  std::vector<Entry> entries;
  entries.reserve(fresh_tiles.size() + stale_tiles.size());
  for (size_t i = 0; i < fresh_tiles.size(); ++i) {
    entries.push_back({fresh_tiles[i], true, int(i)});
  }
  for (size_t i = 0; i < stale_tiles.size(); ++i) {
    entries.push_back({stale_tiles[i], false, int(i)});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.tile < b.tile; });
  for (size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].tile == entries[i - 1].tile) {
      throw InputError("vlad_pool: duplicate tile index " +
                       std::to_string(entries[i].tile));
    }
  }

  const Tensor<T>* tf = fresh.has_value() ? &value(*fresh) : nullptr;
  std::vector<double> feat(static_cast<size_t>(d), 0.0);
  std::vector<double> blocks(size_t(k * d), 0.0);
  std::vector<int> fresh_assign(size_t(f_count), -1);
  if (out_assignments) out_assignments->clear();
  for (const Entry& e : entries) {
    if (e.is_fresh) {
      for (int64_t j = 0; j < d; ++j) {
        feat[size_t(j)] = double(tf->data[size_t(e.row * d + j)]);
      }
    } else {
      for (int64_t j = 0; j < d; ++j) {
        feat[size_t(j)] = double(stale_features[size_t(e.row)][size_t(j)]);
      }
    }
    int a = 0;
    kernels::nearest_centroid(feat.data(), 1, centroids.data.data(), k, d, &a);
    if (e.is_fresh) fresh_assign[size_t(e.row)] = a;
    if (out_assignments) out_assignments->push_back(a);
    double* block = blocks.data() + int64_t(a) * d;
    const double* c = centroids.data.data() + int64_t(a) * d;
    for (int64_t j = 0; j < d; ++j) block[size_t(j)] += feat[size_t(j)] - c[j];
  }

  Tensor<T> out = Tensor<T>::zeros({k * d});
  for (size_t i = 0; i < blocks.size(); ++i) out.data[i] = T(blocks[i]);
  std::vector<int32_t> ids;
  if (fresh.has_value()) ids.push_back(fresh->id);
  Var v = push(Op::VladPool, std::move(out), std::move(ids));
  node(v).meta_ints = fresh_assign;
  node(v).meta_ints.push_back(int(d));
  return v;
}

template <typename T>
Tensor<T>& Graph<T>::grad_buffer(int32_t id) {
  Node& n = nodes_[size_t(id)];
  if (n.grad.data.empty()) {
    n.grad = Tensor<T>::zeros(n.value.shape);
  }
  return n.grad;
}

template <typename T>
const Tensor<T>& Graph<T>::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.data.empty()) {
    throw InputError(std::string("no gradient at node ") + std::to_string(v.id) +
                     " (op '" + op_name(n.op) + "'); run backward first");
  }
  return n.grad;
}

template <typename T>
void Graph<T>::backward(Var scalar_output) {
  const Node& out = node(scalar_output);
  if (out.value.numel() != 1) {
    throw InputError("backward: output must be scalar, got " +
                     out.value.shape_str());
  }
  // every trainable leaf gets a buffer so unreached parameters read as zero
  for (auto& n : nodes_) {
    if (n.op == Op::Leaf && n.needs_grad && n.grad.data.empty()) {
      n.grad = Tensor<T>::zeros(n.value.shape);
    }
  }
  grad_buffer(scalar_output.id).data[0] = T(1);
  for (int32_t id = scalar_output.id; id >= 0; --id) {
    Node& n = nodes_[size_t(id)];
    if (n.grad.data.empty() || !n.needs_grad) continue;
    backward_node(id);
    if (check_finite_ && !n.grad.all_finite()) {
      throw NumericError(std::string("non-finite gradient at node ") +
                         std::to_string(id) + " (op '" + op_name(n.op) + "')");
    }
  }
}

template <typename T>
void Graph<T>::backward_node(int32_t id) {
  Node& n = nodes_[size_t(id)];
  const Tensor<T>& g = n.grad;
  auto needs = [&](int slot) {
    return nodes_[size_t(n.inputs[size_t(slot)])].needs_grad;
  };
  auto gin = [&](int slot) -> Tensor<T>& {
    return grad_buffer(n.inputs[size_t(slot)]);
  };
  auto vin = [&](int slot) -> const Tensor<T>& {
    return nodes_[size_t(n.inputs[size_t(slot)])].value;
  };

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Add: {
      for (int s = 0; s < 2; ++s) {
        if (!needs(s)) continue;
        auto& gi = gin(s);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i];
      }
      break;
    }
    case Op::Sub: {
      if (needs(0)) {
        auto& gi = gin(0);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i];
      }
      if (needs(1)) {
        auto& gi = gin(1);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] -= g.data[i];
      }
      break;
    }
    case Op::Mul: {
      if (needs(0)) {
        auto& gi = gin(0);
        const auto& b = vin(1);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i] * b.data[i];
      }
      if (needs(1)) {
        auto& gi = gin(1);
        const auto& a = vin(0);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i] * a.data[i];
      }
      break;
    }
    case Op::AddBias: {
      int64_t rows = n.value.rows(), cols = n.value.cols();
      if (needs(0)) {
        auto& gi = gin(0);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i];
      }
      if (needs(1)) {
        auto& gb = gin(1);
        for (int64_t i = 0; i < rows; ++i) {
          for (int64_t j = 0; j < cols; ++j) gb.data[size_t(j)] += g.data[size_t(i * cols + j)];
        }
      }
      break;
    }
    case Op::ScaleConst: {
      if (needs(0)) {
        T c = n.meta_scalars[0];
        auto& gi = gin(0);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += c * g.data[i];
      }
      break;
    }
    case Op::MulScalarVar: {
      const auto& a = vin(0);
      T c = vin(1).data[0];
      if (needs(0)) {
        auto& gi = gin(0);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += c * g.data[i];
      }
      if (needs(1)) {
        auto& gs = gin(1);
        double acc = 0;
        for (size_t i = 0; i < g.data.size(); ++i) acc += double(g.data[i]) * double(a.data[i]);
        gs.data[0] += T(acc);
      }
      break;
    }
    case Op::MatMul: {
      const auto& a = vin(0);
      const auto& b = vin(1);
      int64_t m = a.shape[0], k = a.shape[1], nn = b.shape[1];
      if (needs(0)) {
        // dA = dC * B^T
        Tensor<T> da = Tensor<T>::zeros({m, k});
        kernels::matmul(g.data.data(), b.data.data(), da.data.data(), m, nn, k,
                        false, true);
        auto& gi = gin(0);
        for (size_t i = 0; i < da.data.size(); ++i) gi.data[i] += da.data[i];
      }
      if (needs(1)) {
        // dB = A^T * dC
        Tensor<T> db = Tensor<T>::zeros({k, nn});
        kernels::matmul(a.data.data(), g.data.data(), db.data.data(), k, m, nn,
                        true, false);
        auto& gi = gin(1);
        for (size_t i = 0; i < db.data.size(); ++i) gi.data[i] += db.data[i];
      }
      break;
    }
    case Op::Transpose: {
      if (needs(0)) {
        int64_t m = n.value.shape[0], nn = n.value.shape[1];  // out is m x nn
        auto& gi = gin(0);
        for (int64_t i = 0; i < m; ++i) {
          for (int64_t j = 0; j < nn; ++j) {
            gi.data[size_t(j * m + i)] += g.data[size_t(i * nn + j)];
          }
        }
      }
      break;
    }
    case Op::Relu: {
      if (needs(0)) {
        const auto& a = vin(0);
        auto& gi = gin(0);
        for (size_t i = 0; i < g.data.size(); ++i) {
          if (a.data[i] > T(0)) gi.data[i] += g.data[i];
        }
      }
      break;
    }
    case Op::Gelu: {
      if (needs(0)) {
        const auto& a = vin(0);
        auto& gi = gin(0);
        for (size_t i = 0; i < g.data.size(); ++i) {
          double x = double(a.data[i]);
          gi.data[i] += T((gauss_cdf(x) + x * gauss_pdf(x)) * double(g.data[i]));
        }
      }
      break;
    }
    case Op::Exp: {
      if (needs(0)) {
        auto& gi = gin(0);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += n.saved[i] * g.data[i];
      }
      break;
    }
    case Op::L2NormalizeRows: {
      if (!needs(0)) break;
      auto& gi = gin(0);
      const Tensor<T>& y = n.value;
      int64_t rows = y.rows(), cols = y.cols();
      T eps = n.meta_scalars[0];
      for (int64_t r = 0; r < rows; ++r) {
        T norm = n.saved[size_t(r)];
        const T* yr = y.data.data() + r * cols;
        const T* gr = g.data.data() + r * cols;
        T* gir = gi.data.data() + r * cols;
        if (norm > eps) {
          double dot = 0;
          for (int64_t j = 0; j < cols; ++j) dot += double(yr[j]) * double(gr[j]);
          for (int64_t j = 0; j < cols; ++j) {
            gir[j] += T((double(gr[j]) - double(yr[j]) * dot) / double(norm));
          }
        } else {
          for (int64_t j = 0; j < cols; ++j) gir[j] += gr[j];
        }
      }
      break;
    }
    case Op::MeanAll: {
      if (needs(0)) {
        auto& gi = gin(0);
        T s = g.data[0] / T(double(gi.numel()));
        for (auto& v : gi.data) v += s;
      }
      break;
    }
    case Op::MeanAxis0: {
      if (needs(0)) {
        auto& gi = gin(0);
        int64_t m = gi.rows(), cols = gi.cols();
        for (int64_t i = 0; i < m; ++i) {
          for (int64_t j = 0; j < cols; ++j) {
            gi.data[size_t(i * cols + j)] += g.data[size_t(j)] / T(double(m));
          }
        }
      }
      break;
    }
    case Op::LayerNorm: {
      const auto& x = vin(0);
      const auto& gamma = vin(1);
      int64_t rows = x.rows(), cols = x.cols();
      const T* xhat = n.saved.data();
      const T* rstd = n.saved.data() + rows * cols;
      for (int64_t r = 0; r < rows; ++r) {
        const T* gr = g.data.data() + r * cols;
        const T* xh = xhat + r * cols;
        if (needs(1)) {
          auto& gg = gin(1);
          for (int64_t j = 0; j < cols; ++j) gg.data[size_t(j)] += gr[j] * xh[j];
        }
        if (needs(2)) {
          auto& gb = gin(2);
          for (int64_t j = 0; j < cols; ++j) gb.data[size_t(j)] += gr[j];
        }
        if (needs(0)) {
          auto& gx = gin(0);
          double mean_dxhat = 0, mean_dxhat_xhat = 0;
          for (int64_t j = 0; j < cols; ++j) {
            double dxh = double(gr[j]) * double(gamma.data[size_t(j)]);
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * double(xh[j]);
          }
          mean_dxhat /= double(cols);
          mean_dxhat_xhat /= double(cols);
          for (int64_t j = 0; j < cols; ++j) {
            double dxh = double(gr[j]) * double(gamma.data[size_t(j)]);
            gx.data[size_t(r * cols + j)] +=
                T(double(rstd[r]) * (dxh - mean_dxhat - double(xh[j]) * mean_dxhat_xhat));
          }
        }
      }
      break;
    }
    case Op::SoftmaxRows: {
      if (!needs(0)) break;
      auto& gi = gin(0);
      int64_t rows = n.value.rows(), cols = n.value.cols();
      for (int64_t r = 0; r < rows; ++r) {
        const T* y = n.saved.data() + r * cols;
        const T* gr = g.data.data() + r * cols;
        double dot = 0;
        for (int64_t j = 0; j < cols; ++j) dot += double(y[j]) * double(gr[j]);
        for (int64_t j = 0; j < cols; ++j) {
          gi.data[size_t(r * cols + j)] += T(double(y[j]) * (double(gr[j]) - dot));
        }
      }
      break;
    }
    case Op::CrossEntropyRows: {
      if (!needs(0)) break;
      auto& gi = gin(0);
      int64_t rows = gi.rows(), cols = gi.cols();
      T scale = g.data[0] / T(double(rows));
      for (int64_t r = 0; r < rows; ++r) {
        int t = n.meta_ints[size_t(r)];
        const T* p = n.saved.data() + r * cols;
        for (int64_t j = 0; j < cols; ++j) {
          T delta = (int64_t(t) == j) ? T(1) : T(0);
          gi.data[size_t(r * cols + j)] += scale * (p[j] - delta);
        }
      }
      break;
    }
    case Op::SelectRows: {
      if (!needs(0)) break;
      auto& gi = gin(0);
      int64_t cols = gi.cols();
      for (size_t kk = 0; kk < n.meta_ints.size(); ++kk) {
        int r = n.meta_ints[kk];
        for (int64_t j = 0; j < cols; ++j) {
          gi.data[size_t(int64_t(r) * cols + j)] += g.data[size_t(int64_t(kk) * cols + j)];
        }
      }
      break;
    }
    case Op::SliceRows: {
      if (!needs(0)) break;
      auto& gi = gin(0);
      int64_t begin = n.meta_ints[0];
      int64_t stride = gi.rank() == 1 ? 1 : gi.cols();
      for (size_t i = 0; i < g.data.size(); ++i) {
        gi.data[size_t(begin * stride) + i] += g.data[i];
      }
      break;
    }
    case Op::Concat: {
      size_t offset = 0;
      for (size_t s = 0; s < n.inputs.size(); ++s) {
        size_t len = nodes_[size_t(n.inputs[s])].value.data.size();
        if (nodes_[size_t(n.inputs[s])].needs_grad) {
          auto& gi = grad_buffer(n.inputs[s]);
          for (size_t i = 0; i < len; ++i) gi.data[i] += g.data[offset + i];
        }
        offset += len;
      }
      break;
    }
    case Op::Reshape: {
      if (needs(0)) {
        auto& gi = gin(0);
        for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i];
      }
      break;
    }
    case Op::VladPool: {
      if (n.inputs.empty() || !needs(0)) break;
      auto& gi = gin(0);
      int64_t d = n.meta_ints.back();
      size_t f_count = n.meta_ints.size() - 1;
      for (size_t r = 0; r < f_count; ++r) {
        int a = n.meta_ints[r];
        const T* gb = g.data.data() + int64_t(a) * d;
        for (int64_t j = 0; j < d; ++j) {
          gi.data[size_t(int64_t(r) * d + j)] += gb[j];
        }
      }
      break;
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace drsl
