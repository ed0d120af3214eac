#include "drsl/slide_head.hpp"

#include <cmath>

namespace drsl {

void SlideHeadConfig::validate() const {
  if (k < 1) throw ConfigError("slide head needs k >= 1 tokens");
  if (d < 2) throw ConfigError("slide head token dim must be >= 2");
  if (report_dim < 1) throw ConfigError("report_dim must be positive");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (n_layers < 1) throw ConfigError("slide head needs >= 1 layer");
  if (n_heads < 1 || d % n_heads != 0) {
    throw ConfigError("n_heads must divide token dim " + std::to_string(d));
  }
}

namespace {

template <typename T>
Tensor<T> fan_uniform(Rng& rng, int64_t fan_in, int64_t fan_out) {
  double s = std::sqrt(6.0 / double(fan_in + fan_out));
  Tensor<T> w = Tensor<T>::zeros({fan_in, fan_out});
  for (auto& v : w.data) v = T(rng.uniform(-s, s));
  w.requires_grad = true;
  return w;
}

template <typename T>
Tensor<T> grad_vec(std::vector<int64_t> shape, T fill) {
  Tensor<T> t = Tensor<T>::full(std::move(shape), fill);
  t.requires_grad = true;
  return t;
}

}  // namespace

template <typename T>
SlideHeadParams<T> init_slide_head(const SlideHeadConfig& cfg, Rng& rng) {
  cfg.validate();
  SlideHeadParams<T> p;
  const int64_t d = cfg.d, f = cfg.ff_dim();
  for (int64_t l = 0; l < cfg.n_layers; ++l) {
    AttnLayerParams<T> layer;
    layer.ln1_g = grad_vec<T>({d}, T(1));
    layer.ln1_b = grad_vec<T>({d}, T(0));
    layer.wq = fan_uniform<T>(rng, d, d);
    layer.bq = grad_vec<T>({d}, T(0));
    layer.wk = fan_uniform<T>(rng, d, d);
    layer.bk = grad_vec<T>({d}, T(0));
    layer.wv = fan_uniform<T>(rng, d, d);
    layer.bv = grad_vec<T>({d}, T(0));
    layer.wo = fan_uniform<T>(rng, d, d);
    layer.bo = grad_vec<T>({d}, T(0));
    layer.ln2_g = grad_vec<T>({d}, T(1));
    layer.ln2_b = grad_vec<T>({d}, T(0));
    layer.ff1_w = fan_uniform<T>(rng, d, f);
    layer.ff1_b = grad_vec<T>({f}, T(0));
    layer.ff2_w = fan_uniform<T>(rng, f, d);
    layer.ff2_b = grad_vec<T>({d}, T(0));
    p.layers.push_back(std::move(layer));
  }
  p.w_proj = fan_uniform<T>(rng, d, cfg.report_dim);
  p.cls_w1 = fan_uniform<T>(rng, d, cfg.cls_dim());
  p.cls_b1 = grad_vec<T>({cfg.cls_dim()}, T(0));
  p.cls_w2 = fan_uniform<T>(rng, cfg.cls_dim(), cfg.num_classes);
  p.cls_b2 = grad_vec<T>({cfg.num_classes}, T(0));
  return p;
}

template <typename T>
void for_each_param(SlideHeadParams<T>& p,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  for (size_t l = 0; l < p.layers.size(); ++l) {
    auto& lay = p.layers[l];
    std::string pre = "head.l" + std::to_string(l) + ".";
    fn(pre + "ln1_g", lay.ln1_g);
    fn(pre + "ln1_b", lay.ln1_b);
    fn(pre + "wq", lay.wq);
    fn(pre + "bq", lay.bq);
    fn(pre + "wk", lay.wk);
    fn(pre + "bk", lay.bk);
    fn(pre + "wv", lay.wv);
    fn(pre + "bv", lay.bv);
    fn(pre + "wo", lay.wo);
    fn(pre + "bo", lay.bo);
    fn(pre + "ln2_g", lay.ln2_g);
    fn(pre + "ln2_b", lay.ln2_b);
    fn(pre + "ff1_w", lay.ff1_w);
    fn(pre + "ff1_b", lay.ff1_b);
    fn(pre + "ff2_w", lay.ff2_w);
    fn(pre + "ff2_b", lay.ff2_b);
  }
  fn("head.w_proj", p.w_proj);
  fn("head.cls_w1", p.cls_w1);
  fn("head.cls_b1", p.cls_b1);
  fn("head.cls_w2", p.cls_w2);
  fn("head.cls_b2", p.cls_b2);
}

namespace {

template <typename T, typename BindOne>
SlideHeadVars<T> walk_bind(SlideHeadParams<T>& p, BindOne&& one) {
  SlideHeadVars<T> vars;
  for (size_t l = 0; l < p.layers.size(); ++l) {
    auto& lay = p.layers[l];
    std::string pre = "head.l" + std::to_string(l) + ".";
    AttnLayerVars<T> lv;
    lv.ln1_g = one(pre + "ln1_g", lay.ln1_g);
    lv.ln1_b = one(pre + "ln1_b", lay.ln1_b);
    lv.wq = one(pre + "wq", lay.wq);
    lv.bq = one(pre + "bq", lay.bq);
    lv.wk = one(pre + "wk", lay.wk);
    lv.bk = one(pre + "bk", lay.bk);
    lv.wv = one(pre + "wv", lay.wv);
    lv.bv = one(pre + "bv", lay.bv);
    lv.wo = one(pre + "wo", lay.wo);
    lv.bo = one(pre + "bo", lay.bo);
    lv.ln2_g = one(pre + "ln2_g", lay.ln2_g);
    lv.ln2_b = one(pre + "ln2_b", lay.ln2_b);
    lv.ff1_w = one(pre + "ff1_w", lay.ff1_w);
    lv.ff1_b = one(pre + "ff1_b", lay.ff1_b);
    lv.ff2_w = one(pre + "ff2_w", lay.ff2_w);
    lv.ff2_b = one(pre + "ff2_b", lay.ff2_b);
    vars.layers.push_back(lv);
  }
  vars.w_proj = one("head.w_proj", p.w_proj);
  vars.cls_w1 = one("head.cls_w1", p.cls_w1);
  vars.cls_b1 = one("head.cls_b1", p.cls_b1);
  vars.cls_w2 = one("head.cls_w2", p.cls_w2);
  vars.cls_b2 = one("head.cls_b2", p.cls_b2);
  return vars;
}

}  // namespace

template <typename T>
SlideHeadVars<T> bind_slide_head(Graph<T>& g, SlideHeadParams<T>& p, Binding<T>* binding) {
  return walk_bind(p, [&](const std::string& name, Tensor<T>& t) {
    return binding ? binding->bind(g, name, t) : g.input(t);
  });
}

// read-only bind; values are copied into the graph as constants
template <typename T>
SlideHeadVars<T> bind_slide_head(Graph<T>& g, const SlideHeadParams<T>& p) {
  return walk_bind(const_cast<SlideHeadParams<T>&>(p),
                   [&](const std::string&, Tensor<T>& t) { return g.constant(t); });
}

namespace {

// column block [begin, begin+count) of a matrix, via double transpose
template <typename T>
Var slice_cols(Graph<T>& g, Var m, int64_t begin, int64_t count) {
  return g.transpose(g.slice_rows(g.transpose(m), begin, count));
}

}  // namespace

template <typename T>
SlideEmbed enhance(Graph<T>& g, const SlideHeadVars<T>& vars,
                   const SlideHeadConfig& cfg, Var flat) {
  cfg.validate();
  const auto& fv = g.value(flat);
  if (fv.numel() != cfg.k * cfg.d) {
    throw ConfigError("enhance: descriptor " + fv.shape_str() + " does not match K*d = " +
                      std::to_string(cfg.k * cfg.d));
  }
  const int64_t dh = cfg.d / cfg.n_heads;
  const T inv_sqrt_dh = T(1.0 / std::sqrt(double(dh)));

  Var x = g.reshape(flat, {cfg.k, cfg.d});
  for (const auto& lay : vars.layers) {
    Var u = g.layer_norm(x, lay.ln1_g, lay.ln1_b);
    Var q = g.add_bias(g.matmul(u, lay.wq), lay.bq);
    Var k = g.add_bias(g.matmul(u, lay.wk), lay.bk);
    Var v = g.add_bias(g.matmul(u, lay.wv), lay.bv);

    Var attn_tokens;
    if (cfg.n_heads == 1) {
      Var scores = g.scale(g.matmul(q, g.transpose(k)), inv_sqrt_dh);
      attn_tokens = g.matmul(g.softmax_rows(scores), v);
    } else {
      // heads as column blocks; re-concatenate via stacked transposes
      std::vector<Var> head_tr;
      for (int64_t h = 0; h < cfg.n_heads; ++h) {
        Var qh = slice_cols(g, q, h * dh, dh);
        Var kh = slice_cols(g, k, h * dh, dh);
        Var vh = slice_cols(g, v, h * dh, dh);
        Var scores = g.scale(g.matmul(qh, g.transpose(kh)), inv_sqrt_dh);
        Var oh = g.matmul(g.softmax_rows(scores), vh);
        head_tr.push_back(g.transpose(oh));
      }
      attn_tokens = g.transpose(g.reshape(g.concat(head_tr), {cfg.d, cfg.k}));
    }
    x = g.add(x, g.add_bias(g.matmul(attn_tokens, lay.wo), lay.bo));

    Var u2 = g.layer_norm(x, lay.ln2_g, lay.ln2_b);
    Var ff = g.add_bias(
        g.matmul(g.gelu(g.add_bias(g.matmul(u2, lay.ff1_w), lay.ff1_b)), lay.ff2_w),
        lay.ff2_b);
    x = g.add(x, ff);
  }

  SlideEmbed out;
  out.h = g.reshape(g.mean_axis0(x), {1, cfg.d});
  out.h_proj = g.l2_normalize_rows(g.matmul(out.h, vars.w_proj));
  return out;
}

template <typename T>
Var classify(Graph<T>& g, const SlideHeadVars<T>& vars,
             const SlideHeadConfig& cfg, Var h) {
  (void)cfg;
  Var hidden = g.gelu(g.add_bias(g.matmul(h, vars.cls_w1), vars.cls_b1));
  return g.add_bias(g.matmul(hidden, vars.cls_w2), vars.cls_b2);
}

template SlideHeadParams<float> init_slide_head<float>(const SlideHeadConfig&, Rng&);
template SlideHeadParams<double> init_slide_head<double>(const SlideHeadConfig&, Rng&);
template void for_each_param<float>(
    SlideHeadParams<float>&, const std::function<void(const std::string&, Tensor<float>&)>&);
template void for_each_param<double>(
    SlideHeadParams<double>&, const std::function<void(const std::string&, Tensor<double>&)>&);
template SlideHeadVars<float> bind_slide_head<float>(GraphF&, SlideHeadParams<float>&, Binding<float>*);
template SlideHeadVars<double> bind_slide_head<double>(GraphD&, SlideHeadParams<double>&, Binding<double>*);
template SlideHeadVars<float> bind_slide_head<float>(GraphF&, const SlideHeadParams<float>&);
template SlideHeadVars<double> bind_slide_head<double>(GraphD&, const SlideHeadParams<double>&);
template SlideEmbed enhance<float>(GraphF&, const SlideHeadVars<float>&, const SlideHeadConfig&, Var);
template SlideEmbed enhance<double>(GraphD&, const SlideHeadVars<double>&, const SlideHeadConfig&, Var);
template Var classify<float>(GraphF&, const SlideHeadVars<float>&, const SlideHeadConfig&, Var);
template Var classify<double>(GraphD&, const SlideHeadVars<double>&, const SlideHeadConfig&, Var);

}  // namespace drsl
