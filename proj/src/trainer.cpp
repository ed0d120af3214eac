#include "drsl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "drsl/binding.hpp"
#include "drsl/errors.hpp"
#include "drsl/graph.hpp"
#include "drsl/io_util.hpp"

namespace drsl {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (tiles_per_slide < 1) throw ConfigError("tiles_per_slide must be at least 1");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (freeze_epochs < 0 || freeze_epochs > epochs)
    throw ConfigError("freeze_epochs must lie in [0, epochs]");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (loss_weight < 0.0) throw ConfigError("loss_weight must be non-negative");
  if (codebook_k < 2) throw ConfigError("codebook_k must be at least 2");
  if (kmeans_max_iters < 1) throw ConfigError("kmeans_max_iters must be at least 1");
  if (!(kmeans_tol >= 0.0)) throw ConfigError("kmeans_tol must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

template <typename T>
void for_each_param(TrainState<T>& s,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  for_each_param(s.encoder, fn);
  for_each_param(s.head, fn);
  for_each_param(s.temps, fn);
}

template <typename T>
TrainState<T> init_state(const EncoderConfig& enc_cfg, const SlideHeadConfig& head_cfg,
                         const TrainConfig& cfg) {
  enc_cfg.validate();
  head_cfg.validate();
  cfg.validate();
  if (head_cfg.d != enc_cfg.feature_dim)
    throw ConfigError("slide head token dim " + std::to_string(head_cfg.d) +
                      " must equal encoder feature dim " +
                      std::to_string(enc_cfg.feature_dim));
  if (head_cfg.k != cfg.codebook_k)
    throw ConfigError("slide head expects " + std::to_string(head_cfg.k) +
                      " tokens but codebook_k is " + std::to_string(cfg.codebook_k));

  TrainState<T> s;
  s.enc_cfg = enc_cfg;
  s.head_cfg = head_cfg;
  s.cfg = cfg;
  Rng init_rng = Rng(cfg.seed).stream("init");
  s.encoder = init_encoder<T>(enc_cfg, init_rng);
  s.head = init_slide_head<T>(head_cfg, init_rng);
  s.temps = init_temperatures<T>();
  s.adam = Adam<T>({cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay});
  s.rng = Rng(cfg.seed).stream("train");
  s.epoch = 0;
  set_frozen(s.encoder, cfg.freeze_epochs > 0);
  return s;
}

namespace {

template <typename T>
Tensor<T> tiles_tensor(const std::vector<std::vector<float>>& tiles,
                       const std::vector<int>& rows, int64_t input_dim,
                       const std::string& slide_id) {
  Tensor<T> t = Tensor<T>::zeros({static_cast<int64_t>(rows.size()), input_dim});
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& tile = tiles[static_cast<size_t>(rows[i])];
    if (static_cast<int64_t>(tile.size()) != input_dim)
      throw DimensionError("slide '" + slide_id + "' tile " + std::to_string(rows[i]) +
                           " has dimension " + std::to_string(tile.size()) +
                           ", encoder expects " + std::to_string(input_dim));
    for (int64_t j = 0; j < input_dim; ++j)
      t.data[i * static_cast<size_t>(input_dim) + static_cast<size_t>(j)] =
          static_cast<T>(tile[static_cast<size_t>(j)]);
  }
  return t;
}

std::vector<int> all_rows(size_t n) {
  std::vector<int> r(n, 0);
  for (size_t i = 0; i < n; ++i) r[i] = static_cast<int>(i);
  return r;
}

template <typename T>
void check_dataset(const TrainState<T>& s, const Dataset& ds) {
  if (ds.input_dim != s.enc_cfg.input_dim)
    throw DimensionError("dataset tiles have dimension " + std::to_string(ds.input_dim) +
                         ", encoder expects " + std::to_string(s.enc_cfg.input_dim));
  for (const auto& sl : ds.slides) {
    if (sl.label < 0 || sl.label >= s.head_cfg.num_classes)
      throw DataError("slide '" + sl.id + "' has label " + std::to_string(sl.label) +
                      " outside [0, " + std::to_string(s.head_cfg.num_classes) + ")");
    if (sl.report.present &&
        static_cast<int64_t>(sl.report.t.size()) != s.head_cfg.report_dim)
      throw DimensionError("slide '" + sl.id + "' report has dimension " +
                           std::to_string(sl.report.t.size()) + ", head projects to " +
                           std::to_string(s.head_cfg.report_dim));
  }
}

}  // namespace

template <typename T>
std::pair<MemoryBank, Codebook> prepare(const TrainState<T>& state, const Dataset& ds) {
  check_dataset(state, ds);
  if (ds.slides.empty()) throw DataError("preparation needs at least one slide");

  MemoryBank bank(state.enc_cfg.feature_dim);
  for (size_t i = 0; i < ds.slides.size(); ++i) {
    auto tiles = ds.tiles(i);
    Graph<T> g;
    Var in = g.constant(tiles_tensor<T>(tiles, all_rows(tiles.size()),
                                        state.enc_cfg.input_dim, ds.slides[i].id));
    Var feat = encode(g, state.encoder, state.enc_cfg, in);
    const Tensor<T>& fv = g.value(feat);
    size_t d = static_cast<size_t>(state.enc_cfg.feature_dim);
    for (size_t t = 0; t < tiles.size(); ++t) {
      std::vector<float> row(d, 0.0f);
      for (size_t j = 0; j < d; ++j) row[j] = static_cast<float>(fv.data[t * d + j]);
      bank.insert(ds.slides[i].id, static_cast<int>(t), row);
    }
  }

  std::vector<std::vector<float>> features;
  for (auto& e : bank.dump()) features.push_back(std::move(e.feature));
  KMeansOptions opts{state.cfg.kmeans_max_iters, state.cfg.kmeans_tol, state.cfg.seed};
  Codebook cb = build_codebook(features, state.cfg.codebook_k, opts);
  return {std::move(bank), std::move(cb)};
}

template <typename T>
EpochMetrics train_epoch(TrainState<T>& state, MemoryBank& bank, const Codebook& cb,
                         const Dataset& ds) {
  check_dataset(state, ds);
  if (ds.slides.empty()) throw DataError("training needs at least one slide");
  if (cb.dim() != state.enc_cfg.feature_dim)
    throw DimensionError("codebook dimension " + std::to_string(cb.dim()) +
                         " does not match feature dim " +
                         std::to_string(state.enc_cfg.feature_dim));
  if (cb.k() != state.head_cfg.k)
    throw DimensionError("codebook has " + std::to_string(cb.k()) +
                         " clusters, slide head expects " + std::to_string(state.head_cfg.k));

  auto t0 = std::chrono::steady_clock::now();
  set_frozen(state.encoder, state.epoch < state.cfg.freeze_epochs);
  const int stage = state.stage();

  std::vector<int> order = all_rows(ds.slides.size());
  state.rng.shuffle(order);

  const int64_t t_dim = state.head_cfg.report_dim;
  const int64_t C = state.head_cfg.num_classes;
  VladOptions vopts{state.cfg.intra_normalize};

  double sum_total = 0.0, sum_cls = 0.0, sum_con = 0.0;
  size_t n_seen = 0;

  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(state.cfg.batch_size)) {
    size_t m = std::min(order.size() - start, static_cast<size_t>(state.cfg.batch_size));

    Graph<T> g;
    Binding<T> binding;
    EncoderVars<T> enc_vars = bind_encoder(g, state.encoder, &binding);
    SlideHeadVars<T> head_vars = bind_slide_head(g, state.head, &binding);
    TempVars<T> temp_vars = bind_temperatures(g, state.temps, &binding);

    std::vector<Var> logit_rows, proj_rows;
    std::vector<int> targets;
    std::vector<bool> mask;
    Tensor<T> reports = Tensor<T>::zeros({static_cast<int64_t>(m), t_dim});
    std::vector<MemoryBank::Update> updates;

    for (size_t bi = 0; bi < m; ++bi) {
      size_t si = static_cast<size_t>(order[start + bi]);
      const Dataset::Slide& slide = ds.slides[si];
      auto tiles = ds.tiles(si);
      int n = static_cast<int>(tiles.size());

      std::vector<int> sampled =
          state.rng.sample_without_replacement(n, state.cfg.tiles_per_slide);
      Var fresh_in = g.constant(
          tiles_tensor<T>(tiles, sampled, state.enc_cfg.input_dim, slide.id));
      Var fresh_feat = encode(g, enc_vars, state.enc_cfg, fresh_in);

      std::vector<int> bank_tiles = bank.tile_indices(slide.id);
      std::vector<std::vector<float>> bank_feats = bank.get_slide(slide.id);
      std::vector<int> stale_tiles;
      std::vector<std::vector<T>> stale_feats;
      for (size_t j = 0; j < bank_tiles.size(); ++j) {
        if (std::binary_search(sampled.begin(), sampled.end(), bank_tiles[j])) continue;
        stale_tiles.push_back(bank_tiles[j]);
        std::vector<T> f(bank_feats[j].size(), T(0));
        for (size_t q = 0; q < f.size(); ++q) f[q] = static_cast<T>(bank_feats[j][q]);
        stale_feats.push_back(std::move(f));
      }

      VladResult<T> vr =
          encode_slide<T>(g, cb, fresh_feat, sampled, stale_tiles, stale_feats, vopts);
      SlideEmbed emb = enhance(g, head_vars, state.head_cfg, vr.flat);
      logit_rows.push_back(classify(g, head_vars, state.head_cfg, emb.h));
      proj_rows.push_back(emb.h_proj);
      targets.push_back(slide.label);
      mask.push_back(slide.report.present);
      if (slide.report.present)
        for (int64_t j = 0; j < t_dim; ++j)
          reports.data[bi * static_cast<size_t>(t_dim) + static_cast<size_t>(j)] =
              static_cast<T>(slide.report.t[static_cast<size_t>(j)]);

      const Tensor<T>& fv = g.value(fresh_feat);
      size_t d = static_cast<size_t>(state.enc_cfg.feature_dim);
      for (size_t t = 0; t < sampled.size(); ++t) {
        std::vector<float> row(d, 0.0f);
        for (size_t j = 0; j < d; ++j) row[j] = static_cast<float>(fv.data[t * d + j]);
        updates.push_back({slide.id, sampled[t], std::move(row)});
      }
    }

    Var logits = g.reshape(g.concat(logit_rows), {static_cast<int64_t>(m), C});
    Var l_cls = g.cross_entropy_rows(logits, targets);
    Var v_mat = g.reshape(g.concat(proj_rows), {static_cast<int64_t>(m), t_dim});
    SimilarityPair sims =
        similarity_matrices(g, v_mat, g.constant(reports), temp_vars);
    Var l_con = contrastive_loss(g, sims, mask, state.cfg.keep_masked_negatives);
    Var total = g.add(l_cls, g.scale(l_con, static_cast<T>(state.cfg.loss_weight)));

    bank.replace_batch(updates);
    g.backward(total);

    for (const auto& slot : binding.slots) {
      if (!slot.trainable) continue;
      bool decay = slot.name.rfind("temp.", 0) != 0;
      state.adam.step(slot.name, *slot.tensor, g.grad(slot.var), decay);
    }

    double w = static_cast<double>(m);
    sum_total += static_cast<double>(g.value(total).data[0]) * w;
    sum_cls += static_cast<double>(g.value(l_cls).data[0]) * w;
    sum_con += static_cast<double>(g.value(l_con).data[0]) * w;
    n_seen += m;
  }

  EpochMetrics em;
  em.epoch = state.epoch;
  em.stage = stage;
  em.loss_total = sum_total / static_cast<double>(n_seen);
  em.loss_cls = sum_cls / static_cast<double>(n_seen);
  em.loss_contrastive = sum_con / static_cast<double>(n_seen);
  em.sigma1 = std::exp(static_cast<double>(state.temps.log_sigma1.data[0]));
  em.sigma2 = std::exp(static_cast<double>(state.temps.log_sigma2.data[0]));
  em.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  state.epoch += 1;
  return em;
}

template <typename T>
std::vector<EpochMetrics> train_epochs(
    TrainState<T>& state, MemoryBank& bank, const Codebook& cb, const Dataset& ds,
    int epochs, const std::function<void(const EpochMetrics&)>& on_epoch) {
  std::vector<EpochMetrics> out;
  out.reserve(static_cast<size_t>(std::max(epochs, 0)));
  for (int e = 0; e < epochs; ++e) {
    out.push_back(train_epoch(state, bank, cb, ds));
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

template <typename T>
EvalResult evaluate(const TrainState<T>& state, const Codebook& cb, const Dataset& ds) {
  check_dataset(state, ds);
  const int64_t C = state.head_cfg.num_classes;
  VladOptions vopts{state.cfg.intra_normalize};

  EvalResult res;
  res.confusion.assign(static_cast<size_t>(C), std::vector<int64_t>(static_cast<size_t>(C), 0));
  std::vector<std::vector<double>> class_scores(
      static_cast<size_t>(C), std::vector<double>(ds.slides.size(), 0.0));
  std::vector<int> labels;

  for (size_t i = 0; i < ds.slides.size(); ++i) {
    auto tiles = ds.tiles(i);
    Graph<T> g;
    Var in = g.constant(tiles_tensor<T>(tiles, all_rows(tiles.size()),
                                        state.enc_cfg.input_dim, ds.slides[i].id));
    Var feat = encode(g, state.encoder, state.enc_cfg, in);
    VladResult<T> vr = encode_slide<T>(g, cb, feat, all_rows(tiles.size()), {}, {}, vopts);
    SlideHeadVars<T> head_vars = bind_slide_head(g, state.head);
    SlideEmbed emb = enhance(g, head_vars, state.head_cfg, vr.flat);
    Var logits = classify(g, head_vars, state.head_cfg, emb.h);

    const Tensor<T>& lv = g.value(logits);
    double mx = -HUGE_VAL;
    for (int64_t c = 0; c < C; ++c)
      mx = std::max(mx, static_cast<double>(lv.data[static_cast<size_t>(c)]));
    std::vector<double> p(static_cast<size_t>(C), 0.0);
    double z = 0.0;
    for (int64_t c = 0; c < C; ++c) {
      p[static_cast<size_t>(c)] =
          std::exp(static_cast<double>(lv.data[static_cast<size_t>(c)]) - mx);
      z += p[static_cast<size_t>(c)];
    }
    int pred = 0;
    for (int64_t c = 0; c < C; ++c) {
      p[static_cast<size_t>(c)] /= z;
      class_scores[static_cast<size_t>(c)][i] = p[static_cast<size_t>(c)];
      if (p[static_cast<size_t>(c)] > p[static_cast<size_t>(pred)]) pred = static_cast<int>(c);
    }

    int label = ds.slides[i].label;
    labels.push_back(label);
    res.confusion[static_cast<size_t>(label)][static_cast<size_t>(pred)] += 1;
    double score = C == 2 ? p[1] : p[static_cast<size_t>(pred)];
    res.per_slide.push_back({ds.slides[i].id, label, pred, score});
  }

  std::vector<int> preds;
  for (const auto& row : res.per_slide) preds.push_back(row.predicted);
  res.weighted_f1 = weighted_f1(preds, labels, static_cast<int>(C));
  res.auc = C == 2 ? roc_auc(class_scores[1], labels)
                   : macro_auc(class_scores, labels, static_cast<int>(C));
  return res;
}

// ---- checkpointing ----------------------------------------------------------

namespace {

constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> param_list(TrainState<T>& s) {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for_each_param<T>(s, [&](const std::string& name, Tensor<T>& t) {
    out.push_back({name, &t});
  });
  return out;
}

}  // namespace

template <typename T>
void save_checkpoint(TrainState<T>& state, const std::string& path,
                     const std::string& config_echo) {
  ByteWriter w;
  w.magic("DRSK");
  w.u32(kCheckpointVersion);
  w.u8(static_cast<uint8_t>(sizeof(T)));
  w.str64(config_echo);

  const EncoderConfig& ec = state.enc_cfg;
  w.u64(static_cast<uint64_t>(ec.input_dim));
  w.u32(static_cast<uint32_t>(ec.hidden_dims.size()));
  for (int64_t h : ec.hidden_dims) w.u64(static_cast<uint64_t>(h));
  w.u64(static_cast<uint64_t>(ec.feature_dim));
  w.u8(ec.activation == Activation::kGelu ? 1 : 0);

  const SlideHeadConfig& hc = state.head_cfg;
  w.u64(static_cast<uint64_t>(hc.k));
  w.u64(static_cast<uint64_t>(hc.d));
  w.u64(static_cast<uint64_t>(hc.report_dim));
  w.u64(static_cast<uint64_t>(hc.num_classes));
  w.u64(static_cast<uint64_t>(hc.n_layers));
  w.u64(static_cast<uint64_t>(hc.n_heads));
  w.u64(static_cast<uint64_t>(hc.ff_hidden));
  w.u64(static_cast<uint64_t>(hc.cls_hidden));

  const TrainConfig& tc = state.cfg;
  w.u32(static_cast<uint32_t>(tc.batch_size));
  w.u32(static_cast<uint32_t>(tc.tiles_per_slide));
  w.u32(static_cast<uint32_t>(tc.epochs));
  w.f64(tc.lr);
  w.f64(tc.weight_decay);
  w.u32(static_cast<uint32_t>(tc.freeze_epochs));
  w.f64(tc.loss_weight);
  w.u64(tc.seed);
  w.u32(static_cast<uint32_t>(tc.codebook_k));
  w.u32(static_cast<uint32_t>(tc.kmeans_max_iters));
  w.f64(tc.kmeans_tol);
  w.f64(tc.beta1);
  w.f64(tc.beta2);
  w.f64(tc.adam_eps);
  w.u8(tc.keep_masked_negatives ? 1 : 0);
  w.u8(tc.intra_normalize ? 1 : 0);

  w.u32(static_cast<uint32_t>(state.epoch));
  w.u32(static_cast<uint32_t>(state.stage()));
  w.str64(state.rng.save_state());

  auto params = param_list(state);
  w.u32(static_cast<uint32_t>(params.size()));
  for (auto& [name, t] : params) {
    w.str32(name);
    w.u8(static_cast<uint8_t>(t->shape.size()));
    for (int64_t dim : t->shape) w.u64(static_cast<uint64_t>(dim));
    w.u8(t->requires_grad ? 1 : 0);
    w.scalar_array(t->data.data(), t->data.size());
    if (state.adam.has_slot(name)) {
      const auto& mo = state.adam.slots().at(name);
      w.u8(1);
      w.scalar_array(mo.m.data.data(), mo.m.data.size());
      w.scalar_array(mo.v.data.data(), mo.v.data.size());
      w.u64(mo.t);
    } else {
      w.u8(0);
    }
  }
  w.finish_with_crc();
  atomic_write_file(path, w.bytes());
}

template <typename T>
TrainState<T> load_checkpoint(const std::string& path, std::string* config_echo_out) {
  std::string file = read_file(path);
  ByteReader::check_crc(file, "checkpoint " + path);
  ByteReader r(ByteReader::payload_without_crc(file));
  r.expect_magic("DRSK", "checkpoint " + path);
  uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint " + path + " has unsupported version " +
                          std::to_string(version),
                      r.pos());
  uint8_t prec = r.u8();
  if (prec != sizeof(T))
    throw FormatError("checkpoint " + path + " stores " + std::to_string(prec) +
                          "-byte scalars, loader instantiated for " +
                          std::to_string(sizeof(T)) + "-byte",
                      r.pos());
  std::string echo = r.str64();
  if (config_echo_out) *config_echo_out = echo;

  EncoderConfig ec;
  ec.input_dim = static_cast<int64_t>(r.u64());
  uint32_t n_hidden = r.u32();
  ec.hidden_dims.clear();
  for (uint32_t i = 0; i < n_hidden; ++i)
    ec.hidden_dims.push_back(static_cast<int64_t>(r.u64()));
  ec.feature_dim = static_cast<int64_t>(r.u64());
  ec.activation = r.u8() == 1 ? Activation::kGelu : Activation::kRelu;

  SlideHeadConfig hc;
  hc.k = static_cast<int64_t>(r.u64());
  hc.d = static_cast<int64_t>(r.u64());
  hc.report_dim = static_cast<int64_t>(r.u64());
  hc.num_classes = static_cast<int64_t>(r.u64());
  hc.n_layers = static_cast<int64_t>(r.u64());
  hc.n_heads = static_cast<int64_t>(r.u64());
  hc.ff_hidden = static_cast<int64_t>(r.u64());
  hc.cls_hidden = static_cast<int64_t>(r.u64());

  TrainConfig tc;
  tc.batch_size = static_cast<int>(r.u32());
  tc.tiles_per_slide = static_cast<int>(r.u32());
  tc.epochs = static_cast<int>(r.u32());
  tc.lr = r.f64();
  tc.weight_decay = r.f64();
  tc.freeze_epochs = static_cast<int>(r.u32());
  tc.loss_weight = r.f64();
  tc.seed = r.u64();
  tc.codebook_k = static_cast<int>(r.u32());
  tc.kmeans_max_iters = static_cast<int>(r.u32());
  tc.kmeans_tol = r.f64();
  tc.beta1 = r.f64();
  tc.beta2 = r.f64();
  tc.adam_eps = r.f64();
  tc.keep_masked_negatives = r.u8() == 1;
  tc.intra_normalize = r.u8() == 1;

  TrainState<T> s = init_state<T>(ec, hc, tc);
  s.epoch = static_cast<int>(r.u32());
  uint32_t stage = r.u32();
  if (stage != 1 && stage != 2)
    throw FormatError("checkpoint " + path + " has invalid stage " + std::to_string(stage),
                      r.pos());
  s.rng.restore_state(r.str64());

  auto params = param_list(s);
  std::map<std::string, Tensor<T>*> by_name;
  for (auto& [name, t] : params) by_name[name] = t;

  uint32_t count = r.u32();
  if (count != params.size())
    throw FormatError("checkpoint " + path + " holds " + std::to_string(count) +
                          " parameters, configs imply " + std::to_string(params.size()),
                      r.pos());
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str32();
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw FormatError("checkpoint " + path + " names unknown or repeated parameter '" +
                            name + "'",
                        r.pos());
    Tensor<T>& t = *it->second;
    by_name.erase(it);
    uint8_t rank = r.u8();
    std::vector<int64_t> shape;
    for (uint8_t j = 0; j < rank; ++j) shape.push_back(static_cast<int64_t>(r.u64()));
    if (shape != t.shape)
      throw FormatError("checkpoint parameter '" + name + "' has unexpected shape",
                        r.pos());
    t.requires_grad = r.u8() == 1;
    r.scalar_array(t.data.data(), t.data.size());
    if (r.u8() == 1) {
      typename Adam<T>::Moments mo;
      mo.m = Tensor<T>::zeros(t.shape);
      mo.v = Tensor<T>::zeros(t.shape);
      r.scalar_array(mo.m.data.data(), mo.m.data.size());
      r.scalar_array(mo.v.data.data(), mo.v.data.size());
      mo.t = r.u64();
      s.adam.restore_slot(name, std::move(mo));
    }
  }
  if (!r.at_end())
    throw FormatError("checkpoint " + path + " has trailing bytes", r.pos());

  s.encoder.frozen = !s.encoder.weights.empty() && !s.encoder.weights[0].requires_grad;
  return s;
}

int checkpoint_precision(const std::string& path) {
  std::string file = read_file(path);
  ByteReader::check_crc(file, "checkpoint " + path);
  ByteReader r(ByteReader::payload_without_crc(file));
  r.expect_magic("DRSK", "checkpoint " + path);
  r.u32();
  return static_cast<int>(r.u8());
}

template void for_each_param<float>(TrainState<float>&,
                                    const std::function<void(const std::string&, Tensor<float>&)>&);
template void for_each_param<double>(TrainState<double>&,
                                     const std::function<void(const std::string&, Tensor<double>&)>&);
template TrainState<float> init_state<float>(const EncoderConfig&, const SlideHeadConfig&,
                                             const TrainConfig&);
template TrainState<double> init_state<double>(const EncoderConfig&, const SlideHeadConfig&,
                                               const TrainConfig&);
template std::pair<MemoryBank, Codebook> prepare<float>(const TrainState<float>&, const Dataset&);
template std::pair<MemoryBank, Codebook> prepare<double>(const TrainState<double>&, const Dataset&);
template EpochMetrics train_epoch<float>(TrainState<float>&, MemoryBank&, const Codebook&,
                                         const Dataset&);
template EpochMetrics train_epoch<double>(TrainState<double>&, MemoryBank&, const Codebook&,
                                          const Dataset&);
template std::vector<EpochMetrics> train_epochs<float>(
    TrainState<float>&, MemoryBank&, const Codebook&, const Dataset&, int,
    const std::function<void(const EpochMetrics&)>&);
template std::vector<EpochMetrics> train_epochs<double>(
    TrainState<double>&, MemoryBank&, const Codebook&, const Dataset&, int,
    const std::function<void(const EpochMetrics&)>&);
template EvalResult evaluate<float>(const TrainState<float>&, const Codebook&, const Dataset&);
template EvalResult evaluate<double>(const TrainState<double>&, const Codebook&, const Dataset&);
template void save_checkpoint<float>(TrainState<float>&, const std::string&, const std::string&);
template void save_checkpoint<double>(TrainState<double>&, const std::string&, const std::string&);
template TrainState<float> load_checkpoint<float>(const std::string&, std::string*);
template TrainState<double> load_checkpoint<double>(const std::string&, std::string*);

}  // namespace drsl
