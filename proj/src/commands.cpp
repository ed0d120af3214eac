#include "drsl/commands.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "drsl/errors.hpp"
#include "drsl/graph.hpp"
#include "drsl/io_util.hpp"
#include "drsl/log.hpp"
#include "drsl/trainer.hpp"
#include "drsl/vlad.hpp"

namespace drsl {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string bank_path(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / "bank.drsb").string();
}
std::string bank_state_path(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / "bank_state.drsb").string();
}
std::string codebook_path(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / "codebook.drsc").string();
}
std::string checkpoint_path(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / "checkpoint.drsk").string();
}
std::string config_echo_path(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / "config.txt").string();
}

namespace {

// operator-supplied values that fail validation are usage errors, not
// runtime errors; data-dependent ConfigErrors later keep exit code 1
void validate_as_usage(const RunConfig& cfg) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

void require_manifest(const RunConfig& cfg) {
  if (cfg.manifest.empty())
    throw UsageError("no manifest given; pass --manifest or set it in the config file");
}

Dataset load_dataset(const RunConfig& cfg) {
  require_manifest(cfg);
  return load_manifest(cfg.manifest, cfg.reports);
}

void require_artifact(const std::string& path, const std::string& command,
                      const std::string& producer) {
  if (!fs::exists(path))
    throw DataError(command + " needs " + path + "; run the " + producer +
                    " command for this out_dir first");
}

// the run-length knob may differ between runs of one experiment
std::string echo_without_epochs(const std::string& echo_text) {
  std::istringstream in(echo_text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("epochs = ", 0) == 0) continue;
    out += line;
    out += "\n";
  }
  return out;
}

json metrics_json(const EpochMetrics& em) {
  return json{{"epoch", em.epoch},
              {"stage", em.stage},
              {"loss_total", em.loss_total},
              {"loss_cls", em.loss_cls},
              {"loss_contrastive", em.loss_contrastive},
              {"sigma1", em.sigma1},
              {"sigma2", em.sigma2},
              {"wall_time_s", em.wall_time_s}};
}

template <typename T>
void run_prepare_t(const RunConfig& cfg, const Dataset& ds) {
  TrainState<T> state = init_state<T>(encoder_config(cfg), head_config(cfg), cfg.train);
  auto [bank, cb] = prepare(state, ds);
  fs::create_directories(cfg.out_dir);
  bank.save(bank_path(cfg));
  cb.save(codebook_path(cfg));
  atomic_write_file(config_echo_path(cfg), echo(cfg));
  size_t tiles = 0;
  for (const auto& s : ds.slides) tiles += static_cast<size_t>(s.tile_count);
  log_info("prepared " + std::to_string(ds.slides.size()) + " slides (" +
           std::to_string(tiles) + " tiles), codebook k=" + std::to_string(cb.k()) +
           " after " + std::to_string(cb.iters_run()) + " iterations");
}

template <typename T>
void run_train_t(const RunConfig& cfg, const Dataset& ds, std::ostream& out) {
  std::string ckpt = checkpoint_path(cfg);
  std::optional<TrainState<T>> state;
  std::optional<MemoryBank> bank;

  if (fs::exists(ckpt)) {
    if (checkpoint_precision(ckpt) != static_cast<int>(sizeof(T)))
      throw ConfigError("checkpoint " + ckpt + " was written at a different precision; "
                        "match the config or clear the out_dir");
    std::string stored_echo;
    state.emplace(load_checkpoint<T>(ckpt, &stored_echo));
    if (echo_without_epochs(stored_echo) != echo_without_epochs(echo(cfg)))
      throw ConfigError("resolved config differs from the one stored in " + ckpt +
                        "; match it (epochs may change) or clear the out_dir");
    require_artifact(bank_state_path(cfg), "resuming train", "train");
    bank.emplace(MemoryBank::load(bank_state_path(cfg)));
    log_info("resuming from " + ckpt + " at epoch " + std::to_string(state->epoch));
  } else {
    state.emplace(init_state<T>(encoder_config(cfg), head_config(cfg), cfg.train));
    bank.emplace(MemoryBank::load(bank_path(cfg)));
  }

  Codebook cb = Codebook::load(codebook_path(cfg));
  if (state->epoch >= cfg.train.epochs) {
    log_info("checkpoint already trained to epoch " + std::to_string(state->epoch) +
             "; nothing to do");
    return;
  }

  atomic_write_file(config_echo_path(cfg), echo(cfg));
  while (state->epoch < cfg.train.epochs) {
    EpochMetrics em = train_epoch(*state, *bank, cb, ds);
    out << metrics_json(em).dump() << "\n";
    out.flush();
    bank->save(bank_state_path(cfg));
    save_checkpoint(*state, ckpt, echo(cfg));
    log_debug("epoch " + std::to_string(em.epoch) + " saved");
  }
  log_info("trained to epoch " + std::to_string(state->epoch) + ", checkpoint at " + ckpt);
}

template <typename T>
void run_eval_t(const RunConfig& cfg, const Dataset& ds, std::ostream& out) {
  TrainState<T> state = load_checkpoint<T>(checkpoint_path(cfg));
  Codebook cb = Codebook::load(codebook_path(cfg));
  EvalResult res = evaluate(state, cb, ds);

  json slides = json::array();
  for (const auto& p : res.per_slide)
    slides.push_back(json{{"id", p.id},
                          {"label", p.label},
                          {"predicted", p.predicted},
                          {"score", p.score}});
  json line{{"auc", res.auc},
            {"weighted_f1", res.weighted_f1},
            {"confusion", res.confusion},
            {"slides", std::move(slides)}};
  out << line.dump() << "\n";
  out.flush();
}

template <typename T>
void run_encode_t(const RunConfig& cfg, const Dataset& ds, const std::string& output) {
  TrainState<T> state = load_checkpoint<T>(checkpoint_path(cfg));
  Codebook cb = Codebook::load(codebook_path(cfg));
  if (ds.input_dim != state.enc_cfg.input_dim)
    throw DimensionError("dataset tiles have dimension " + std::to_string(ds.input_dim) +
                         ", encoder expects " + std::to_string(state.enc_cfg.input_dim));

  VladOptions vopts{state.cfg.intra_normalize};
  std::vector<std::pair<std::string, VladDescriptor>> rows;
  for (size_t i = 0; i < ds.slides.size(); ++i) {
    auto tiles = ds.tiles(i);
    Graph<T> g;
    Tensor<T> in = Tensor<T>::zeros({static_cast<int64_t>(tiles.size()), ds.input_dim});
    for (size_t t = 0; t < tiles.size(); ++t)
      for (int64_t j = 0; j < ds.input_dim; ++j)
        in.data[t * static_cast<size_t>(ds.input_dim) + static_cast<size_t>(j)] =
            static_cast<T>(tiles[t][static_cast<size_t>(j)]);
    Var feat = encode(g, state.encoder, state.enc_cfg, g.constant(in));
    std::vector<int> all(tiles.size(), 0);
    for (size_t t = 0; t < tiles.size(); ++t) all[t] = static_cast<int>(t);
    VladResult<T> vr = encode_slide<T>(g, cb, feat, all, {}, {}, vopts);

    const Tensor<T>& fv = g.value(vr.flat);
    VladDescriptor desc;
    desc.k = cb.k();
    desc.d = cb.dim();
    desc.flat.resize(fv.data.size());
    for (size_t j = 0; j < fv.data.size(); ++j)
      desc.flat[j] = static_cast<float>(fv.data[j]);
    rows.push_back({ds.slides[i].id, std::move(desc)});
  }
  fs::path parent = fs::path(output).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_descriptors(output, rows);
  log_info("wrote " + std::to_string(rows.size()) + " descriptors to " + output);
}

}  // namespace

void run_synth(const SynthArgs& args) {
  if (args.out_dir.empty()) throw UsageError("synth needs --out <dir>");
  try {
    args.spec.validate();
    if (args.train_fraction != 0.0 &&
        !(args.train_fraction > 0.0 && args.train_fraction < 1.0))
      throw ConfigError("train fraction must lie strictly between 0 and 1");
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  Dataset ds = generate(args.spec);
  write_dataset(ds, args.out_dir);
  log_info("wrote " + std::to_string(ds.slides.size()) + " slides to " + args.out_dir);
  if (args.train_fraction > 0.0) {
    auto [train_ds, test_ds] = split(ds, args.train_fraction, args.spec.seed);
    write_dataset(train_ds, (fs::path(args.out_dir) / "train").string());
    write_dataset(test_ds, (fs::path(args.out_dir) / "test").string());
    log_info("split " + std::to_string(train_ds.slides.size()) + "/" +
             std::to_string(test_ds.slides.size()) + " into train/ and test/");
  }
}

void run_prepare(const RunConfig& cfg) {
  validate_as_usage(cfg);
  Dataset ds = load_dataset(cfg);
  if (cfg.precision == "f32")
    run_prepare_t<float>(cfg, ds);
  else
    run_prepare_t<double>(cfg, ds);
}

void run_train(const RunConfig& cfg, std::ostream& out) {
  validate_as_usage(cfg);
  Dataset ds = load_dataset(cfg);
  require_artifact(bank_path(cfg), "train", "prepare");
  require_artifact(codebook_path(cfg), "train", "prepare");
  if (cfg.precision == "f32")
    run_train_t<float>(cfg, ds, out);
  else
    run_train_t<double>(cfg, ds, out);
}

void run_eval(const RunConfig& cfg, std::ostream& out) {
  validate_as_usage(cfg);
  Dataset ds = load_dataset(cfg);
  require_artifact(checkpoint_path(cfg), "eval", "train");
  require_artifact(codebook_path(cfg), "eval", "prepare");
  if (checkpoint_precision(checkpoint_path(cfg)) == 4)
    run_eval_t<float>(cfg, ds, out);
  else
    run_eval_t<double>(cfg, ds, out);
}

void run_encode(const RunConfig& cfg, const std::string& output_path) {
  validate_as_usage(cfg);
  Dataset ds = load_dataset(cfg);
  require_artifact(checkpoint_path(cfg), "encode", "train");
  require_artifact(codebook_path(cfg), "encode", "prepare");
  std::string output = output_path.empty()
                           ? (fs::path(cfg.out_dir) / "descriptors.drsv").string()
                           : output_path;
  if (checkpoint_precision(checkpoint_path(cfg)) == 4)
    run_encode_t<float>(cfg, ds, output);
  else
    run_encode_t<double>(cfg, ds, output);
}

}  // namespace drsl
