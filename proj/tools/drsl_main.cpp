#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "drsl/commands.hpp"
#include "drsl/config.hpp"
#include "drsl/errors.hpp"
#include "drsl/log.hpp"

namespace {

// every config key becomes a --flag override; the file value loads first
struct ConfigFlags {
  std::string config_path;
  struct Item {
    std::string key;
    std::shared_ptr<std::string> value;
    CLI::Option* opt;
  };
  std::vector<Item> items;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file");
    for (const auto& key : drsl::config_keys()) {
      Item item{key, std::make_shared<std::string>(), nullptr};
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      item.opt = cmd->add_option(flag, *item.value, "override config key " + key)
                     ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      items.push_back(std::move(item));
    }
  }

  drsl::RunConfig resolve() const {
    drsl::RunConfig cfg;
    if (!config_path.empty()) cfg = drsl::parse_config_file(config_path);
    for (const auto& item : items)
      if (item.opt->count() > 0) drsl::set_key(cfg, item.key, *item.value);
    return cfg;
  }

  bool given(const std::string& key) const {
    for (const auto& item : items)
      if (item.key == key) return item.opt->count() > 0;
    return false;
  }
};

// metrics sink: --log path wins over stdout
struct MetricsOut {
  std::ofstream file;
  std::ostream& open(const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::trunc);
    if (!file) throw drsl::IoError("cannot open log file: " + path);
    return file;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"residual-encoded slide classification pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "drsl 0.1.0");

  drsl::SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--classes", synth_args.spec.num_classes, "number of classes");
  synth->add_option("--slides-per-class", synth_args.spec.slides_per_class,
                    "slides per class");
  synth->add_option("--tiles-min", synth_args.spec.tiles_min, "minimum tiles per slide");
  synth->add_option("--tiles-max", synth_args.spec.tiles_max, "maximum tiles per slide");
  synth->add_option("--input-dim", synth_args.spec.input_dim, "tile vector dimension");
  synth->add_option("--signal-fraction", synth_args.spec.class_signal_fraction,
                    "fraction of tiles carrying the class signal, in (0,1]");
  synth->add_option("--noise", synth_args.spec.noise_scale, "tile noise scale");
  synth->add_option("--report-dim", synth_args.spec.report_dim,
                    "report embedding dimension");
  synth->add_option("--report-noise", synth_args.spec.report_noise, "report noise scale");
  synth->add_option("--seed", synth_args.spec.seed, "generator seed");
  synth->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth->add_option("--train-fraction", synth_args.train_fraction,
                    "also write stratified train/ and test/ subsets");

  ConfigFlags prepare_cfg, train_cfg, eval_cfg, encode_cfg;
  CLI::App* prepare =
      app.add_subcommand("prepare", "encode all tiles, fill the bank, fit the codebook");
  prepare_cfg.attach(prepare);

  CLI::App* train = app.add_subcommand("train", "train from prepared artifacts");
  train_cfg.attach(train);
  std::string train_log;
  train->add_option("--log", train_log, "write metrics JSON lines here instead of stdout");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  eval_cfg.attach(eval);
  std::string eval_log;
  eval->add_option("--log", eval_log, "write the result JSON line here instead of stdout");

  CLI::App* encode = app.add_subcommand("encode", "emit per-slide residual descriptors");
  encode_cfg.attach(encode);
  std::string encode_out;
  encode->add_option("--output", encode_out, "descriptor file path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      drsl::run_synth(synth_args);
    } else if (prepare->parsed()) {
      drsl::run_prepare(prepare_cfg.resolve());
    } else if (train->parsed()) {
      MetricsOut sink;
      drsl::run_train(train_cfg.resolve(), sink.open(train_log));
    } else if (eval->parsed()) {
      if (eval_cfg.given("seed"))
        drsl::log_info("warning: eval is deterministic; --seed is ignored");
      MetricsOut sink;
      drsl::run_eval(eval_cfg.resolve(), sink.open(eval_log));
    } else if (encode->parsed()) {
      drsl::run_encode(encode_cfg.resolve(), encode_out);
    }
  } catch (const drsl::UsageError& e) {
    drsl::log_error(e.what());
    return 2;
  } catch (const drsl::Error& e) {
    drsl::log_error(e.what());
    return 1;
  } catch (const std::exception& e) {
    drsl::log_error(e.what());
    return 1;
  }
  return 0;
}
