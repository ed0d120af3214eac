#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "drsl/data.hpp"
#include "drsl/io_util.hpp"
#include "drsl/vlad.hpp"

using namespace drsl;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

struct CliFixture {
  fs::path base;
  int run_counter = 0;

  CliFixture() : base(fs::temp_directory_path() / "drsl_cli_test") {
    fs::remove_all(base);
    fs::create_directories(base);
  }
  ~CliFixture() { fs::remove_all(base); }

  CmdResult run(const std::string& args) {
    fs::path out = base / ("stdout." + std::to_string(run_counter));
    fs::path err = base / ("stderr." + std::to_string(run_counter));
    ++run_counter;
    std::string cmd = std::string(DRSL_CLI_PATH) + " " + args + " >" + out.string() +
                      " 2>" + err.string();
    int rc = std::system(cmd.c_str());
    CmdResult res;
    res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    res.out = read_file(out.string());
    res.err = read_file(err.string());
    return res;
  }

  std::string p(const std::string& rel) const { return (base / rel).string(); }
};

std::vector<json> parse_lines(const std::string& text) {
  std::vector<json> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

const char* kSynthFlags =
    "--classes 2 --slides-per-class 4 --tiles-min 5 --tiles-max 7 --input-dim 6 "
    "--report-dim 4 --noise 0.2 --signal-fraction 0.5 --seed 11";

std::string model_flags(const CliFixture& f, const std::string& manifest,
                        const std::string& out_dir, int epochs) {
  return "--manifest " + f.p(manifest) + " --out-dir " + f.p(out_dir) +
         " --input-dim 6 --hidden-dims 8 --feature-dim 4 --codebook-k 4 "
         "--report-dim 4 --batch-size 4 --tiles-per-slide 3 --epochs " +
         std::to_string(epochs) + " --freeze-epochs 1 --lr 0.01 --seed 3";
}

}  // namespace

TEST_CASE("command line pipeline") {
  CliFixture f;

  auto synth = f.run(std::string("synth ") + kSynthFlags + " --out " + f.p("data") +
                     " --train-fraction 0.5");
  REQUIRE(synth.code == 0);
  REQUIRE(fs::exists(f.p("data/train/manifest.txt")));
  REQUIRE(fs::exists(f.p("data/test/manifest.txt")));

  SUBCASE("synth writes the requested number of slides") {
    Dataset ds = load_manifest(f.p("data/manifest.txt"));
    CHECK(ds.slides.size() == 8);
    Dataset tr = load_manifest(f.p("data/train/manifest.txt"));
    Dataset te = load_manifest(f.p("data/test/manifest.txt"));
    CHECK(tr.slides.size() == 4);
    CHECK(te.slides.size() == 4);
  }

  SUBCASE("synth is byte-reproducible") {
    auto again = f.run(std::string("synth ") + kSynthFlags + " --out " + f.p("data2"));
    REQUIRE(again.code == 0);
    CHECK(read_file(f.p("data/manifest.txt")) == read_file(f.p("data2/manifest.txt")));
    CHECK(read_file(f.p("data/reports.drst")) == read_file(f.p("data2/reports.drst")));
    CHECK(read_file(f.p("data/tiles/slide_0_000.drsb")) ==
          read_file(f.p("data2/tiles/slide_0_000.drsb")));
  }

  SUBCASE("usage errors exit with code 2") {
    CHECK(f.run("synth --out " + f.p("bad") + " --signal-fraction 1.5").code == 2);
    CHECK(f.run("synth --out " + f.p("bad") + " --signal-fraction 0").code == 2);
    CHECK(f.run("synth").code == 2);                             // missing --out
    CHECK(f.run("prepare --no-such-flag 1").code == 2);          // unknown flag
    CHECK(f.run("prepare --manifest " + f.p("data/manifest.txt") +
                " --activation tanh").code == 2);                // bad enum value
    CHECK(f.run("eval --out-dir " + f.p("nowhere")).code == 2);  // manifest missing
    CHECK(f.run("--help").code == 0);
  }

  SUBCASE("train before prepare fails and names the producing command") {
    auto res = f.run("train " + model_flags(f, "data/train/manifest.txt", "virgin", 3));
    CHECK(res.code == 1);
    CHECK(res.err.find("prepare") != std::string::npos);
    CHECK(res.err.find("bank.drsb") != std::string::npos);
  }

  SUBCASE("prepare, train, eval and encode complete end to end") {
    std::string flags = model_flags(f, "data/train/manifest.txt", "run", 3);
    auto prep = f.run("prepare " + flags);
    REQUIRE(prep.code == 0);
    CHECK(fs::exists(f.p("run/bank.drsb")));
    CHECK(fs::exists(f.p("run/codebook.drsc")));
    CHECK(fs::exists(f.p("run/config.txt")));

    auto train = f.run("train " + flags);
    REQUIRE(train.code == 0);
    auto rows = parse_lines(train.out);
    REQUIRE(rows.size() == 3);
    for (int e = 0; e < 3; ++e) {
      CHECK(rows[size_t(e)]["epoch"] == e);
      CHECK(rows[size_t(e)]["stage"] == (e < 1 ? 1 : 2));
      CHECK(rows[size_t(e)]["loss_total"].get<double>() > 0.0);
      CHECK(rows[size_t(e)].contains("sigma1"));
      CHECK(rows[size_t(e)].contains("wall_time_s"));
    }
    CHECK(fs::exists(f.p("run/checkpoint.drsk")));
    CHECK(fs::exists(f.p("run/bank_state.drsb")));

    std::string eval_flags = model_flags(f, "data/test/manifest.txt", "run", 3);
    auto eval = f.run("eval " + eval_flags);
    REQUIRE(eval.code == 0);
    auto res = parse_lines(eval.out);
    REQUIRE(res.size() == 1);
    double auc = res[0]["auc"].get<double>();
    CHECK(auc >= 0.0);
    CHECK(auc <= 1.0);
    CHECK(res[0]["confusion"].size() == 2);
    CHECK(res[0]["slides"].size() == 4);

    auto warn = f.run("eval " + eval_flags + " --seed 3");
    CHECK(warn.code == 0);
    CHECK(warn.err.find("ignored") != std::string::npos);

    auto enc = f.run("encode " + eval_flags + " --output " + f.p("run/test.drsv"));
    REQUIRE(enc.code == 0);
    auto descs = read_descriptors(f.p("run/test.drsv"));
    REQUIRE(descs.size() == 4);
    CHECK(descs[0].second.k == 4);
    CHECK(descs[0].second.d == 4);
    CHECK(descs[0].second.flat.size() == 16);

    // identical flags in a fresh out_dir reproduce the run: same loss
    // curve, same bank bytes (the checkpoint echoes its own out_dir, so
    // whole-file equality is covered by the library tests instead)
    std::string flags_b = model_flags(f, "data/train/manifest.txt", "run_b", 3);
    REQUIRE(f.run("prepare " + flags_b).code == 0);
    auto train_b = f.run("train " + flags_b);
    REQUIRE(train_b.code == 0);
    auto rows_b = parse_lines(train_b.out);
    REQUIRE(rows_b.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i]["loss_total"].get<double>() == rows_b[i]["loss_total"].get<double>());
      CHECK(rows[i]["sigma1"].get<double>() == rows_b[i]["sigma1"].get<double>());
    }
    CHECK(read_file(f.p("run/bank.drsb")) == read_file(f.p("run_b/bank.drsb")));
    CHECK(read_file(f.p("run/bank_state.drsb")) == read_file(f.p("run_b/bank_state.drsb")));
  }

  SUBCASE("interrupted training resumes the same loss curve") {
    std::string straight = model_flags(f, "data/train/manifest.txt", "straight", 4);
    REQUIRE(f.run("prepare " + straight).code == 0);
    auto full = f.run("train " + straight);
    REQUIRE(full.code == 0);
    auto full_rows = parse_lines(full.out);
    REQUIRE(full_rows.size() == 4);

    std::string part = model_flags(f, "data/train/manifest.txt", "part", 2);
    REQUIRE(f.run("prepare " + part).code == 0);
    auto first = f.run("train " + part);
    REQUIRE(first.code == 0);
    REQUIRE(parse_lines(first.out).size() == 2);

    auto second = f.run("train " + model_flags(f, "data/train/manifest.txt", "part", 4));
    REQUIRE(second.code == 0);
    CHECK(second.err.find("resuming") != std::string::npos);
    auto tail = parse_lines(second.out);
    REQUIRE(tail.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
      const json& a = tail[i];
      const json& b = full_rows[i + 2];
      CHECK(a["epoch"] == b["epoch"]);
      CHECK(a["loss_total"].get<double>() == b["loss_total"].get<double>());
      CHECK(a["loss_cls"].get<double>() == b["loss_cls"].get<double>());
      CHECK(a["loss_contrastive"].get<double>() == b["loss_contrastive"].get<double>());
    }

    // changing anything but epochs refuses to resume
    auto clash = f.run("train " + model_flags(f, "data/train/manifest.txt", "part", 6) +
                       " --lr 0.005");
    CHECK(clash.code == 1);
    CHECK(clash.err.find("config") != std::string::npos);
  }

  SUBCASE("config file values load and flags override them") {
    std::string cfg_path = f.p("run.cfg");
    atomic_write_file(cfg_path,
                      "# experiment\n"
                      "manifest = " + f.p("data/train/manifest.txt") + "\n"
                      "out_dir = " + f.p("run_cfg") + "\n"
                      "input_dim = 6\nhidden_dims = 8\nfeature_dim = 4\n"
                      "codebook_k = 4\nreport_dim = 4\nbatch_size = 4\n"
                      "tiles_per_slide = 3\nepochs = 2\nfreeze_epochs = 1\n"
                      "lr = 0.5\nseed = 3\n");
    auto prep = f.run("prepare --config " + cfg_path + " --lr 0.01");
    REQUIRE(prep.code == 0);
    std::string echoed = read_file(f.p("run_cfg/config.txt"));
    CHECK(echoed.find("lr = 0.01\n") != std::string::npos);
    CHECK(echoed.find("lr = 0.5") == std::string::npos);

    // the echoed config is itself a runnable config file
    auto redo = f.run("prepare --config " + f.p("run_cfg/config.txt") + " --out-dir " +
                      f.p("run_cfg2"));
    REQUIRE(redo.code == 0);
    CHECK(read_file(f.p("run_cfg/bank.drsb")) == read_file(f.p("run_cfg2/bank.drsb")));
    CHECK(read_file(f.p("run_cfg/codebook.drsc")) ==
          read_file(f.p("run_cfg2/codebook.drsc")));

    CHECK(f.run("prepare --config " + f.p("missing.cfg")).code == 2);
    atomic_write_file(f.p("bad.cfg"), "no_such_key = 1\n");
    CHECK(f.run("prepare --config " + f.p("bad.cfg")).code == 2);
  }
}
