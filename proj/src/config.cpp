#include "drsl/config.hpp"

#include <charconv>
#include <cstdint>
#include <functional>
#include <sstream>

#include "drsl/errors.hpp"
#include "drsl/io_util.hpp"

namespace drsl {

namespace {

int64_t parse_i64(const std::string& key, const std::string& v) {
  int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("config key " + key + ": '" + v + "' is not an integer");
  return out;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("config key " + key + ": '" + v + "' is not a non-negative integer");
  return out;
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + ": '" + v + "' is not a number");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("config key " + key + ": '" + v + "' is not true/false");
}

std::string fmt_f64(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

std::string fmt_dims(const std::vector<int64_t>& dims) {
  std::string out;
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(dims[i]);
  }
  return out;
}

std::vector<int64_t> parse_dims(const std::string& key, const std::string& v) {
  std::vector<int64_t> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(parse_i64(key, item));
  if (out.empty())
    throw UsageError("config key " + key + ": needs at least one dimension");
  return out;
}

struct KeyDef {
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"manifest", [](const RunConfig& c) { return c.manifest; },
       [](RunConfig& c, const std::string&, const std::string& v) { c.manifest = v; }},
      {"reports", [](const RunConfig& c) { return c.reports; },
       [](RunConfig& c, const std::string&, const std::string& v) { c.reports = v; }},
      {"out_dir", [](const RunConfig& c) { return c.out_dir; },
       [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"precision", [](const RunConfig& c) { return c.precision; },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "f32" && v != "f64")
           throw UsageError("config key " + k + ": '" + v + "' is not f32/f64");
         c.precision = v;
       }},
      {"input_dim", [](const RunConfig& c) { return std::to_string(c.input_dim); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.input_dim = parse_i64(k, v);
       }},
      {"hidden_dims", [](const RunConfig& c) { return fmt_dims(c.hidden_dims); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.hidden_dims = parse_dims(k, v);
       }},
      {"feature_dim", [](const RunConfig& c) { return std::to_string(c.feature_dim); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.feature_dim = parse_i64(k, v);
       }},
      {"activation", [](const RunConfig& c) { return c.activation; },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "gelu" && v != "relu")
           throw UsageError("config key " + k + ": '" + v + "' is not gelu/relu");
         c.activation = v;
       }},
      {"head_layers", [](const RunConfig& c) { return std::to_string(c.head_layers); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.head_layers = parse_i64(k, v);
       }},
      {"head_heads", [](const RunConfig& c) { return std::to_string(c.head_heads); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.head_heads = parse_i64(k, v);
       }},
      {"ff_hidden", [](const RunConfig& c) { return std::to_string(c.ff_hidden); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.ff_hidden = parse_i64(k, v);
       }},
      {"cls_hidden", [](const RunConfig& c) { return std::to_string(c.cls_hidden); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.cls_hidden = parse_i64(k, v);
       }},
      {"report_dim", [](const RunConfig& c) { return std::to_string(c.report_dim); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.report_dim = parse_i64(k, v);
       }},
      {"num_classes", [](const RunConfig& c) { return std::to_string(c.num_classes); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.num_classes = parse_i64(k, v);
       }},
      {"batch_size", [](const RunConfig& c) { return std::to_string(c.train.batch_size); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.batch_size = static_cast<int>(parse_i64(k, v));
       }},
      {"tiles_per_slide",
       [](const RunConfig& c) { return std::to_string(c.train.tiles_per_slide); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.tiles_per_slide = static_cast<int>(parse_i64(k, v));
       }},
      {"epochs", [](const RunConfig& c) { return std::to_string(c.train.epochs); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.epochs = static_cast<int>(parse_i64(k, v));
       }},
      {"lr", [](const RunConfig& c) { return fmt_f64(c.train.lr); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.lr = parse_f64(k, v);
       }},
      {"weight_decay", [](const RunConfig& c) { return fmt_f64(c.train.weight_decay); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.weight_decay = parse_f64(k, v);
       }},
      {"freeze_epochs",
       [](const RunConfig& c) { return std::to_string(c.train.freeze_epochs); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.freeze_epochs = static_cast<int>(parse_i64(k, v));
       }},
      {"loss_weight", [](const RunConfig& c) { return fmt_f64(c.train.loss_weight); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.loss_weight = parse_f64(k, v);
       }},
      {"seed", [](const RunConfig& c) { return std::to_string(c.train.seed); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.seed = parse_u64(k, v);
       }},
      {"codebook_k", [](const RunConfig& c) { return std::to_string(c.train.codebook_k); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.codebook_k = static_cast<int>(parse_i64(k, v));
       }},
      {"kmeans_max_iters",
       [](const RunConfig& c) { return std::to_string(c.train.kmeans_max_iters); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.kmeans_max_iters = static_cast<int>(parse_i64(k, v));
       }},
      {"kmeans_tol", [](const RunConfig& c) { return fmt_f64(c.train.kmeans_tol); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.kmeans_tol = parse_f64(k, v);
       }},
      {"beta1", [](const RunConfig& c) { return fmt_f64(c.train.beta1); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.beta1 = parse_f64(k, v);
       }},
      {"beta2", [](const RunConfig& c) { return fmt_f64(c.train.beta2); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.beta2 = parse_f64(k, v);
       }},
      {"adam_eps", [](const RunConfig& c) { return fmt_f64(c.train.adam_eps); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.adam_eps = parse_f64(k, v);
       }},
      {"keep_masked_negatives",
       [](const RunConfig& c) {
         return std::string(c.train.keep_masked_negatives ? "true" : "false");
       },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.keep_masked_negatives = parse_bool(k, v);
       }},
      {"intra_normalize",
       [](const RunConfig& c) {
         return std::string(c.train.intra_normalize ? "true" : "false");
       },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.intra_normalize = parse_bool(k, v);
       }},
  };
  return table;
}

const KeyDef& find_key(const std::string& key) {
  for (const auto& def : key_table())
    if (key == def.name) return def;
  throw UsageError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::validate() const {
  encoder_config(*this).validate();
  head_config(*this).validate();
  train.validate();
  if (head_config(*this).d != feature_dim || head_config(*this).k != train.codebook_k)
    throw ConfigError("internal config mapping mismatch");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& def : key_table()) out.push_back(def.name);
  return out;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, key, value);
}

std::string get_key(const RunConfig& cfg, const std::string& key) {
  return find_key(key).get(cfg);
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError(origin + " line " + std::to_string(line_no) +
                       ": expected `key = value`, got '" + t + "'");
    set_key(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw UsageError(std::string("config file: ") + e.what());
  }
  return parse_config_text(text, path);
}

std::string echo(const RunConfig& cfg) {
  std::string out;
  for (const auto& def : key_table()) {
    out += def.name;
    out += " = ";
    out += def.get(cfg);
    out += "\n";
  }
  return out;
}

EncoderConfig encoder_config(const RunConfig& cfg) {
  EncoderConfig ec;
  ec.input_dim = cfg.input_dim;
  ec.hidden_dims = cfg.hidden_dims;
  ec.feature_dim = cfg.feature_dim;
  ec.activation = parse_activation(cfg.activation);
  return ec;
}

SlideHeadConfig head_config(const RunConfig& cfg) {
  SlideHeadConfig hc;
  hc.k = cfg.train.codebook_k;
  hc.d = cfg.feature_dim;
  hc.report_dim = cfg.report_dim;
  hc.num_classes = cfg.num_classes;
  hc.n_layers = cfg.head_layers;
  hc.n_heads = cfg.head_heads;
  hc.ff_hidden = cfg.ff_hidden;
  hc.cls_hidden = cfg.cls_hidden;
  return hc;
}

}  // namespace drsl
