#include "srlab/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "srlab/errors.hpp"

namespace srlab {

namespace {

namespace pt = boost::property_tree;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view what, std::string_view value) {
  throw ConfigError(fmt::format("{}: expected {}, got '{}'", key, what, value));
}

double to_double(std::string_view key, std::string_view v) {
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, "a number", v);
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  v = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, "a non-negative integer", v);
  }
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(to_uint(key, v));
}

bool to_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, "true or false", v);
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view key, std::string_view v, F&& item) {
  std::vector<T> out;
  v = trim(v);
  if (v.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = v.find(',', start);
    out.push_back(item(key, v.substr(start, comma == std::string_view::npos ? v.size() - start
                                                                            : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename F>
auto named(std::string_view key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

std::string num(double v) { return fmt::format("{}", v); }
std::string flag(bool v) { return v ? "true" : "false"; }

struct Field {
  const char* section;
  const char* key;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  using K = std::string_view;
  static const std::vector<Field> table = {
      {"dataset", "source",
       [](C& c, K k, K v) {
         if (trim(v) == "synthetic") {
           c.dataset.source = DatasetSource::Synthetic;
         } else if (trim(v) == "file") {
           c.dataset.source = DatasetSource::File;
         } else {
           bad_value(k, "synthetic or file", v);
         }
       },
       [](const C& c) {
         return std::string(c.dataset.source == DatasetSource::File ? "file" : "synthetic");
       }},
      {"dataset", "path", [](C& c, K, K v) { c.dataset.path = std::string(trim(v)); },
       [](const C& c) { return c.dataset.path.string(); }},
      {"dataset", "n", [](C& c, K k, K v) { c.dataset.synthetic.n = to_size(k, v); },
       [](const C& c) { return std::to_string(c.dataset.synthetic.n); }},
      {"dataset", "dim", [](C& c, K k, K v) { c.dataset.synthetic.dim = to_size(k, v); },
       [](const C& c) { return std::to_string(c.dataset.synthetic.dim); }},
      {"dataset", "classes", [](C& c, K k, K v) { c.dataset.synthetic.classes = to_size(k, v); },
       [](const C& c) { return std::to_string(c.dataset.synthetic.classes); }},
      {"dataset", "flip_prob",
       [](C& c, K k, K v) { c.dataset.synthetic.flip_prob = to_double(k, v); },
       [](const C& c) { return num(c.dataset.synthetic.flip_prob); }},
      {"dataset", "seed", [](C& c, K k, K v) { c.dataset.synthetic.seed = to_uint(k, v); },
       [](const C& c) { return std::to_string(c.dataset.synthetic.seed); }},

      {"model", "hidden",
       [](C& c, K k, K v) { c.model.hidden = to_list<std::size_t>(k, v, to_size); },
       [](const C& c) { return fmt::format("{}", fmt::join(c.model.hidden, ", ")); }},
      {"model", "activation",
       [](C& c, K k, K v) { c.model.activation = named(k, [&] { return parse_activation(trim(v)); }); },
       [](const C& c) { return to_string(c.model.activation); }},
      {"model", "dropout", [](C& c, K k, K v) { c.model.dropout = to_double(k, v); },
       [](const C& c) { return num(c.model.dropout); }},
      {"model", "head",
       [](C& c, K k, K v) { c.model.head = named(k, [&] { return parse_head_design(trim(v)); }); },
       [](const C& c) { return to_string(c.model.head); }},

      {"srcm", "r1", [](C& c, K k, K v) { c.srcm.r1 = to_double(k, v); },
       [](const C& c) { return num(c.srcm.r1); }},
      {"srcm", "d", [](C& c, K k, K v) { c.srcm.d = to_double(k, v); },
       [](const C& c) { return num(c.srcm.d); }},
      {"srcm", "all_on", [](C& c, K k, K v) { c.srcm.all_on = to_bool(k, v); },
       [](const C& c) { return flag(c.srcm.all_on); }},
      {"srcm", "hidden_width", [](C& c, K k, K v) { c.srcm.hidden_width = to_size(k, v); },
       [](const C& c) { return std::to_string(c.srcm.hidden_width); }},

      {"defense", "kind",
       [](C& c, K k, K v) { c.defense.kind = named(k, [&] { return parse_defense_kind(trim(v)); }); },
       [](const C& c) { return to_string(c.defense.kind); }},
      {"defense", "epsilon", [](C& c, K k, K v) { c.defense.epsilon = to_double(k, v); },
       [](const C& c) { return num(c.defense.epsilon); }},
      {"defense", "beta", [](C& c, K k, K v) { c.defense.beta = to_double(k, v); },
       [](const C& c) { return num(c.defense.beta); }},
      {"defense", "patience", [](C& c, K k, K v) { c.defense.patience = to_size(k, v); },
       [](const C& c) { return std::to_string(c.defense.patience); }},
      {"defense", "min_delta", [](C& c, K k, K v) { c.defense.min_delta = to_double(k, v); },
       [](const C& c) { return num(c.defense.min_delta); }},
      {"defense", "holdout",
       [](C& c, K k, K v) { c.defense.holdout_fraction = to_double(k, v); },
       [](const C& c) { return num(c.defense.holdout_fraction); }},

      {"optimizer", "lr", [](C& c, K k, K v) { c.optimizer.learning_rate = to_double(k, v); },
       [](const C& c) { return num(c.optimizer.learning_rate); }},
      {"optimizer", "momentum", [](C& c, K k, K v) { c.optimizer.momentum = to_double(k, v); },
       [](const C& c) { return num(c.optimizer.momentum); }},
      {"optimizer", "weight_decay",
       [](C& c, K k, K v) { c.optimizer.weight_decay = to_double(k, v); },
       [](const C& c) { return num(c.optimizer.weight_decay); }},
      {"optimizer", "epochs", [](C& c, K k, K v) { c.optimizer.epochs = to_size(k, v); },
       [](const C& c) { return std::to_string(c.optimizer.epochs); }},
      {"optimizer", "batch_size", [](C& c, K k, K v) { c.optimizer.batch_size = to_size(k, v); },
       [](const C& c) { return std::to_string(c.optimizer.batch_size); }},
      {"optimizer", "schedule",
       [](C& c, K k, K v) {
         c.optimizer.schedule = named(k, [&] { return parse_lr_schedule(trim(v)); });
       },
       [](const C& c) { return to_string(c.optimizer.schedule); }},

      {"run", "seed", [](C& c, K k, K v) { c.run.seed = to_uint(k, v); },
       [](const C& c) { return std::to_string(c.run.seed); }},
      {"run", "repeat", [](C& c, K k, K v) { c.run.repeat = to_size(k, v); },
       [](const C& c) { return std::to_string(c.run.repeat); }},
      {"run", "out_dir", [](C& c, K, K v) { c.run.out_dir = std::string(trim(v)); },
       [](const C& c) { return c.run.out_dir.string(); }},
      {"run", "r1_grid", [](C& c, K k, K v) { c.run.r1_grid = to_list<double>(k, v, to_double); },
       [](const C& c) { return fmt::format("{}", fmt::join(c.run.r1_grid, ", ")); }},
      {"run", "d_grid", [](C& c, K k, K v) { c.run.d_grid = to_list<double>(k, v, to_double); },
       [](const C& c) { return fmt::format("{}", fmt::join(c.run.d_grid, ", ")); }},
      {"run", "magnitude_bins", [](C& c, K k, K v) { c.run.magnitude_bins = to_size(k, v); },
       [](const C& c) { return std::to_string(c.run.magnitude_bins); }},
      {"run", "margin_bins", [](C& c, K k, K v) { c.run.margin_bins = to_size(k, v); },
       [](const C& c) { return std::to_string(c.run.margin_bins); }},
      {"run", "save_models", [](C& c, K k, K v) { c.run.save_models = to_bool(k, v); },
       [](const C& c) { return flag(c.run.save_models); }},
      {"run", "per_class_offsets",
       [](C& c, K k, K v) { c.run.per_class_offsets = to_bool(k, v); },
       [](const C& c) { return flag(c.run.per_class_offsets); }},
      {"run", "attack_epochs", [](C& c, K k, K v) { c.run.attacker.epochs = to_size(k, v); },
       [](const C& c) { return std::to_string(c.run.attacker.epochs); }},
      {"run", "attack_batch_size",
       [](C& c, K k, K v) { c.run.attacker.batch_size = to_size(k, v); },
       [](const C& c) { return std::to_string(c.run.attacker.batch_size); }},
      {"run", "attack_lr", [](C& c, K k, K v) { c.run.attacker.learning_rate = to_double(k, v); },
       [](const C& c) { return num(c.run.attacker.learning_rate); }},
      {"run", "attack_momentum",
       [](C& c, K k, K v) { c.run.attacker.momentum = to_double(k, v); },
       [](const C& c) { return num(c.run.attacker.momentum); }},
      {"run", "attack_weight_decay",
       [](C& c, K k, K v) { c.run.attacker.weight_decay = to_double(k, v); },
       [](const C& c) { return num(c.run.attacker.weight_decay); }},
      {"run", "attack_dropout", [](C& c, K k, K v) { c.run.attacker.dropout = to_double(k, v); },
       [](const C& c) { return num(c.run.attacker.dropout); }},
      {"run", "attack_features",
       [](C& c, K k, K v) { c.run.attacker.max_features = to_size(k, v); },
       [](const C& c) { return std::to_string(c.run.attacker.max_features); }},
  };
  return table;
}

constexpr std::array<const char*, 6> kSections = {"dataset", "model",     "srcm",
                                                  "defense", "optimizer", "run"};

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const auto& ds = cfg.dataset.synthetic;
  if (cfg.dataset.source == DatasetSource::File && cfg.dataset.path.empty()) {
    throw ConfigError("dataset.path: required when dataset.source = file");
  }
  if (ds.dim == 0) throw ConfigError("dataset.dim: must be positive");
  if (ds.classes < 2) throw ConfigError("dataset.classes: need at least 2 classes");
  if (cfg.dataset.source == DatasetSource::Synthetic) {
    if (ds.n < 4) throw ConfigError("dataset.n: need at least 4 samples");
    if (ds.n % ds.classes != 0) {
      throw ConfigError(fmt::format("dataset.n: {} is not divisible by dataset.classes = {}", ds.n,
                                    ds.classes));
    }
    if (!(ds.flip_prob >= 0.0 && ds.flip_prob < 0.5)) {
      throw ConfigError("dataset.flip_prob: must lie in [0, 0.5)");
    }
  }

  if (cfg.model.hidden.empty()) throw ConfigError("model.hidden: at least one hidden layer");
  for (const auto h : cfg.model.hidden) {
    if (h == 0) throw ConfigError("model.hidden: widths must be positive");
  }
  if (!(cfg.model.dropout >= 0.0 && cfg.model.dropout < 1.0)) {
    throw ConfigError("model.dropout: must lie in [0, 1)");
  }
  cfg.srcm.validate();
  if (cfg.model.head == HeadDesign::Srcm && !cfg.srcm.all_on) {
    throw ConfigError("srcm.all_on: the srcm head normalizes in evaluation (true)");
  }
  if (cfg.model.head == HeadDesign::DesignB && cfg.srcm.all_on) {
    throw ConfigError("srcm.all_on: design_b normalizes in training only (false)");
  }

  cfg.defense.validate();

  const auto& o = cfg.optimizer;
  if (!(o.learning_rate > 0.0)) throw ConfigError("optimizer.lr: must be positive");
  if (!(o.momentum >= 0.0 && o.momentum < 1.0)) {
    throw ConfigError("optimizer.momentum: must lie in [0, 1)");
  }
  if (!(o.weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay: must be non-negative");
  if (o.batch_size == 0) throw ConfigError("optimizer.batch_size: must be positive");

  const auto& r = cfg.run;
  if (r.repeat == 0) throw ConfigError("run.repeat: must be at least 1");
  if (r.out_dir.empty()) throw ConfigError("run.out_dir: must not be empty");
  if (r.magnitude_bins == 0) throw ConfigError("run.magnitude_bins: must be positive");
  if (r.margin_bins == 0) throw ConfigError("run.margin_bins: must be positive");
  if (r.r1_grid.empty()) throw ConfigError("run.r1_grid: must not be empty");
  if (r.d_grid.empty()) throw ConfigError("run.d_grid: must not be empty");
  for (const double v : r.r1_grid) {
    if (!(v > 0.0)) throw ConfigError("run.r1_grid: radii must be positive");
  }
  for (const double v : r.d_grid) {
    if (!(v > 0.0)) throw ConfigError("run.d_grid: gaps must be positive");
  }
  if (r.attacker.epochs == 0) throw ConfigError("run.attack_epochs: must be positive");
  if (r.attacker.batch_size == 0) throw ConfigError("run.attack_batch_size: must be positive");
  if (!(r.attacker.learning_rate > 0.0)) throw ConfigError("run.attack_lr: must be positive");
  if (!(r.attacker.momentum >= 0.0 && r.attacker.momentum < 1.0)) {
    throw ConfigError("run.attack_momentum: must lie in [0, 1)");
  }
  if (!(r.attacker.weight_decay >= 0.0)) {
    throw ConfigError("run.attack_weight_decay: must be non-negative");
  }
  if (!(r.attacker.dropout >= 0.0 && r.attacker.dropout < 1.0)) {
    throw ConfigError("run.attack_dropout: must lie in [0, 1)");
  }
  if (r.attacker.max_features == 0) throw ConfigError("run.attack_features: must be positive");
}

ExperimentConfig parse_config(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }

  ExperimentConfig cfg;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (std::find_if(kSections.begin(), kSections.end(),
                     [&](const char* s) { return section == s; }) == kSections.end()) {
      if (body.empty()) throw ConfigError(fmt::format("{}: key outside any section", section));
      throw ConfigError(fmt::format("[{}]: unknown section", section));
    }
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) {
        return section == f.section && key == f.key;
      });
      if (it == fields().end()) throw ConfigError(fmt::format("{}: unknown key", full));
      it->set(cfg, full, node.data());
      seen.insert(full);
    }
  }

  for (const char* required : {"dataset.source", "model.hidden"}) {
    if (!seen.count(required)) throw ConfigError(fmt::format("{}: missing required key", required));
  }
  if (cfg.model.head != HeadDesign::Vanilla && !seen.count("srcm.r1")) {
    throw ConfigError(
        fmt::format("srcm.r1: required when model.head = {}", to_string(cfg.model.head)));
  }
  if (!seen.count("srcm.all_on")) cfg.srcm.all_on = cfg.model.head == HeadDesign::Srcm;
  if (cfg.srcm.hidden_width == 0 && !cfg.model.hidden.empty()) {
    cfg.srcm.hidden_width = cfg.model.hidden.back();
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const char* section : kSections) {
    if (!out.empty()) out += '\n';
    out += fmt::format("[{}]\n", section);
    for (const auto& f : fields()) {
      if (std::string_view(f.section) == section) out += fmt::format("{} = {}\n", f.key, f.get(cfg));
    }
  }
  return out;
}

void apply_env_overrides(ExperimentConfig& cfg, const EnvLookup& lookup) {
  if (const auto seed = lookup("LAB_SEED")) cfg.run.seed = to_uint("LAB_SEED", *seed);
  if (const auto dir = lookup("LAB_OUT_DIR")) {
    if (trim(*dir).empty()) throw ConfigError("LAB_OUT_DIR: must not be empty");
    cfg.run.out_dir = std::string(trim(*dir));
  }
}

void apply_env_overrides(ExperimentConfig& cfg) {
  apply_env_overrides(cfg, [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  });
}

MlpSpec mlp_spec(const ExperimentConfig& cfg) {
  MlpSpec spec;
  spec.input_width = cfg.input_width();
  spec.hidden = cfg.model.hidden;
  spec.activation = cfg.model.activation;
  spec.dropout = cfg.model.dropout;
  spec.head = cfg.model.head;
  spec.num_classes = cfg.num_classes();
  spec.srcm = cfg.srcm;
  return spec;
}

AttackOptions attack_options(const ExperimentConfig& cfg) {
  AttackOptions options;
  options.attacker = cfg.run.attacker;
  options.standardize_per_class = cfg.run.per_class_offsets;
  return options;
}

TrainOptions train_options(const ExperimentConfig& cfg, std::uint64_t seed) {
  TrainOptions options;
  options.epochs = cfg.optimizer.epochs;
  options.batch_size = cfg.optimizer.batch_size;
  options.seed = seed;
  options.schedule = cfg.optimizer.schedule;
  return options;
}

std::string training_tag(const ExperimentConfig& cfg) {
  std::string tag;
  for (const auto& f : fields()) {
    const std::string_view section = f.section;
    if (section == "model" || section == "srcm" || section == "defense" ||
        section == "optimizer") {
      tag += fmt::format("{}.{}={};", f.section, f.key, f.get(cfg));
    }
  }
  return tag;
}

}  // namespace srlab
