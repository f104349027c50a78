#include "srlab/experiment.hpp"

#include <fmt/format.h>

#include <bit>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "srlab/defenses.hpp"
#include "srlab/errors.hpp"
#include "srlab/optimizer.hpp"
#include "srlab/srcm.hpp"

namespace srlab {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void rethrow_in_stage(std::string_view stage) {
  const auto msg = [&](const std::exception& e) {
    return fmt::format("stage {}: {}", stage, e.what());
  };
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(msg(e));
  } catch (const ShapeError& e) {
    throw ShapeError(msg(e));
  } catch (const InputError& e) {
    throw InputError(msg(e));
  } catch (const StateError& e) {
    throw StateError(msg(e));
  } catch (const NumericError& e) {
    throw NumericError(msg(e));
  } catch (const ParseError& e) {
    throw ParseError(msg(e));
  } catch (const ContractError& e) {
    throw ContractError(msg(e));
  } catch (const IoError& e) {
    throw IoError(msg(e));
  } catch (const std::exception& e) {
    throw LabError(msg(e));
  }
}

template <typename F>
auto in_stage(std::string_view stage, F&& f) {
  try {
    return f();
  } catch (...) {
    rethrow_in_stage(stage);
  }
}

struct TrainedModel {
  Model model;
  TrainLog log;
};

TrainedModel train_one(const ExperimentConfig& cfg, const TabularDataset& ds,
                       std::span<const std::size_t> members, std::span<const std::size_t> monitor,
                       std::uint64_t seed, std::string_view stage, AccessTrace* trace) {
  return in_stage(stage, [&] {
    Model model = make_model(cfg, seed);
    auto opt = make_sgd(model, cfg.optimizer.learning_rate, cfg.optimizer.momentum,
                        cfg.optimizer.weight_decay);
    const auto train = traced_subset(ds, members, stage, trace);
    std::optional<TabularDataset> monitor_set;
    std::optional<EarlyStopping> early;
    if (cfg.defense.kind == DefenseKind::EarlyStopping) {
      monitor_set = traced_subset(ds, monitor, fmt::format("{}_monitor", stage), trace);
      early = EarlyStopping{cfg.defense.patience, cfg.defense.min_delta};
    }
    TrainLog log = train_epochs(model, train, opt, train_options(cfg, seed), make_loss(cfg.defense),
                                monitor_set ? &*monitor_set : nullptr, early);
    return TrainedModel{std::move(model), std::move(log)};
  });
}

struct SeedRun {
  SeedResult result;
  SeedArtifacts artifacts;
  std::vector<PredictionRecord> records;
  std::vector<std::string> warnings;
};

SeedRun attack_and_diagnose(const ExperimentConfig& cfg, const TabularDataset& ds,
                            const MembershipPlan& plan, Model target, Model shadow,
                            std::uint64_t seed, AccessTrace* trace) {
  SeedRun run;
  const AttackReport report = in_stage("attack", [&] {
    return run_attack_suite(target, shadow, plan.split, ds, attack_options(cfg), seed, trace);
  });
  run.artifacts.tables = in_stage("diagnose", [&] {
    return magnitude_margin_table(report.target_records, cfg.run.magnitude_bins,
                                  cfg.run.margin_bins, target.bottleneck_after_projection());
  });

  auto& r = run.result;
  r.seed = seed;
  r.metrics.train_acc = report.train_acc;
  r.metrics.test_acc = report.test_acc;
  for (const auto kind : kAttackKinds) {
    r.metrics.auc[static_cast<std::size_t>(kind)] = report.result(kind).auc;
  }
  r.members = plan.split.target_train.size();
  r.non_members = plan.split.target_test.size();
  r.holdout = plan.target_monitor.size();
  r.pearson_member = run.artifacts.tables.pearson_member;
  r.pearson_non_member = run.artifacts.tables.pearson_non_member;

  for (const auto& w : plan.split.warnings) run.warnings.push_back(fmt::format("seed {}: {}", seed, w));
  for (const auto& w : run.artifacts.tables.warnings) {
    run.warnings.push_back(fmt::format("seed {}: {}", seed, w));
  }
  run.records = report.target_records;
  if (cfg.run.save_models) {
    run.artifacts.target = std::move(target);
    run.artifacts.shadow = std::move(shadow);
  }
  return run;
}

ExperimentReport assemble(const ExperimentConfig& cfg, const TabularDataset& ds,
                          std::vector<SeedRun> runs) {
  ExperimentReport report;
  auto& s = report.summary;
  s.config = cfg;
  s.dataset_digest = dataset_digest(ds);
  s.dataset_provenance = ds.provenance;
  s.dataset_rows = ds.size();
  s.capacity = capacity_info(cfg);
  s.magnitude_after_projection = cfg.model.head == HeadDesign::DesignB ||
                                 cfg.model.head == HeadDesign::Srcm;
  std::vector<PredictionRecord> pooled;
  for (auto& run : runs) {
    s.seeds.push_back(run.result);
    s.warnings.insert(s.warnings.end(), run.warnings.begin(), run.warnings.end());
    pooled.insert(pooled.end(), run.records.begin(), run.records.end());
    report.artifacts.push_back(std::move(run.artifacts));
  }
  s.mean = mean_metrics(s.seeds);
  report.mean_tables = in_stage("diagnose", [&] {
    return magnitude_margin_table(pooled, cfg.run.magnitude_bins, cfg.run.margin_bins,
                                  s.magnitude_after_projection);
  });
  return report;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "none"; }

double parse_double(std::string_view key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ParseError(fmt::format("report {}: bad number '{}'", key, v));
  }
  return out;
}

std::size_t parse_size(std::string_view key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ParseError(fmt::format("report {}: bad integer '{}'", key, v));
  }
  return out;
}

std::optional<double> parse_opt(std::string_view key, const std::string& v) {
  if (v == "none") return std::nullopt;
  return parse_double(key, v);
}

const pt::ptree& section(const pt::ptree& tree, const std::string& name) {
  const auto it = tree.find(name);
  if (it == tree.not_found()) throw ParseError(fmt::format("report: missing [{}]", name));
  return it->second;
}

std::string field(const pt::ptree& sec, const std::string& sec_name, const std::string& key) {
  const auto it = sec.find(key);
  if (it == sec.not_found()) {
    throw ParseError(fmt::format("report: missing {}.{}", sec_name, key));
  }
  return it->second.data();
}

void write_metrics(std::string& out, const Metrics& m) {
  out += fmt::format("train_acc = {}\ntest_acc = {}\n", num(m.train_acc), num(m.test_acc));
  for (const auto kind : kAttackKinds) {
    out += fmt::format("auc_{} = {}\n", to_string(kind), num(m.auc_of(kind)));
  }
}

Metrics read_metrics(const pt::ptree& sec, const std::string& name) {
  Metrics m;
  m.train_acc = parse_double("train_acc", field(sec, name, "train_acc"));
  m.test_acc = parse_double("test_acc", field(sec, name, "test_acc"));
  for (const auto kind : kAttackKinds) {
    const std::string key = "auc_" + to_string(kind);
    m.auc[static_cast<std::size_t>(kind)] = parse_double(key, field(sec, name, key));
  }
  return m;
}

std::string metrics_row(const Metrics& m) {
  return fmt::format("{},{},{},{},{},{}\n", num(m.train_acc), num(m.test_acc), num(m.auc[0]),
                     num(m.auc[1]), num(m.auc[2]), num(m.auc[3]));
}

std::vector<std::string> artifact_names(const ReportSummary& s) {
  std::vector<std::string> names = {"resolved.cfg", "results.csv", "results_mean.csv",
                                    "diag_mean_member.csv", "diag_mean_non_member.csv"};
  for (const auto& seed : s.seeds) {
    names.push_back(fmt::format("train_log_seed{}.csv", seed.seed));
    names.push_back(fmt::format("diag_seed{}_member.csv", seed.seed));
    names.push_back(fmt::format("diag_seed{}_non_member.csv", seed.seed));
    if (s.config.run.save_models) {
      names.push_back(fmt::format("target_seed{}.ckpt", seed.seed));
      names.push_back(fmt::format("shadow_seed{}.ckpt", seed.seed));
    }
  }
  return names;
}

void write_file(const std::filesystem::path& path, std::string_view body) {
  std::ofstream out(path, std::ios::binary);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

std::string sweep_dir_name(double r1, double d) { return fmt::format("r1_{}_d_{}", r1, d); }

}  // namespace

TabularDataset load_dataset(const ExperimentConfig& cfg) {
  return in_stage("dataset", [&] {
    if (cfg.dataset.source == DatasetSource::File) {
      return load_purchase_csv(cfg.dataset.path,
                               {cfg.dataset.synthetic.dim, cfg.dataset.synthetic.classes});
    }
    return generate_synthetic(cfg.dataset.synthetic);
  });
}

MembershipPlan plan_membership(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
  MembershipPlan plan;
  plan.split = make_split(n, seed);
  if (cfg.defense.kind != DefenseKind::EarlyStopping) return plan;
  auto carve = [&](std::vector<std::size_t>& members, std::vector<std::size_t>& non_members,
                   std::vector<std::size_t>& monitor) {
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(cfg.defense.holdout_fraction * static_cast<double>(members.size()))));
    if (k >= members.size()) throw InputError("early-stopping holdout leaves no training members");
    monitor.assign(members.end() - static_cast<std::ptrdiff_t>(k), members.end());
    members.resize(members.size() - k);
    non_members.resize(members.size());
  };
  carve(plan.split.target_train, plan.split.target_test, plan.target_monitor);
  carve(plan.split.shadow_train, plan.split.shadow_test, plan.shadow_monitor);
  return plan;
}

std::optional<CapacityInfo> capacity_info(const ExperimentConfig& cfg) {
  if (!uses_shell(cfg.model.head)) return std::nullopt;
  CapacityInfo info;
  info.dim =
      cfg.model.head == HeadDesign::DesignA ? cfg.num_classes() : cfg.srcm.hidden_width;
  info.r1 = cfg.srcm.r1;
  info.d = cfg.srcm.d;
  try {
    info.proxy = capacity_proxy(info.dim, info.r1, info.d);
  } catch (const NumericError&) {
    info.proxy = std::nullopt;
  }
  info.log_proxy = log_capacity_proxy(info.dim, info.r1, info.d);
  return info;
}

Model make_model(const ExperimentConfig& cfg, std::uint64_t seed) {
  Model model = build_mlp(mlp_spec(cfg), seed);
  model.set_training_tag(training_tag(cfg));
  return model;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, AccessTrace* trace) {
  validate(cfg);
  return run_experiment(cfg, load_dataset(cfg), trace);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const TabularDataset& ds,
                                AccessTrace* trace) {
  validate(cfg);
  if (ds.width() != cfg.input_width() || ds.num_classes != cfg.num_classes()) {
    throw ConfigError(fmt::format("dataset: {} features / {} classes but config expects {} / {}",
                                  ds.width(), ds.num_classes, cfg.input_width(),
                                  cfg.num_classes()));
  }
  std::vector<SeedRun> runs;
  for (std::size_t k = 0; k < cfg.run.repeat; ++k) {
    const std::uint64_t seed = cfg.run.seed + k;
    const auto plan = in_stage("split", [&] { return plan_membership(cfg, ds.size(), seed); });
    auto target = train_one(cfg, ds, plan.split.target_train, plan.target_monitor, seed,
                            "train_target", trace);
    auto shadow = train_one(cfg, ds, plan.split.shadow_train, plan.shadow_monitor, seed + 1,
                            "train_shadow", trace);
    SeedRun run = attack_and_diagnose(cfg, ds, plan, std::move(target.model),
                                      std::move(shadow.model), seed, trace);
    run.result.target_epochs = target.log.epochs.size();
    run.result.shadow_epochs = shadow.log.epochs.size();
    run.result.target_best_epoch = target.log.best_epoch;
    run.artifacts.target_log = std::move(target.log);
    run.artifacts.shadow_log = std::move(shadow.log);
    runs.push_back(std::move(run));
  }
  return assemble(cfg, ds, std::move(runs));
}

ExperimentReport attack_trained(const ExperimentConfig& cfg, const TabularDataset& ds,
                                Model target, Model shadow, std::uint64_t seed,
                                AccessTrace* trace) {
  validate(cfg);
  target.set_mode(Mode::Eval);
  shadow.set_mode(Mode::Eval);
  const auto plan = in_stage("split", [&] { return plan_membership(cfg, ds.size(), seed); });
  std::vector<SeedRun> runs;
  runs.push_back(attack_and_diagnose(cfg, ds, plan, std::move(target), std::move(shadow), seed,
                                     trace));
  ExperimentConfig single = cfg;
  single.run.seed = seed;
  single.run.repeat = 1;
  single.run.save_models = false;
  auto report = assemble(single, ds, std::move(runs));
  for (auto& a : report.artifacts) {
    a.target.reset();
    a.shadow.reset();
  }
  return report;
}

Metrics mean_metrics(std::span<const SeedResult> seeds) {
  Metrics m;
  if (seeds.empty()) return m;
  for (const auto& s : seeds) {
    m.train_acc += s.metrics.train_acc;
    m.test_acc += s.metrics.test_acc;
    for (std::size_t k = 0; k < kNumAttacks; ++k) m.auc[k] += s.metrics.auc[k];
  }
  const auto n = static_cast<double>(seeds.size());
  m.train_acc /= n;
  m.test_acc /= n;
  for (double& a : m.auc) a /= n;
  return m;
}

std::string format_report(const ReportSummary& s) {
  std::string out = "# srlab experiment report\n\n[config]\n";
  std::string sec;
  std::istringstream cfg_text(to_config_text(s.config));
  for (std::string line; std::getline(cfg_text, line);) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      sec = line.substr(1, line.size() - 2);
      continue;
    }
    out += fmt::format("{}.{}\n", sec, line);
  }

  out += fmt::format("\n[dataset]\ndigest = {}\nprovenance = {}\nrows = {}\n", s.dataset_digest,
                     s.dataset_provenance, s.dataset_rows);
  if (s.capacity) {
    out += fmt::format("\n[capacity]\ndim = {}\nr1 = {}\nd = {}\nproxy = {}\nlog_proxy = {}\n",
                       s.capacity->dim, num(s.capacity->r1), num(s.capacity->d),
                       opt_num(s.capacity->proxy), num(s.capacity->log_proxy));
  }
  out += fmt::format("\n[diagnostics]\nmagnitude_after_projection = {}\n",
                     s.magnitude_after_projection ? "true" : "false");

  for (const auto& r : s.seeds) {
    out += fmt::format("\n[seed.{}]\n", r.seed);
    write_metrics(out, r.metrics);
    out += fmt::format("members = {}\nnon_members = {}\nholdout = {}\n", r.members, r.non_members,
                       r.holdout);
    out += fmt::format("target_epochs = {}\nshadow_epochs = {}\ntarget_best_epoch = {}\n",
                       r.target_epochs, r.shadow_epochs,
                       r.target_best_epoch ? std::to_string(*r.target_best_epoch) : "none");
    out += fmt::format("pearson_member = {}\npearson_non_member = {}\n", opt_num(r.pearson_member),
                       opt_num(r.pearson_non_member));
  }
  out += fmt::format("\n[mean]\nseeds = {}\n", s.seeds.size());
  write_metrics(out, s.mean);

  out += "\n[artifacts]\n";
  for (const auto& name : artifact_names(s)) out += fmt::format("file = {}\n", name);
  out += "\n[warnings]\n";
  for (std::size_t i = 0; i < s.warnings.size(); ++i) {
    out += fmt::format("w{} = {}\n", i, s.warnings[i]);
  }
  return out;
}

ReportSummary parse_report(std::string_view text) {
  // [artifacts] repeats its key, which the ini reader rejects; it is derived
  // data, so drop it before parsing.
  std::string filtered;
  bool skipping = false;
  std::istringstream lines{std::string(text)};
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty() && line.front() == '[') skipping = line == "[artifacts]";
    if (!skipping) filtered += line + "\n";
  }
  pt::ptree tree;
  try {
    std::istringstream in(filtered);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(fmt::format("report line {}: {}", e.line(), e.message()));
  }

  ReportSummary s;
  std::map<std::string, std::string> cfg_sections;
  std::vector<std::string> order;
  for (const auto& [key, node] : section(tree, "config")) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ParseError(fmt::format("report: bad config key {}", key));
    const std::string sec = key.substr(0, dot);
    if (!cfg_sections.count(sec)) order.push_back(sec);
    cfg_sections[sec] += fmt::format("{} = {}\n", key.substr(dot + 1), node.data());
  }
  std::string cfg_text;
  for (const auto& sec : order) cfg_text += fmt::format("[{}]\n{}", sec, cfg_sections[sec]);
  s.config = parse_config(cfg_text);

  const auto& ds = section(tree, "dataset");
  s.dataset_digest = field(ds, "dataset", "digest");
  s.dataset_provenance = field(ds, "dataset", "provenance");
  s.dataset_rows = parse_size("rows", field(ds, "dataset", "rows"));

  if (const auto it = tree.find("capacity"); it != tree.not_found()) {
    const auto& c = it->second;
    CapacityInfo info;
    info.dim = parse_size("dim", field(c, "capacity", "dim"));
    info.r1 = parse_double("r1", field(c, "capacity", "r1"));
    info.d = parse_double("d", field(c, "capacity", "d"));
    info.proxy = parse_opt("proxy", field(c, "capacity", "proxy"));
    info.log_proxy = parse_double("log_proxy", field(c, "capacity", "log_proxy"));
    s.capacity = info;
  }
  s.magnitude_after_projection =
      field(section(tree, "diagnostics"), "diagnostics", "magnitude_after_projection") == "true";

  for (const auto& [name, sec] : tree) {
    if (!name.starts_with("seed.")) continue;
    SeedResult r;
    r.seed = parse_size("seed", name.substr(5));
    r.metrics = read_metrics(sec, name);
    r.members = parse_size("members", field(sec, name, "members"));
    r.non_members = parse_size("non_members", field(sec, name, "non_members"));
    r.holdout = parse_size("holdout", field(sec, name, "holdout"));
    r.target_epochs = parse_size("target_epochs", field(sec, name, "target_epochs"));
    r.shadow_epochs = parse_size("shadow_epochs", field(sec, name, "shadow_epochs"));
    if (const auto b = field(sec, name, "target_best_epoch"); b != "none") {
      r.target_best_epoch = parse_size("target_best_epoch", b);
    }
    r.pearson_member = parse_opt("pearson_member", field(sec, name, "pearson_member"));
    r.pearson_non_member = parse_opt("pearson_non_member", field(sec, name, "pearson_non_member"));
    s.seeds.push_back(r);
  }
  s.mean = read_metrics(section(tree, "mean"), "mean");
  if (const auto it = tree.find("warnings"); it != tree.not_found()) {
    for (const auto& [key, node] : it->second) s.warnings.push_back(node.data());
  }
  return s;
}

std::string results_csv(const ReportSummary& s) {
  std::string out = fmt::format("{}\n", kResultsHeader);
  for (const auto& r : s.seeds) out += metrics_row(r.metrics);
  return out;
}

std::string train_log_csv(const TrainLog& log) {
  std::string out = "epoch,learning_rate,train_loss,train_acc,monitor_loss,monitor_acc\n";
  for (const auto& e : log.epochs) {
    out += fmt::format("{},{},{},{},{},{}\n", e.epoch, num(e.learning_rate), num(e.train_loss),
                       num(e.train_acc), e.monitor_loss ? num(*e.monitor_loss) : "",
                       e.monitor_acc ? num(*e.monitor_acc) : "");
  }
  return out;
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path staging = dir / ".srlab-partial";
  try {
    fs::create_directories(dir);
    fs::remove_all(staging);
    fs::create_directories(staging);

    const auto& s = report.summary;
    write_file(staging / "report.txt", format_report(s));
    write_file(staging / "resolved.cfg", to_config_text(s.config));
    write_file(staging / "results.csv", results_csv(s));
    write_file(staging / "results_mean.csv",
               fmt::format("{}\n{}", kResultsHeader, metrics_row(s.mean)));
    write_file(staging / "diag_mean_member.csv", to_csv(report.mean_tables.member));
    write_file(staging / "diag_mean_non_member.csv", to_csv(report.mean_tables.non_member));
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
      const auto seed = s.seeds[i].seed;
      const auto& a = report.artifacts.at(i);
      write_file(staging / fmt::format("train_log_seed{}.csv", seed), train_log_csv(a.target_log));
      write_file(staging / fmt::format("diag_seed{}_member.csv", seed), to_csv(a.tables.member));
      write_file(staging / fmt::format("diag_seed{}_non_member.csv", seed),
                 to_csv(a.tables.non_member));
      if (s.config.run.save_models) {
        if (!a.target || !a.shadow) throw StateError("emit_report: trained models were not kept");
        save_checkpoint(*a.target, staging / fmt::format("target_seed{}.ckpt", seed));
        save_checkpoint(*a.shadow, staging / fmt::format("shadow_seed{}.ckpt", seed));
      }
    }
    for (const auto& entry : fs::directory_iterator(staging)) {
      fs::rename(entry.path(), dir / entry.path().filename());
    }
    fs::remove(staging);
  } catch (const fs::filesystem_error& e) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw IoError(fmt::format("emit_report {}: {}", dir.string(), e.what()));
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw;
  }
}

SweepResult run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  if (!uses_shell(cfg.model.head)) {
    throw ConfigError("model.head: an r1/d sweep needs a head with an SR layer");
  }
  SweepResult sweep;
  const auto dataset = load_dataset(cfg);
  for (const double d : cfg.run.d_grid) {
    for (const double r1 : cfg.run.r1_grid) {
      ExperimentConfig sub = cfg;
      sub.srcm.r1 = r1;
      sub.srcm.d = d;
      sub.run.out_dir = dir / sweep_dir_name(r1, d);
      validate(sub);
      auto report = run_experiment(sub, dataset);
      emit_report(report, sub.run.out_dir);
      sweep.points.push_back({r1, d, std::move(report.summary)});
    }
  }
  for (const double d : cfg.run.d_grid) {
    std::vector<double> r1s, train, mentr;
    for (const auto& p : sweep.points) {
      if (p.d != d) continue;
      r1s.push_back(p.r1);
      train.push_back(p.summary.mean.train_acc);
      mentr.push_back(p.summary.mean.auc_of(AttackKind::MEntropy));
    }
    sweep.train_acc_trend.emplace_back(d, spearman(r1s, train));
    sweep.mentropy_trend.emplace_back(d, spearman(r1s, mentr));
  }
  std::filesystem::create_directories(dir);
  write_file(dir / "sweep.csv", sweep_csv(sweep));
  write_file(dir / "trend.txt", trend_summary(sweep));
  return sweep;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = fmt::format("r1,d,log_capacity,{}\n", kResultsHeader);
  for (const auto& p : sweep.points) {
    out += fmt::format("{},{},{},{}", num(p.r1), num(p.d),
                       p.summary.capacity ? num(p.summary.capacity->log_proxy) : "",
                       metrics_row(p.summary.mean));
  }
  return out;
}

std::string trend_summary(const SweepResult& sweep) {
  std::string out;
  for (std::size_t i = 0; i < sweep.train_acc_trend.size(); ++i) {
    out += fmt::format("d = {}: spearman(r1, train_acc) = {}, spearman(r1, auc_mentropy) = {}\n",
                       num(sweep.train_acc_trend[i].first), opt_num(sweep.train_acc_trend[i].second),
                       opt_num(sweep.mentropy_trend[i].second));
  }
  return out;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::string manifest = "srlab-checkpoint 1";
  std::string body;
  for (const Matrix* p : model.parameters()) {
    manifest += fmt::format(" {}x{}", p->rows(), p->cols());
    for (const double v : p->values()) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) {
        body.push_back(static_cast<char>(bits & 0xffu));
        bits >>= 8;
      }
    }
  }
  write_file(path, manifest + "\n" + body);
}

void load_checkpoint(Model& model, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open checkpoint {}", path.string()));
  std::string manifest;
  std::getline(in, manifest);
  std::string expected = "srlab-checkpoint 1";
  for (const Matrix* p : model.parameters()) expected += fmt::format(" {}x{}", p->rows(), p->cols());
  if (manifest != expected) {
    throw ShapeError(fmt::format("checkpoint {}: manifest '{}' does not match model '{}'",
                                 path.string(), manifest, expected));
  }
  for (Matrix* p : model.parameters()) {
    for (double& v : p->values()) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw ParseError(fmt::format("checkpoint {}: truncated", path.string()));
      }
      std::uint64_t bits = 0;
      for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[b];
      v = std::bit_cast<double>(bits);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(fmt::format("checkpoint {}: trailing bytes", path.string()));
  }
}

}  // namespace srlab
