#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <random>

#include "srlab/config.hpp"
#include "srlab/diagnostics.hpp"
#include "srlab/errors.hpp"
#include "srlab/experiment.hpp"

namespace {

using namespace srlab;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

ExperimentConfig resolve(const std::string& path) {
  ExperimentConfig cfg = load_config(path);
  apply_env_overrides(cfg);
  return cfg;
}

void print_metrics(const Metrics& m) {
  fmt::print("train_acc={:.4f} test_acc={:.4f}", m.train_acc, m.test_acc);
  for (const auto kind : kAttackKinds) fmt::print(" auc_{}={:.4f}", to_string(kind), m.auc_of(kind));
  fmt::print("\n");
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

int cmd_run(const std::string& config) {
  const auto cfg = resolve(config);
  const auto report = run_experiment(cfg);
  emit_report(report, cfg.run.out_dir);
  for (const auto& s : report.summary.seeds) {
    fmt::print("seed {}: ", s.seed);
    print_metrics(s.metrics);
  }
  fmt::print("mean: ");
  print_metrics(report.summary.mean);
  fmt::print("report: {}\n", (cfg.run.out_dir / "report.txt").string());
  return 0;
}

int cmd_sweep(const std::string& config) {
  const auto cfg = resolve(config);
  const auto sweep = run_sweep(cfg, cfg.run.out_dir);
  for (const auto& p : sweep.points) {
    fmt::print("r1={} d={}: ", p.r1, p.d);
    print_metrics(p.summary.mean);
  }
  fmt::print("{}", trend_summary(sweep));
  return 0;
}

ExperimentReport attack_saved(const ExperimentConfig& cfg, const std::string& target_path,
                              const std::string& shadow_path, std::uint64_t seed) {
  const auto dataset = load_dataset(cfg);
  Model target = make_model(cfg, seed);
  Model shadow = make_model(cfg, seed + 1);
  load_checkpoint(target, target_path);
  load_checkpoint(shadow, shadow_path);
  return attack_trained(cfg, dataset, std::move(target), std::move(shadow), seed);
}

int cmd_attack(const std::string& config, const std::string& target, const std::string& shadow) {
  const auto cfg = resolve(config);
  const auto report = attack_saved(cfg, target, shadow, cfg.run.seed);
  emit_report(report, cfg.run.out_dir);
  print_metrics(report.summary.mean);
  return 0;
}

int cmd_diagnose(const std::string& config, const std::string& target, const std::string& shadow) {
  const auto cfg = resolve(config);
  const auto report = attack_saved(cfg, target, shadow, cfg.run.seed);
  std::filesystem::create_directories(cfg.run.out_dir);
  const auto& t = report.mean_tables;
  write_text(cfg.run.out_dir / "diag_member.csv", to_csv(t.member));
  write_text(cfg.run.out_dir / "diag_non_member.csv", to_csv(t.non_member));
  const auto corr = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.4f}", *v) : std::string("none");
  };
  fmt::print("magnitude {} projection\n", t.magnitude_after_projection ? "after" : "before");
  fmt::print("pearson(magnitude, margin): member={} non_member={}\n", corr(t.pearson_member),
             corr(t.pearson_non_member));
  for (const auto& w : t.warnings) fmt::print("warning: {}\n", w);
  return 0;
}

int cmd_bench(const std::string& config, std::size_t iters, std::size_t warmup,
              std::size_t batch_rows) {
  const auto cfg = resolve(config);
  ExperimentConfig vanilla = cfg;
  vanilla.model.head = HeadDesign::Vanilla;
  const Model a = make_model(vanilla, cfg.run.seed);
  const Model b = make_model(cfg, cfg.run.seed);
  std::mt19937_64 rng(cfg.run.seed);
  std::bernoulli_distribution bit(0.5);
  Matrix batch(batch_rows, cfg.input_width());
  for (double& v : batch.values()) v = bit(rng) ? 1.0 : 0.0;
  const auto la = latency_bench(a, batch, iters, warmup);
  const auto lb = latency_bench(b, batch, iters, warmup);
  fmt::print("vanilla: {:.4f} ms +- {:.4f}\n", la.mean_ms, la.std_ms);
  fmt::print("{}: {:.4f} ms +- {:.4f}\n", to_string(cfg.model.head), lb.mean_ms, lb.std_ms);
  fmt::print("ratio: {:.4f}\n", lb.mean_ms / la.mean_ms);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference experiments with Saturn Rings classifier heads"};
  app.require_subcommand(1);
  std::string config;
  std::string target;
  std::string shadow;
  std::size_t iters = 100;
  std::size_t warmup = 10;
  std::size_t batch = 128;

  auto* run = app.add_subcommand("run", "train target and shadow, attack, diagnose");
  run->add_option("-c,--config", config, "experiment config")->required();
  auto* sweep = app.add_subcommand("sweep", "run the r1 x d grid");
  sweep->add_option("-c,--config", config, "experiment config")->required();
  auto* attack = app.add_subcommand("attack", "attack saved target/shadow checkpoints");
  auto* diagnose = app.add_subcommand("diagnose", "magnitude/margin tables for saved checkpoints");
  for (auto* sub : {attack, diagnose}) {
    sub->add_option("-c,--config", config, "experiment config")->required();
    sub->add_option("--target", target, "target checkpoint")->required();
    sub->add_option("--shadow", shadow, "shadow checkpoint")->required();
  }
  auto* bench = app.add_subcommand("bench", "forward latency of the configured head vs vanilla");
  bench->add_option("-c,--config", config, "experiment config")->required();
  bench->add_option("--iters", iters, "timed iterations");
  bench->add_option("--warmup", warmup, "untimed iterations");
  bench->add_option("--batch", batch, "batch rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(config);
    if (sweep->parsed()) return cmd_sweep(config);
    if (attack->parsed()) return cmd_attack(config, target, shadow);
    if (diagnose->parsed()) return cmd_diagnose(config, target, shadow);
    if (bench->parsed()) return cmd_bench(config, iters, warmup, batch);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
