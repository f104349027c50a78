#include <doctest.h>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "srlab/config.hpp"
#include "srlab/errors.hpp"
#include "srlab/experiment.hpp"

using namespace srlab;

namespace {

constexpr const char* kMinimal = R"(
[dataset]
source = synthetic
[model]
hidden = 1024, 512, 256
)";

constexpr const char* kSmall = R"(
[dataset]
source = synthetic
n = 400
dim = 24
classes = 4
flip_prob = 0.3
[model]
hidden = 16
head = srcm
[srcm]
r1 = 2
[optimizer]
epochs = 4
batch_size = 32
[run]
repeat = 2
magnitude_bins = 5
margin_bins = 4
attack_epochs = 3
)";

std::string error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(std::string_view name) {
  auto p = std::filesystem::temp_directory_path() / fmt::format("srlab_test_{}", name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("parse_config") {
  SUBCASE("minimal config gets the defaults") {
    const auto cfg = parse_config(kMinimal);
    CHECK(cfg.run.seed == 0);
    CHECK(cfg.optimizer.momentum == 0.09);
    CHECK(cfg.optimizer.weight_decay == 5e-4);
    CHECK(cfg.optimizer.learning_rate == 0.1);
    CHECK(cfg.optimizer.batch_size == 128);
    CHECK(cfg.optimizer.epochs == 100);
    CHECK(cfg.model.hidden == std::vector<std::size_t>{1024, 512, 256});
    CHECK(cfg.model.head == HeadDesign::Vanilla);
    CHECK(cfg.srcm.hidden_width == 256);
    CHECK(cfg.dataset.synthetic == SyntheticParams{});
    CHECK(cfg.defense == DefenseConfig{});
    const std::string echo = to_config_text(cfg);
    CHECK(echo.find("momentum = 0.09") != std::string::npos);
    CHECK(echo.find("weight_decay = 0.0005") != std::string::npos);
  }
  SUBCASE("echo reproduces the config") {
    auto cfg = parse_config(kSmall);
    CHECK(parse_config(to_config_text(cfg)) == cfg);
    cfg = parse_config(kMinimal);
    CHECK(parse_config(to_config_text(cfg)) == cfg);
  }
  SUBCASE("shell heads need r1") {
    const std::string text = std::string(kMinimal) + "head = srcm\n";
    CHECK(error_of(text).find("srcm.r1") != std::string::npos);
  }
  SUBCASE("unknown key is named") {
    const std::string text = std::string(kMinimal) + "foo = 1\n";
    CHECK(error_of(text).find("foo") != std::string::npos);
  }
  SUBCASE("bad values name their key") {
    const std::string base = kMinimal;
    CHECK(error_of(base + "[srcm]\nr1 = 0\n").find("srcm.r1") != std::string::npos);
    CHECK(error_of(base + "[srcm]\nd = -1\n").find("srcm.d") != std::string::npos);
    CHECK(error_of(base + "dropout = lots\n").find("model.dropout") != std::string::npos);
    CHECK(error_of(base + "activation = gelu\n").find("model.activation") != std::string::npos);
    CHECK(error_of(base + "[optimizer]\nmomentum = 1.5\n").find("optimizer.momentum") !=
          std::string::npos);
    CHECK(error_of(base + "[bogus]\nx = 1\n").find("bogus") != std::string::npos);
  }
  SUBCASE("missing required keys") {
    CHECK(error_of("[dataset]\nsource = synthetic\n").find("model.hidden") != std::string::npos);
    CHECK(error_of("[model]\nhidden = 4\n").find("dataset.source") != std::string::npos);
  }
  SUBCASE("all_on follows the head and must agree with it") {
    const std::string base = std::string(kMinimal) + "head = design_b\n[srcm]\nr1 = 1\n";
    CHECK_FALSE(parse_config(base).srcm.all_on);
    CHECK(error_of(base + "all_on = true\n").find("srcm.all_on") != std::string::npos);
  }
  SUBCASE("momentum 0.9 is also runnable") {
    const auto cfg = parse_config(std::string(kMinimal) + "[optimizer]\nmomentum = 0.9\n");
    CHECK(cfg.optimizer.momentum == 0.9);
  }
}

TEST_CASE("environment overrides") {
  auto cfg = parse_config(kMinimal);
  apply_env_overrides(cfg, [](const char* name) -> std::optional<std::string> {
    if (std::string_view(name) == "LAB_SEED") return "7";
    if (std::string_view(name) == "LAB_OUT_DIR") return "/tmp/elsewhere";
    return std::nullopt;
  });
  CHECK(cfg.run.seed == 7);
  CHECK(cfg.run.out_dir == "/tmp/elsewhere");
  CHECK_THROWS_AS(apply_env_overrides(cfg,
                                      [](const char*) -> std::optional<std::string> {
                                        return "x";
                                      }),
                  ConfigError);
}

TEST_CASE("run_experiment and reports") {
  const auto cfg = parse_config(kSmall);
  AccessTrace trace;
  const auto report = run_experiment(cfg, &trace);
  const auto& s = report.summary;

  SUBCASE("per-seed results and mean") {
    REQUIRE(s.seeds.size() == 2);
    CHECK(s.seeds[0].seed == 0);
    CHECK(s.seeds[1].seed == 1);
    CHECK(s.seeds[0].members == 100);
    CHECK(s.seeds[0].non_members == 100);
    CHECK(s.mean.train_acc ==
          doctest::Approx((s.seeds[0].metrics.train_acc + s.seeds[1].metrics.train_acc) / 2));
    REQUIRE(s.capacity);
    CHECK(s.capacity->dim == 16);
    CHECK(s.magnitude_after_projection);
    CHECK(s.dataset_digest.size() == 64);
  }
  SUBCASE("target non-members are read only during attack evaluation") {
    const auto split = plan_membership(cfg, 400, 0).split;
    const std::set<std::size_t> test(split.target_test.begin(), split.target_test.end());
    bool reached_eval = false;
    for (const auto& e : trace.events()) {
      if (e.stage == "attack_eval") reached_eval = true;
      if (e.stage == "attack_eval") continue;
      for (const auto i : e.indices) {
        if (!reached_eval) CHECK(test.count(i) == 0);
      }
    }
    CHECK(reached_eval);
  }
  SUBCASE("emit then parse round-trips") {
    const auto dir = scratch("emit");
    emit_report(report, dir);
    CHECK(parse_report(slurp(dir / "report.txt")) == s);
    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.starts_with("train_acc,test_acc,auc_nn,auc_entropy,auc_mentropy,auc_gradx\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(parse_config(slurp(dir / "resolved.cfg")) == cfg);
    for (const char* f : {"diag_mean_member.csv", "diag_seed1_non_member.csv",
                          "train_log_seed0.csv", "target_seed0.ckpt", "shadow_seed1.ckpt"}) {
      CHECK(std::filesystem::exists(dir / f));
    }
    CHECK_FALSE(std::filesystem::exists(dir / ".srlab-partial"));
    std::filesystem::remove_all(dir);
  }
  SUBCASE("same config gives a byte-identical report") {
    const auto again = run_experiment(cfg);
    CHECK(format_report(again.summary) == format_report(s));
  }
  SUBCASE("checkpoints reload into identical attacks") {
    const auto dir = scratch("ckpt");
    emit_report(report, dir);
    Model target = make_model(cfg, 0);
    Model shadow = make_model(cfg, 1);
    load_checkpoint(target, dir / "target_seed0.ckpt");
    load_checkpoint(shadow, dir / "shadow_seed0.ckpt");
    CHECK(*target.parameters()[0] == *report.artifacts[0].target->parameters()[0]);
    const auto ds = load_dataset(cfg);
    const auto again = attack_trained(cfg, ds, std::move(target), std::move(shadow), 0);
    CHECK(again.summary.seeds[0].metrics == s.seeds[0].metrics);

    Model wrong = make_model(parse_config(kMinimal), 0);
    CHECK_THROWS_AS(load_checkpoint(wrong, dir / "target_seed0.ckpt"), ShapeError);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("early stopping holds out members") {
  auto cfg = parse_config(std::string(kSmall) + "[defense]\nkind = early_stopping\npatience = 2\n");
  const auto plan = plan_membership(cfg, 400, 0);
  CHECK(plan.target_monitor.size() == 10);
  CHECK(plan.split.target_train.size() == 90);
  CHECK(plan.split.target_test.size() == 90);
  cfg.run.repeat = 1;
  AccessTrace trace;
  const auto report = run_experiment(cfg, &trace);
  CHECK(report.summary.seeds[0].holdout == 10);
  const std::set<std::size_t> monitor(plan.target_monitor.begin(), plan.target_monitor.end());
  for (const auto& e : trace.events()) {
    if (e.stage != "attack_eval") continue;
    for (const auto i : e.indices) CHECK(monitor.count(i) == 0);
  }
}

TEST_CASE("stage errors name the stage") {
  const auto cfg = parse_config(
      "[dataset]\nsource = file\npath = /nonexistent/purchase.csv\n[model]\nhidden = 8\n");
  try {
    run_experiment(cfg);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("stage dataset") != std::string::npos);
  }
  CHECK(error_of(std::string(kSmall) + "[dataset]\n").find("duplicate") != std::string::npos);
}

TEST_CASE("untrained models can be attacked") {
  auto cfg = parse_config(kSmall);
  cfg.optimizer.epochs = 0;
  cfg.run.repeat = 1;
  const auto report = run_experiment(cfg);
  REQUIRE(report.summary.seeds.size() == 1);
  CHECK(report.summary.seeds[0].target_epochs == 0);
}
