#include <doctest.h>

#include <cmath>
#include <random>

#include "srlab/diagnostics.hpp"
#include "srlab/errors.hpp"
#include "srlab/model.hpp"

using namespace srlab;

namespace {

PredictionRecord rec(double magnitude, double margin_value, bool member, bool correct) {
  PredictionRecord r;
  r.magnitude = magnitude;
  r.margin = margin_value;
  r.is_member = member;
  r.attack_correct[static_cast<std::size_t>(AttackKind::MEntropy)] = correct;
  return r;
}

}  // namespace

TEST_CASE("margin") {
  const double p[] = {0.7, 0.2, 0.1};
  CHECK(margin(p) == doctest::Approx(0.5).epsilon(1e-15));
  const double u[] = {0.25, 0.25, 0.25, 0.25};
  CHECK(margin(u) == 0.0);
  const double h[] = {0.0, 1.0, 0.0};
  CHECK(margin(h) == 1.0);
  const double q[] = {0.1, 0.2, 0.7};
  CHECK(margin(q) == margin(p));
  const double one[] = {1.0};
  CHECK_THROWS_AS(margin(one), InputError);
}

TEST_CASE("pearson and spearman") {
  const double x[] = {1, 2, 3, 4, 5};
  const double y[] = {2, 4, 6, 8, 10};
  CHECK(*pearson(x, y) == doctest::Approx(1.0).epsilon(1e-15));
  const double z[] = {1, 8, 27, 64, 125};
  CHECK(*spearman(x, z) == doctest::Approx(1.0).epsilon(1e-15));
  const double flat[] = {3, 3, 3, 3, 3};
  CHECK_FALSE(pearson(x, flat).has_value());
  const double t[] = {1, 2, 2, 3, 4};
  CHECK(*spearman(t, x) == doctest::Approx(*pearson(std::vector<double>{1, 2.5, 2.5, 4, 5}, x)));

  SUBCASE("planted correlation 0.8") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> a(1000), b(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      a[i] = n(rng);
      b[i] = 0.8 * a[i] + 0.6 * n(rng);
    }
    CHECK(std::abs(*pearson(a, b) - 0.8) <= 0.05);
  }
}

TEST_CASE("magnitude_margin_table") {
  SUBCASE("single point collapses with a warning") {
    const std::vector<PredictionRecord> rs = {rec(2.0, 0.5, true, true), rec(2.0, 0.5, false, true),
                                              rec(2.0, 0.5, true, false)};
    const auto t = magnitude_margin_table(rs, 20, 20, false);
    CHECK(t.member.magnitude_bins() == 1);
    CHECK(t.member.margin_bins() == 1);
    CHECK(t.member.count(0, 0) == 2);
    CHECK(t.member.accuracy(0, 0) == 0.5);
    CHECK(t.non_member.count(0, 0) == 1);
    CHECK_FALSE(t.warnings.empty());
  }
  SUBCASE("mass conservation and correlation per class") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PredictionRecord> rs;
    for (int i = 0; i < 500; ++i) {
      const double m = u(rng) * 3.0;
      rs.push_back(rec(m, u(rng), true, u(rng) < 0.6));
      rs.push_back(rec(m, m / 3.0, false, u(rng) < 0.4));
    }
    const auto t = magnitude_margin_table(rs, 20, 10, true);
    CHECK(t.member.total() == 500);
    CHECK(t.non_member.total() == 500);
    CHECK(t.member.counts.size() == 200);
    CHECK(t.member.magnitude_edges == t.non_member.magnitude_edges);
    CHECK(*t.pearson_non_member == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(*t.pearson_member) < 0.15);
    CHECK(t.magnitude_after_projection);
    const std::string csv = to_csv(t.member);
    CHECK(csv.starts_with("mag_lo,mag_hi,margin_lo,margin_hi,count,attack_acc\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 201);
  }
  SUBCASE("missing membership class") {
    const std::vector<PredictionRecord> rs = {rec(1.0, 0.1, true, true)};
    CHECK_THROWS_AS(magnitude_margin_table(rs, 4, 4, false), InputError);
  }
}

TEST_CASE("latency_bench") {
  MlpSpec spec{20, {32}, Activation::Tanh, 0.0, HeadDesign::Srcm, 5, {}};
  const Model m = build_mlp(spec, 0);
  std::mt19937_64 rng(0);
  Matrix batch(16, 20);
  for (double& v : batch.values()) v = std::uniform_real_distribution<double>(0, 1)(rng);
  const auto a = latency_bench(m, batch, 50, 5);
  const auto b = latency_bench(m, batch, 50, 5);
  CHECK(a.iters == 50);
  CHECK(a.mean_ms > 0.0);
  CHECK(std::abs(a.mean_ms - b.mean_ms) <= 3.0 * (a.std_ms + b.std_ms));
  CHECK_THROWS_AS(latency_bench(m, batch, 0, 1), InputError);
  CHECK_THROWS_AS(latency_bench(m, batch, 10, 0), InputError);
}
