#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "avr/sim.hpp"

using namespace avr;
using namespace avr::sim;

namespace {

const std::filesystem::path kRepo = AVR_REPO_DIR;

ModelPool capability_pool(const std::vector<double>& thetas) {
  std::vector<ModelProfile> models;
  int tier = 1;
  Micros price = 100;
  for (double theta : thetas) {
    ModelProfile m;
    m.model_id = "m" + std::to_string(tier);
    m.tier = tier++;
    m.capability = theta;
    m.input_price = price;
    price *= 4;
    models.push_back(m);
  }
  return ModelPool(std::move(models));
}

Scenario small_table4(const std::string& name, std::int64_t n_calls = 20000) {
  Scenario s = load_scenario(kRepo / "scenarios" / (name + ".json"));
  s.n_calls = n_calls;
  return s;
}

}  // namespace

TEST_CASE("correctness probability is a sigmoid in (theta - d) / gamma") {
  CHECK(correctness_probability(0.5, 0.5, 0.1) == 0.5);
  CHECK(correctness_probability(0.4, 0.5, 0.1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(correctness_probability(0.2, 0.5, 1e-6) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(correctness_probability(0.8, 0.5, 1e-6) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(correctness_probability(0.5, 0.5, 0.0), Error);
}

TEST_CASE("oracle policy picks the cheapest sufficient tier") {
  auto pool = capability_pool({0.3, 0.7});
  CHECK(oracle_policy(0.2, pool, 0.05) == 1);
  CHECK(oracle_policy(0.5, pool, 0.3) == std::nullopt);  // 0.8 > 0.7
  CHECK(oracle_policy(0.0, pool, 0.0) == 1);
  CHECK(oracle_policy(0.65, pool, 0.0) == 2);
  CHECK_THROWS_AS(oracle_policy(0.5, pool, -0.1), Error);
}

TEST_CASE("oracle policy equals a brute-force scan over a dense grid") {
  const std::vector<std::vector<double>> pools = {
      {0.2, 0.6}, {0.3, 0.7}, {0.1, 0.5, 0.9}, {0.25, 0.5, 0.75, 0.95}, {0.4, 0.4, 0.8}};
  for (const auto& thetas : pools) {
    auto pool = capability_pool(thetas);
    for (int di = 0; di <= 20; ++di) {
      const double d = di * 0.05;
      for (double delta : {0.0, 0.05, 0.1}) {
        std::optional<int> brute;
        for (const auto& m : pool.models()) {
          if (m.capability >= d + delta) {
            brute = m.tier;
            break;
          }
        }
        CHECK(oracle_policy(d, pool, delta) == brute);
      }
    }
  }
}

TEST_CASE("confidence generator hits the documented bands") {
  BandParams bands;
  bands.easy_noise_rate = 0.0;
  for (std::uint64_t i = 0; i < 500; ++i) {
    CallRng rng(99, i);
    const double cold = generate_confidence(0.5, MemoryMode::cold, bands, rng);
    CHECK(cold >= 0.82);
    CHECK(cold <= 0.84);
    CallRng rng2(99, i);
    const double warm = generate_confidence(0.5, MemoryMode::warm, bands, rng2);
    CHECK(warm >= 0.95);
    CHECK(warm <= 0.96);
    CallRng rng3(99, i);
    const double high = generate_confidence(0.1, MemoryMode::cold, bands, rng3);
    CHECK(high >= 0.93);
    CHECK(high <= 0.97);
    CallRng rng4(99, i);
    const double low = generate_confidence(0.8, MemoryMode::warm, bands, rng4);
    CHECK(low >= 0.70);
    CHECK(low <= 0.82);
  }
}

TEST_CASE("shift-style warm generation clamps at 1") {
  BandParams bands;
  bands.has_warm_band = false;
  bands.memory_shift = 0.30;
  bands.mid_cold_lo = 0.80;
  bands.mid_cold_hi = 0.95;
  bool clamped = false;
  for (std::uint64_t i = 0; i < 200; ++i) {
    CallRng rng(5, i);
    const double warm = generate_confidence(0.5, MemoryMode::warm, bands, rng);
    CHECK(warm <= 1.0);
    if (warm == 1.0) clamped = true;
  }
  CHECK(clamped);
}

TEST_CASE("projection scenarios land on their closed-form expectations") {
  struct Target {
    const char* name;
    double alpha;
    double savings;  // expected value of the estimator, computed by hand
  };
  const Target targets[] = {
      {"table4_cold", 0.35, 0.54725},
      {"table4_warm", 0.15, 0.72025},
      {"table4_warm_difficulty", 0.10, 0.765},
  };
  for (const auto& t : targets) {
    const std::string name = t.name;
    CAPTURE(name);
    SimReport r = run_scenario(small_table4(t.name), 2);
    CHECK(std::abs(r.alpha - t.alpha) < 0.02);
    CHECK(std::abs(r.savings - t.savings) < 0.015);
    CHECK(r.share_small + r.share_large + r.share_guardrail == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("figure4 scenario approximates the illustrative three-tier split") {
  SimReport r = run_scenario(small_table4("figure4_shares"), 2);
  CHECK(r.share_small == doctest::Approx(0.78).epsilon(0.03));
  CHECK(r.share_large == doctest::Approx(0.17).epsilon(0.12));
  CHECK(r.share_guardrail == doctest::Approx(0.05).epsilon(0.10));
}

TEST_CASE("identical scenarios produce byte-identical reports whatever the thread count") {
  Scenario s = small_table4("table4_cold", 30000);
  std::string trace1, trace4;
  SimReport r1 = run_scenario(s, 1, &trace1);
  SimReport r4 = run_scenario(s, 4, &trace4);
  CHECK(r1.to_json().dump() == r4.to_json().dump());
  CHECK(trace1 == trace4);
  SimReport again = run_scenario(s, 3);
  CHECK(again.to_json().dump() == r1.to_json().dump());
}

TEST_CASE("different seeds perturb the sampled world") {
  Scenario s = small_table4("table4_cold", 5000);
  SimReport a = run_scenario(s, 2);
  s.seed += 1;
  SimReport b = run_scenario(s, 2);
  CHECK(a.to_json().dump() != b.to_json().dump());
}

TEST_CASE("measured savings equals the analytical formula when every call probes") {
  Scenario s = small_table4("table4_cold", 20000);
  REQUIRE_FALSE(s.preroute);
  REQUIRE(s.risk_rate == 0.0);
  SimReport r = run_scenario(s, 2);
  const double analytic = savings(r.alpha, s.costs.analytic());
  CHECK(std::abs(r.savings - analytic) < 1e-9);
}

TEST_CASE("a degenerate all-easy world with pre-routing saves the full ratio") {
  Scenario s = small_table4("table4_warm_difficulty", 5000);
  s.preroute = true;
  s.world.difficulty.components = {
      {1.0, MixtureComponent::Dist::uniform, 1, 1, 0.0, 0.001, "trivial"}};
  SimReport r = run_scenario(s, 2);
  CHECK(r.alpha == 0.0);
  CHECK(r.savings == doctest::Approx(1.0 - 0.0405 / 0.27).epsilon(1e-9));
}

TEST_CASE("raising both threshold bounds never lowers the escalation rate") {
  Scenario s = small_table4("table4_cold", 10000);
  double prev_alpha = -1.0;
  for (double bump : {0.0, 0.02, 0.04, 0.06}) {
    Scenario adjusted = s;
    adjusted.thresholds.tau_easy = 0.80 + bump;
    adjusted.thresholds.tau_hard = 0.92 + bump * 0.5;
    SimReport r = run_scenario(adjusted, 2);
    CHECK(r.alpha >= prev_alpha);
    prev_alpha = r.alpha;
  }
}

TEST_CASE("openclaw replay: warm trace keeps everything on the small model") {
  auto turns = load_trace(kRepo / "data" / "openclaw_warm.jsonl");
  auto rates = load_rates(kRepo / "scenarios" / "openclaw_rates.json");
  SimReport r = run_openclaw_replay(turns, rates, "table2_warm");
  CHECK(r.n_calls == 20);
  CHECK(r.escalations == 0);
  CHECK(r.savings == doctest::Approx(0.86).epsilon(0.025));
  CHECK(r.mean_cost_usd * 20 == doctest::Approx(0.0080).epsilon(0.05));
}

TEST_CASE("openclaw replay: cold trace at the headline 17% escalation") {
  auto turns = load_trace(kRepo / "data" / "openclaw_cold_17.jsonl");
  auto rates = load_rates(kRepo / "scenarios" / "openclaw_rates.json");
  SimReport r = run_openclaw_replay(turns, rates, "table2_cold");
  CHECK(r.alpha == doctest::Approx(0.17).epsilon(1e-9));
  CHECK(std::abs(r.savings - 0.69) < 0.02);
}

TEST_CASE("openclaw replay: the per-query-consistent cold variant disagrees, as documented") {
  auto turns = load_trace(kRepo / "data" / "openclaw_cold_table3.jsonl");
  auto rates = load_rates(kRepo / "scenarios" / "openclaw_rates.json");
  SimReport r = run_openclaw_replay(turns, rates, "table2_cold_table3");
  CHECK(r.alpha == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(r.savings == doctest::Approx(0.635).epsilon(0.01));
}

TEST_CASE("replay rejects malformed traces") {
  auto dir = std::filesystem::temp_directory_path();
  auto bad = dir / "avr_bad_trace.jsonl";
  std::ofstream(bad) << "this is not json\n";
  CHECK_THROWS_AS(load_trace(bad), Error);
  auto missing = dir / "avr_missing_field.jsonl";
  std::ofstream(missing) << R"({"turn":1,"kind":"simple"})" << "\n";
  CHECK_THROWS_AS(load_trace(missing), Error);
  std::filesystem::remove(bad);
  std::filesystem::remove(missing);
}

TEST_CASE("replay scenario files bundle trace and rates paths") {
  Scenario s = load_scenario(kRepo / "scenarios" / "table2_cold.json");
  CHECK(s.kind == "replay");
  CHECK(std::filesystem::exists(s.trace_path));
  CHECK(std::filesystem::exists(s.rates_path));
}

TEST_CASE("warming curve starts cold, saturates warm, and never escalates more") {
  Scenario s = small_table4("table4_warm", 5000);
  auto series = warming_curve(s, 12, 2);
  REQUIRE(series.size() == 13);

  Scenario cold = s;
  cold.memory_mode = MemoryMode::cold;
  SimReport cold_report = run_scenario(cold, 2);
  Scenario warm = s;
  warm.memory_mode = MemoryMode::warm;
  SimReport warm_report = run_scenario(warm, 2);

  CHECK(series.front().escalation_rate == doctest::Approx(cold_report.alpha).epsilon(1e-12));
  CHECK(series[10].escalation_rate == doctest::Approx(warm_report.alpha).epsilon(1e-12));
  CHECK(series.back().escalation_rate == doctest::Approx(warm_report.alpha).epsilon(1e-12));
  for (std::size_t i = 1; i < series.size(); ++i)
    CHECK(series[i].escalation_rate <= series[i - 1].escalation_rate + 1e-12);
}

TEST_CASE("memory equalization check") {
  CHECK(check_equalization(0.95, 0.95, 0.0));
  CHECK_FALSE(check_equalization(0.90, 0.95, 0.04));
  CHECK(check_equalization(0.90, 0.95, 0.05));
  CHECK_THROWS_AS(check_equalization(0.9, 0.9, -0.01), Error);
}

TEST_CASE("scenario validation rejects bad mixtures") {
  Scenario s = small_table4("table4_cold", 100);
  s.world.difficulty.components[0].weight = 0.9;  // no longer sums to 1
  CHECK_THROWS_AS(run_scenario(s, 1), Error);
  s = small_table4("table4_cold", 100);
  s.world.difficulty.components[0].lo = 0.5;
  s.world.difficulty.components[0].hi = 0.4;
  CHECK_THROWS_AS(run_scenario(s, 1), Error);
}
