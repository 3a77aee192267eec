#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "avr/sim.hpp"

namespace {

void write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    std::exit(1);
  }
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AVR offline simulator: analytical cost/accuracy projections"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a Monte Carlo routing scenario");
  std::string run_scenario_path, run_out, run_trace, run_csv;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::int64_t> run_calls;
  int run_threads = 2;
  run->add_option("--scenario", run_scenario_path, "Scenario json file")->required();
  run->add_option("--out", run_out, "Write the report json here (default stdout)");
  run->add_option("--trace", run_trace, "Write a per-call jsonl trace here");
  run->add_option("--csv", run_csv, "Also write a one-row csv summary here");
  run->add_option("--seed", run_seed, "Override the scenario seed");
  run->add_option("--calls", run_calls, "Override n_calls");
  run->add_option("--threads", run_threads, "Worker threads (results are identical for any value)");

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a fixed-confidence trace against rates");
  std::string rp_scenario, rp_trace, rp_rates, rp_out;
  std::optional<double> rp_threshold;
  replay->add_option("--scenario", rp_scenario, "Replay scenario json (bundles trace + rates)");
  replay->add_option("--trace", rp_trace, "Trace jsonl file");
  replay->add_option("--rates", rp_rates, "Rates json file");
  replay->add_option("--threshold", rp_threshold, "Override the acceptance threshold");
  replay->add_option("--out", rp_out, "Write the report json here (default stdout)");

  // warming
  auto* warming = app.add_subcommand("warming", "Emit the hypothetical warming curve as CSV");
  std::string wm_scenario, wm_out;
  int wm_apps = 10;
  int wm_threads = 2;
  warming->add_option("--scenario", wm_scenario, "Scenario json file")->required();
  warming->add_option("--apps", wm_apps, "Interactions per application to sweep");
  warming->add_option("--out", wm_out, "Write the CSV here (default stdout)");
  warming->add_option("--threads", wm_threads, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      avr::sim::Scenario s = avr::sim::load_scenario(run_scenario_path);
      if (run_seed) s.seed = *run_seed;
      if (run_calls) s.n_calls = *run_calls;
      std::string trace;
      avr::sim::SimReport report =
          avr::sim::run_scenario(s, run_threads, run_trace.empty() ? nullptr : &trace);
      if (!run_trace.empty()) {
        std::ofstream out(run_trace, std::ios::binary | std::ios::trunc);
        out << trace;
      }
      if (!run_csv.empty()) {
        std::ofstream csv(run_csv, std::ios::binary | std::ios::trunc);
        csv << "name,n_calls,alpha,savings,mean_cost_usd,share_small,share_large,share_guardrail\n"
            << report.name << "," << report.n_calls << "," << report.alpha << "," << report.savings
            << "," << report.mean_cost_usd << "," << report.share_small << ","
            << report.share_large << "," << report.share_guardrail << "\n";
      }
      write_or_print(report.to_json().dump(2) + "\n", run_out);
    } else if (replay->parsed()) {
      std::string name = "replay";
      std::string note;
      if (!rp_scenario.empty()) {
        avr::sim::Scenario s = avr::sim::load_scenario(rp_scenario);
        if (s.kind != "replay") {
          std::cerr << "scenario " << rp_scenario << " is not a replay scenario\n";
          return 1;
        }
        rp_trace = s.trace_path.string();
        rp_rates = s.rates_path.string();
        name = s.name;
        note = s.note;
      }
      if (rp_trace.empty() || rp_rates.empty()) {
        std::cerr << "replay needs --scenario, or --trace plus --rates\n";
        return 1;
      }
      avr::sim::ReplayRates rates = avr::sim::load_rates(rp_rates);
      if (rp_threshold) rates.threshold = *rp_threshold;
      auto turns = avr::sim::load_trace(rp_trace);
      avr::sim::SimReport report = avr::sim::run_openclaw_replay(turns, rates, name, note);
      write_or_print(report.to_json().dump(2) + "\n", rp_out);
    } else if (warming->parsed()) {
      avr::sim::Scenario s = avr::sim::load_scenario(wm_scenario);
      auto series = avr::sim::warming_curve(s, wm_apps, wm_threads);
      std::string csv = "# hypothetical warming projection (" + s.name + ")\n";
      csv += "interaction,escalation_rate,savings\n";
      for (const auto& p : series) {
        csv += std::to_string(p.interaction) + "," + std::to_string(p.escalation_rate) + "," +
               std::to_string(p.savings) + "\n";
      }
      write_or_print(csv, wm_out);
    }
  } catch (const avr::Error& e) {
    std::cerr << "avr-sim: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "avr-sim: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
