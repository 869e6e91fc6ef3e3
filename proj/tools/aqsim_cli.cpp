// Command-line front end: run scripted protocol scenarios and replay
// transcripts.  Exit codes: 0 success, 2 configuration or input error,
// 3 invariant violation (an honest party was publicly identified, or an
// internal consistency check fired).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aqsim/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_subcommand(const CLI::App* sub, const std::string& config_path,
                   const std::string& out_dir, bool emit) {
  std::ifstream f(config_path);
  if (!f) throw std::invalid_argument("cannot open config " + config_path);
  json j = json::parse(f);

  // Command-line overrides beat the file, then the whole thing validates.
  if (sub->count("--seed")) j["seed"] = sub->get_option("--seed")->as<uint64_t>();
  if (sub->count("--trials"))
    j["trials"] = sub->get_option("--trials")->as<size_t>();
  if (sub->count("--backend"))
    j["backend"] = sub->get_option("--backend")->as<std::string>();
  if (sub->count("--jobs")) j["jobs"] = sub->get_option("--jobs")->as<size_t>();

  aqsim::ScenarioConfig cfg = aqsim::scenario_from_json(j);
  const std::string& name = sub->get_name();
  if (cfg.protocol != name && !(name == "aqa" && cfg.protocol == "aqa-trap"))
    throw std::invalid_argument("config protocol '" + cfg.protocol +
                                "' does not match subcommand '" + name + "'");
  if (emit && out_dir.empty())
    throw std::invalid_argument("--emit-transcripts needs --out");
  if (!out_dir.empty()) fs::create_directories(out_dir);

  aqsim::TranscriptSink sink;
  if (emit) {
    sink = [&out_dir](size_t trial, const std::vector<json>& lines) {
      char fname[32];
      std::snprintf(fname, sizeof(fname), "transcript-%05zu.jsonl", trial);
      std::ofstream o(fs::path(out_dir) / fname);
      for (const json& l : lines) o << l.dump() << "\n";
    };
  }

  aqsim::TrialStats stats = aqsim::run_scenario(cfg, sink);
  std::cout << aqsim::stats_csv_header() << "\n"
            << aqsim::stats_csv_row(stats) << "\n";
  if (!out_dir.empty()) {
    std::ofstream js(fs::path(out_dir) / "stats.json");
    js << aqsim::stats_to_json(stats).dump(2) << "\n";
    std::ofstream cs(fs::path(out_dir) / "stats.csv");
    cs << aqsim::stats_csv_header() << "\n"
       << aqsim::stats_csv_row(stats) << "\n";
  }
  if (stats.identified_wrong > 0) {
    std::cerr << "invariant violated: " << stats.identified_wrong
              << " trial(s) publicly identified an honest party\n";
    return 3;
  }
  return 0;
}

int run_replay(const std::string& in_path) {
  aqsim::ObserverVerdict v = aqsim::observer_replay_file(in_path);
  json out{{"aborted", v.aborted},
           {"completed", v.completed},
           {"named", v.named}};
  if (v.completed)
    out["r_out"] = {{"bits", v.r_out_hex}, {"count", v.r_out_count}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Protocol simulator: auditable quantum authentication and "
      "multi-party quantum computation with public verdicts"};
  app.require_subcommand(1);

  std::string config_path, out_dir, backend, in_path;
  uint64_t seed = 0;
  size_t trials = 0, jobs = 0;
  bool emit = false;

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"aqa", "auditable authenticated send (Clifford or trap form)"},
      {"ie", "input encoding into shared authenticated blocks"},
      {"rqc", "encoded circuit with checked public measurements"},
      {"mpqc", "full computation plus audited output delivery"},
      {"ideal-vs-real", "honest run compared against the ideal functionality"}};
  for (const auto& [name, desc] : kinds) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--trials", trials, "override the trial count");
    sub->add_option("--backend", backend, "override the state backend")
        ->check(CLI::IsMember({"stabilizer", "dense"}));
    sub->add_option("--jobs", jobs, "trial-level worker threads");
    sub->add_option("--out", out_dir, "directory for stats.json / stats.csv");
    sub->add_flag("--emit-transcripts", emit,
                  "write one transcript-N.jsonl per trial under --out");
  }
  CLI::App* replay =
      app.add_subcommand("replay", "recompute the public verdict from a "
                                   "transcript alone");
  replay->add_option("--in", in_path, "transcript JSON-lines file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (sub == replay) return run_replay(in_path);
    return run_subcommand(sub, config_path, out_dir, emit);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
