// Command-line front end: run, check-graph, analyze, list-scenarios,
// export-scenario.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "bzopt/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitDecode = 3;

struct Job {
  std::string label;
  json document;
};

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("BZOPT_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

void print_problems(const std::string& label, const bzopt::ConfigError& e) {
  std::cerr << label << ": invalid configuration\n";
  for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
}

std::vector<Job> collect_jobs(const std::vector<std::string>& paths, const std::vector<std::string>& scenarios,
                              const std::vector<std::string>& overrides) {
  std::vector<Job> jobs;
  for (const auto& p : paths) jobs.push_back({p, bzopt::load_json_file(p)});
  for (const auto& name : scenarios) jobs.push_back({name, bzopt::library_config(name)});
  for (auto& job : jobs) {
    for (const auto& o : overrides) bzopt::apply_override(job.document, o);
  }
  return jobs;
}

int run_one(const Job& job, const fs::path& root, std::string& report) {
  try {
    const bzopt::RunConfig config = bzopt::parse_run_config(job.document);
    const fs::path dir = root / config.name;
    const json summary = bzopt::run_to_directory(config, dir);
    report = job.label + ": wrote " + dir.string() + " (spread " + bzopt::format_double(summary["final_spread"]) +
             ", dist_to_X " + bzopt::format_double(summary["final_dist_to_x"]) +
             (config.expected_failure ? ", expected failure" : "") + ")";
    if (summary.contains("analysis_pass") && !summary["analysis_pass"].get<bool>()) {
      report += "; analysis checks FAILED";
      return kExitFailure;
    }
    return kExitOk;
  } catch (const bzopt::ConfigError& e) {
    report = job.label + ": invalid configuration";
    for (const auto& p : e.problems()) report += "\n  " + p;
    return kExitInvalid;
  } catch (const bzopt::ScenarioError& e) {
    report = job.label + ": invalid scenario";
    for (const auto& p : e.problems()) report += "\n  " + p;
    return kExitInvalid;
  } catch (const bzopt::DecodeError& e) {
    report = job.label + ": decode failure: " + e.what();
    return kExitDecode;
  } catch (const std::exception& e) {
    report = job.label + ": " + e.what();
    return kExitFailure;
  }
}

int cmd_run(const std::vector<std::string>& paths, const std::vector<std::string>& scenarios,
            const std::vector<std::string>& overrides, const std::string& out, unsigned jobs_flag) {
  std::vector<Job> jobs;
  try {
    jobs = collect_jobs(paths, scenarios, overrides);
  } catch (const bzopt::ConfigError& e) {
    print_problems("run", e);
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "run: " << e.what() << "\n";
    return kExitInvalid;
  }
  if (jobs.empty()) {
    std::cerr << "run: give at least one config path or --scenario\n";
    return kExitInvalid;
  }
  const fs::path root = output_root(out);
  std::vector<int> codes(jobs.size(), kExitOk);
  std::vector<std::string> reports(jobs.size());
  std::atomic<std::size_t> next{0};
  const unsigned workers = std::max(1U, std::min<unsigned>(jobs_flag, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) codes[i] = run_one(jobs[i], root, reports[i]);
    });
  }
  for (auto& t : pool) t.join();
  int worst = kExitOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    (codes[i] == kExitOk ? std::cout : std::cerr) << reports[i] << "\n";
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

int cmd_check_graph(const std::string& path, const std::string& scenario, const std::vector<std::string>& overrides) {
  try {
    json doc = path.empty() ? bzopt::library_config(scenario) : bzopt::load_json_file(path);
    for (const auto& o : overrides) bzopt::apply_override(doc, o);
    const bzopt::RunConfig config = bzopt::parse_run_config(doc, false);
    const json rep = bzopt::check_graph_report(config);
    std::cout << rep.dump(2) << "\n";
    return kExitOk;
  } catch (const bzopt::ConfigError& e) {
    print_problems("check-graph", e);
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "check-graph: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_analyze(const std::string& dir) {
  try {
    const json rep = bzopt::analyze_directory(dir);
    const bool pass = rep["pass"].get<bool>();
    std::cout << (pass ? "PASS" : "FAIL") << " analysis of " << dir << " (report in "
              << (fs::path(dir) / "analysis.json").string() << ")\n";
    return pass ? kExitOk : kExitFailure;
  } catch (const bzopt::ConfigError& e) {
    print_problems("analyze", e);
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "analyze: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-resilient distributed optimization simulator"};
  app.require_subcommand(1);

  std::vector<std::string> run_paths, run_scenarios, run_overrides;
  std::string run_out;
  unsigned run_jobs = 1;
  auto* run = app.add_subcommand("run", "Execute configurations and write traces");
  run->add_option("configs", run_paths, "Config JSON files");
  run->add_option("--scenario", run_scenarios, "Library scenario name (repeatable)");
  run->add_option("--set", run_overrides, "Override a field, e.g. --set rounds=100 (repeatable)");
  run->add_option("--out", run_out, "Output root (default $BZOPT_OUTPUT_ROOT or ./runs)");
  run->add_option("--jobs", run_jobs, "Configs to run in parallel")->check(CLI::PositiveNumber);

  std::string cg_path, cg_scenario;
  std::vector<std::string> cg_overrides;
  auto* cg = app.add_subcommand("check-graph", "Print Condition 1 and Condition 2 verdicts");
  auto* cg_path_opt = cg->add_option("config", cg_path, "Config JSON file");
  auto* cg_scen_opt = cg->add_option("--scenario", cg_scenario, "Library scenario name");
  cg->add_option("--set", cg_overrides, "Override a field (repeatable)");
  cg_path_opt->excludes(cg_scen_opt);

  std::string an_dir;
  auto* an = app.add_subcommand("analyze", "Run the matrix-analysis checks on a run directory");
  an->add_option("dir", an_dir, "Directory written by run")->required();

  auto* ls = app.add_subcommand("list-scenarios", "List library scenarios");

  std::string ex_name;
  auto* ex = app.add_subcommand("export-scenario", "Print a library scenario as JSON");
  ex->add_option("name", ex_name, "Scenario name")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(run_paths, run_scenarios, run_overrides, run_out, run_jobs);
  if (*cg) {
    if (cg_path.empty() && cg_scenario.empty()) {
      std::cerr << "check-graph: give a config path or --scenario\n";
      return kExitInvalid;
    }
    return cmd_check_graph(cg_path, cg_scenario, cg_overrides);
  }
  if (*an) return cmd_analyze(an_dir);
  if (*ls) {
    for (const auto& e : bzopt::scenario_library()) std::cout << e.name << "\t" << e.description << "\n";
    return kExitOk;
  }
  if (*ex) {
    try {
      std::cout << bzopt::library_config(ex_name).dump(2) << "\n";
      return kExitOk;
    } catch (const std::exception& e) {
      std::cerr << "export-scenario: " << e.what() << "\n";
      return kExitInvalid;
    }
  }
  return kExitFailure;
}
