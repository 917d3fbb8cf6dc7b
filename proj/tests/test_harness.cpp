#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "bzopt/harness.hpp"

using namespace bzopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bzopt_test_" + name);
  fs::remove_all(p);
  return p;
}

json small_k4() {
  return {{"name", "small-k4"},
          {"algorithm", "alg2"},
          {"graph", {{"kind", "complete"}, {"n", 4}}},
          {"faulty", {{"members", {3}}, {"f", 1}}},
          {"adversary", {{"kind", "random_uniform"}, {"lo", -5.0}, {"hi", 5.0}}},
          {"assignment", {{"kind", "zero_pattern"}, {"zeros", {{0}, {1}, {2}, {3}}}}},
          {"functions",
           {{{"kind", "flat_bottom"}, {"a", 0.0}, {"b", 1.0}},
            {{"kind", "flat_bottom"}, {"a", 0.5}, {"b", 2.0}},
            {{"kind", "abs_shift"}, {"center", 0.75}},
            {{"kind", "flat_bottom"}, {"a", -1.0}, {"b", 1.0}}}},
          {"schedule", {{"kind", "harmonic"}, {"a", 1.0}}},
          {"x0", {0.0, 3.0, -2.0, 0.0}},
          {"rounds", 300},
          {"seed", 11},
          {"analysis", {{"enabled", true}}}};
}

std::vector<std::string> problems_of(const json& doc, bool preconditions = true) {
  try {
    (void)parse_run_config(doc, preconditions);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, ParsesAHandWrittenDocument) {
  const auto cfg = parse_run_config(small_k4());
  EXPECT_EQ(cfg.name, "small-k4");
  EXPECT_EQ(cfg.algorithm, Algorithm::kTrimmedConsensus);
  EXPECT_EQ(cfg.scenario.n(), 4U);
  EXPECT_EQ(cfg.scenario.faulty.bound, 1U);
  EXPECT_TRUE(cfg.scenario.faulty.members.contains(3));
  EXPECT_EQ(cfg.scenario.functions.size(), 4U);
  EXPECT_EQ(sparsity_by_row_zeros(cfg.scenario.assignment).value, 2U);
  EXPECT_EQ(cfg.scenario.subgrad_rule, SubgradRule::kMidpoint);
  EXPECT_TRUE(cfg.analysis.enabled);
  EXPECT_EQ(cfg.analysis.window, 30U);
}

TEST(Config, ScalarStartIsBroadcastToEveryAgent) {
  auto doc = small_k4();
  doc["x0"] = 1.5;
  EXPECT_EQ(parse_run_config(doc).scenario.x0, std::vector<double>(4, 1.5));
}

TEST(Config, ReportsEveryProblem) {
  auto doc = small_k4();
  doc["rounds"] = -4;
  doc["graph"]["kind"] = "torus";
  doc["adversary"]["kind"] = "sneaky";
  doc["functions"][1]["kind"] = "quadratic";
  doc["schedule"]["p"] = 0.25;
  doc["colour"] = "blue";
  const auto problems = problems_of(doc);
  EXPECT_GE(problems.size(), 6U);
  for (const char* field : {"rounds", "graph.kind", "adversary.kind", "functions[1]", "schedule", "colour"})
    EXPECT_TRUE(mentions(problems, field)) << field;
}

TEST(Config, AssignmentShapeMustMatchTheGraph) {
  auto doc = small_k4();
  doc["assignment"] = {{"kind", "matrix"}, {"rows", {{1, 1, 1}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}};
  const auto problems = problems_of(doc);
  ASSERT_FALSE(problems.empty());
  EXPECT_TRUE(mentions(problems, "assignment")) << problems.front();
}

TEST(Config, PreconditionsAreReportedTogether) {
  auto doc = small_k4();
  doc["x0"] = {0.0, 1.0};
  doc["faulty"] = {{"members", {0, 1}}, {"f", 1}};
  const auto problems = problems_of(doc);
  EXPECT_GE(problems.size(), 2U);
  EXPECT_TRUE(mentions(problems, "x0"));
  EXPECT_TRUE(mentions(problems, "faulty"));
  EXPECT_TRUE(problems_of(doc, false).empty());
}

TEST(Config, AnalysisScopeIsEnforced) {
  auto doc = small_k4();
  doc["graph"]["n"] = 8;
  doc["x0"] = 0.0;
  doc["assignment"] = {{"kind", "sparsest"}, {"s", 1}};
  doc["functions"] = {{{"kind", "abs_shift"}, {"center", 0.0}}};
  EXPECT_TRUE(mentions(problems_of(doc), "analysis.enabled"));
}

TEST(Config, HashIgnoresKeyOrder) {
  const json a = json::parse(R"({"b": 1, "a": {"y": 2, "x": [1, 2]}})");
  const json b = json::parse(R"({"a": {"x": [1, 2], "y": 2}, "b": 1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(json::parse(R"({"a": {"x": [2, 1], "y": 2}, "b": 1})")));
  EXPECT_EQ(config_hash(a).size(), 16U);
}

TEST(Override, NestedArrayAndString) {
  json doc = small_k4();
  apply_override(doc, "rounds=12");
  apply_override(doc, "adversary.hi=2.5");
  apply_override(doc, "functions.2.center=-1");
  apply_override(doc, "name=renamed run");
  apply_override(doc, "graph={\"kind\":\"cycle\",\"n\":4}");
  EXPECT_EQ(doc["rounds"], 12);
  EXPECT_EQ(doc["adversary"]["hi"], 2.5);
  EXPECT_EQ(doc["functions"][2]["center"], -1);
  EXPECT_EQ(doc["name"], "renamed run");
  EXPECT_EQ(doc["graph"]["kind"], "cycle");
  EXPECT_THROW(apply_override(doc, "rounds"), ConfigError);
  EXPECT_THROW(apply_override(doc, "=3"), ConfigError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0, 123456789.125}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(TraceCsv, LayoutAndRows) {
  auto doc = small_k4();
  doc["rounds"] = 2;
  const auto result = execute(parse_run_config(doc));
  std::ostringstream os;
  write_trace_csv(result.trace, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "round,agent,value,is_faulty");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3U * 4U);
  EXPECT_NE(os.str().find("\n0,3,0,1\n"), std::string::npos);
}

TEST(RunDirectory, WritesFilesAndRoundTripsThroughAnalyze) {
  const auto dir = scratch("roundtrip");
  const auto cfg = parse_run_config(small_k4());
  const json summary = run_to_directory(cfg, dir);
  for (const char* f : {"config.json", "trace.csv", "summary.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_FALSE(fs::exists(dir / "messages.csv"));
  EXPECT_EQ(summary["config_hash"], cfg.hash);
  EXPECT_EQ(json::parse(slurp(dir / "summary.json"))["config_hash"], cfg.hash);
  EXPECT_EQ(config_hash(json::parse(slurp(dir / "config.json"))), cfg.hash);
  EXPECT_TRUE(summary["analysis_pass"].get<bool>());

  const json rep = analyze_directory(dir);
  EXPECT_TRUE(rep["pass"].get<bool>()) << rep.dump(2);
  EXPECT_TRUE(rep["summary_hash_matches"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "analysis.json"));
  EXPECT_TRUE(fs::exists(dir / "y.csv"));
  fs::remove_all(dir);
}

TEST(RunDirectory, ByteIdenticalAcrossRuns) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto cfg = parse_run_config(small_k4());
  run_to_directory(cfg, a);
  run_to_directory(cfg, b);
  EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunDirectory, AnalyzeRejectsATamperedTrace) {
  const auto dir = scratch("tamper");
  run_to_directory(parse_run_config(small_k4()), dir);
  {
    std::ofstream out(dir / "trace.csv", std::ios::app);
    out << "301,0,0,0\n";
  }
  EXPECT_THROW(analyze_directory(dir), std::runtime_error);
  fs::remove(dir / "summary.json");
  EXPECT_THROW(analyze_directory(dir), std::runtime_error);
  fs::remove_all(dir);
}

TEST(RunDirectory, MessagesExportedOnRequest) {
  const auto dir = scratch("messages");
  auto doc = small_k4();
  doc["export_messages"] = true;
  doc["rounds"] = 3;
  run_to_directory(parse_run_config(doc), dir);
  ASSERT_TRUE(fs::exists(dir / "messages.csv"));
  std::istringstream in(slurp(dir / "messages.csv"));
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3U * 12U);  // one row per directed edge of K4 per round
  fs::remove_all(dir);
}

TEST(Library, EveryEntryBehavesAsLabelled) {
  ASSERT_GE(scenario_library().size(), 8U);
  for (const auto& entry : scenario_library()) {
    SCOPED_TRACE(entry.name);
    const auto cfg = parse_run_config(library_config(entry.name));
    const auto result = execute(cfg);
    const auto& s = result.summary;
    EXPECT_EQ(s["expected_failure"].get<bool>(), s["failure_observed"].get<bool>()) << s.dump(2);
    if (s.contains("analysis_pass")) {
      EXPECT_TRUE(s["analysis_pass"].get<bool>());
    }
  }
  EXPECT_THROW(library_config("no-such-scenario"), std::out_of_range);
}

TEST(Library, ImpossibilityDemoIsFlagged) {
  const auto cfg = parse_run_config(library_config("impossibility-demo"));
  EXPECT_TRUE(cfg.expected_failure);
  const auto s = execute(cfg).summary;
  EXPECT_GE(s["final_dist_to_x"].get<double>(), 0.2);
}

TEST(CheckGraph, CompleteGraphHolds) {
  auto doc = small_k4();
  doc["assignment"] = {{"kind", "zero_pattern"}, {"zeros", {{0}, {1}, {2}, {3}}}};
  const json rep = check_graph_report(parse_run_config(doc, false));
  EXPECT_EQ(rep["sparsity"], 2);
  EXPECT_TRUE(rep["condition1"]["holds"].get<bool>());
  EXPECT_TRUE(rep["condition2"]["holds"].get<bool>());
}

TEST(CheckGraph, StarFailsWithWitnesses) {
  auto doc = small_k4();
  doc["graph"] = {{"kind", "star_out"}, {"n", 4}};
  const json rep = check_graph_report(parse_run_config(doc, false));
  EXPECT_FALSE(rep["condition1"]["holds"].get<bool>());
  EXPECT_TRUE(rep["condition1"].contains("witness"));
  EXPECT_FALSE(rep["condition2"]["holds"].get<bool>());
  const auto& w = rep["condition2"]["witness"];
  EXPECT_FALSE(w["left"].empty());
  EXPECT_FALSE(w["right"].empty());
}
