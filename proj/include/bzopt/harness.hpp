#pragma once

// JSON run configurations, the named scenario library, and trace/report
// export used by the command-line tool.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bzopt/consensus.hpp"
#include "bzopt/decoding.hpp"

namespace bzopt {

inline constexpr int kSchemaVersion = 1;

/// Every schema or consistency problem found in a configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class Algorithm { kTrimmedConsensus, kGradientDecoding };

std::string_view to_string(Algorithm a);

struct AnalysisOptions {
  bool enabled = false;
  std::size_t window_start = 0;
  std::size_t window = 30;
  std::size_t uub_rounds = 200;
  std::optional<double> x_ref;
};

struct RunConfig {
  nlohmann::json document;
  std::string name;
  std::string description;
  Algorithm algorithm = Algorithm::kTrimmedConsensus;
  Scenario scenario;
  bool expected_failure = false;
  bool export_messages = false;
  AnalysisOptions analysis;
  std::string hash;
};

/// FNV-1a over the canonical (key-sorted, compact) dump.
std::string config_hash(const nlohmann::json& doc);

/// Parses and validates a configuration document, including the algorithm's
/// preconditions unless disabled. Throws ConfigError listing every problem.
RunConfig parse_run_config(const nlohmann::json& doc, bool check_preconditions = true);

nlohmann::json load_json_file(const std::filesystem::path& path);

/// Applies "a.b.c=value" to `doc`. The value is parsed as JSON when possible
/// and kept as a string otherwise. Array elements are addressed by index.
void apply_override(nlohmann::json& doc, std::string_view assignment);

struct LibraryEntry {
  std::string name;
  std::string description;
  std::function<nlohmann::json()> build;
};

const std::vector<LibraryEntry>& scenario_library();
/// Throws std::out_of_range for unknown names.
nlohmann::json library_config(std::string_view name);

/// Optimum set of the average of the input functions: exact for piecewise
/// linear collections, bisection otherwise.
Interval global_optimum(const FnCollection& fns);

struct RunResult {
  nlohmann::json summary;
  Trace trace;
  std::optional<Algorithm1Trace> decoding;
};

/// Executes a validated configuration without touching the filesystem.
RunResult execute(const RunConfig& config);

/// Executes and writes config.json, trace.csv, summary.json (plus
/// messages.csv / decode.csv when applicable) into `out_dir`.
nlohmann::json run_to_directory(const RunConfig& config, const std::filesystem::path& out_dir);

/// Full verification battery for a trimmed-consensus run; "pass" is the
/// overall verdict.
nlohmann::json analysis_report(const RunConfig& config, const Trace& trace);

/// Re-executes the stored config, confirms it reproduces trace.csv, writes
/// analysis.json and y.csv, and returns the report.
nlohmann::json analyze_directory(const std::filesystem::path& dir);

/// Condition 1 and Condition 2 verdicts (with witnesses) for the graph,
/// fault bound and assignment sparsity of `config`.
nlohmann::json check_graph_report(const RunConfig& config);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

void write_trace_csv(const Trace& trace, std::ostream& os);

}  // namespace bzopt
