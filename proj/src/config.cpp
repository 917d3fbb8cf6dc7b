#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bzopt/analysis.hpp"
#include "bzopt/harness.hpp"

namespace bzopt {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

// Top-level fields are reported by their bare name.
std::string child(const std::string& path, const std::string& key) {
  return path == "config" ? key : path + "." + key;
}

// Collects problems while walking a document so that every error is reported.
class Reader {
 public:
  std::vector<std::string> problems;

  void fail(const std::string& path, const std::string& message) { problems.push_back(path + ": " + message); }

  void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) return;
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& item : obj.items()) {
      if (!allowed.count(item.key())) fail(child(path, item.key()), "unknown field");
    }
  }

  const json* field(const json& obj, const std::string& path, const char* key, bool required) {
    if (!obj.is_object()) {
      fail(path, "expected an object");
      return nullptr;
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(child(path, key), "missing required field");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& obj, const std::string& path, const char* key,
                               std::optional<double> fallback = {}) {
    const json* v = field(obj, path, key, !fallback.has_value());
    if (!v) return fallback;
    if (!v->is_number()) {
      fail(child(path, key), "expected a number");
      return std::nullopt;
    }
    const double d = v->get<double>();
    if (!std::isfinite(d)) {
      fail(child(path, key), "must be finite");
      return std::nullopt;
    }
    return d;
  }

  std::optional<std::size_t> count(const json& obj, const std::string& path, const char* key,
                                   std::optional<std::size_t> fallback = {}) {
    const json* v = field(obj, path, key, !fallback.has_value());
    if (!v) return fallback;
    return as_count(*v, child(path, key));
  }

  std::optional<std::size_t> as_count(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::size_t>(v.get<long long>());
    fail(path, "expected a nonnegative integer");
    return std::nullopt;
  }

  std::optional<bool> boolean(const json& obj, const std::string& path, const char* key, bool fallback) {
    const json* v = field(obj, path, key, false);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      fail(child(path, key), "expected true or false");
      return std::nullopt;
    }
    return v->get<bool>();
  }

  std::optional<std::string> string(const json& obj, const std::string& path, const char* key,
                                    std::optional<std::string> fallback = {}) {
    const json* v = field(obj, path, key, !fallback.has_value());
    if (!v) return fallback;
    if (!v->is_string()) {
      fail(child(path, key), "expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<std::vector<std::size_t>> counts(const json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "expected an array of nonnegative integers");
      return std::nullopt;
    }
    std::vector<std::size_t> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto c = as_count(v[i], path + "[" + std::to_string(i) + "]");
      if (c) out.push_back(*c); else ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<std::vector<double>> numbers(const json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        fail(path + "[" + std::to_string(i) + "]", "expected a finite number");
        ok = false;
      } else {
        out.push_back(v[i].get<double>());
      }
    }
    if (!ok) return std::nullopt;
    return out;
  }

  // Runs `build`, turning library validation exceptions into problems at `path`.
  template <typename Build>
  auto guarded(const std::string& path, Build&& build) -> std::optional<decltype(build())> {
    try {
      return build();
    } catch (const std::exception& e) {
      fail(path, e.what());
      return std::nullopt;
    }
  }
};

std::optional<DiGraph> parse_graph(Reader& rd, const json& doc) {
  const json* g = rd.field(doc, "config", "graph", true);
  if (!g) return std::nullopt;
  const std::string path = "graph";
  auto kind = rd.string(*g, path, "kind");
  if (!kind) return std::nullopt;
  if (*kind == "complete" || *kind == "cycle" || *kind == "star_out") {
    rd.only_keys(*g, path, {"kind", "n"});
    auto n = rd.count(*g, path, "n");
    if (!n) return std::nullopt;
    return rd.guarded(path, [&] {
      if (*n == 0 || *n > kMaxAgents) throw GraphError("n must lie in 1..64");
      if (*kind == "complete") return DiGraph::complete(*n);
      if (*kind == "cycle") return DiGraph::cycle(*n);
      return DiGraph::star_out(*n);
    });
  }
  if (*kind == "edges") {
    rd.only_keys(*g, path, {"kind", "n", "edges"});
    auto n = rd.count(*g, path, "n");
    const json* edges = rd.field(*g, path, "edges", true);
    if (!n || !edges) return std::nullopt;
    if (!edges->is_array()) {
      rd.fail(path + ".edges", "expected an array of [from, to] pairs");
      return std::nullopt;
    }
    std::vector<Edge> list;
    bool ok = true;
    for (std::size_t e = 0; e < edges->size(); ++e) {
      const std::string ep = path + ".edges[" + std::to_string(e) + "]";
      auto pair = rd.counts((*edges)[e], ep);
      if (!pair || pair->size() != 2) {
        if (pair) rd.fail(ep, "expected exactly two agent ids");
        ok = false;
        continue;
      }
      list.push_back({(*pair)[0], (*pair)[1]});
    }
    if (!ok) return std::nullopt;
    return rd.guarded(path, [&] {
      if (*n == 0 || *n > kMaxAgents) throw GraphError("n must lie in 1..64");
      return DiGraph(*n, list);
    });
  }
  if (*kind == "adjacency") {
    rd.only_keys(*g, path, {"kind", "rows"});
    const json* rows = rd.field(*g, path, "rows", true);
    if (!rows) return std::nullopt;
    if (!rows->is_array() || rows->empty()) {
      rd.fail(path + ".rows", "expected a nonempty square 0/1 matrix");
      return std::nullopt;
    }
    const std::size_t n = rows->size();
    std::vector<Edge> list;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string rp = path + ".rows[" + std::to_string(i) + "]";
      auto row = rd.counts((*rows)[i], rp);
      if (!row) {
        ok = false;
        continue;
      }
      if (row->size() != n) {
        rd.fail(rp, "has " + std::to_string(row->size()) + " entries, expected " + std::to_string(n));
        ok = false;
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if ((*row)[j] > 1) {
          rd.fail(rp, "entries must be 0 or 1");
          ok = false;
        } else if ((*row)[j] == 1) {
          list.push_back({i, j});
        }
      }
    }
    if (!ok) return std::nullopt;
    return rd.guarded(path, [&] { return DiGraph(n, list); });
  }
  rd.fail(path + ".kind", "unknown graph kind '" + *kind + "' (expected complete, cycle, star_out, edges, adjacency)");
  return std::nullopt;
}

std::optional<FaultySet> parse_faulty(Reader& rd, const json& doc) {
  const json* f = rd.field(doc, "config", "faulty", false);
  if (!f) return FaultySet{};
  const std::string path = "faulty";
  rd.only_keys(*f, path, {"members", "f"});
  std::optional<std::vector<std::size_t>> members = std::vector<std::size_t>{};
  if (const json* m = rd.field(*f, path, "members", false)) members = rd.counts(*m, path + ".members");
  if (!members) return std::nullopt;
  auto bound = rd.count(*f, path, "f", members->size());
  if (!bound) return std::nullopt;
  return rd.guarded(path + ".members", [&] { return FaultySet{AgentSet(*members), *bound}; });
}

std::optional<AdversarySpec> parse_adversary(Reader& rd, const json& doc) {
  const json* a = rd.field(doc, "config", "adversary", false);
  if (!a) return AdversarySpec::constant(0.0);
  const std::string path = "adversary";
  auto kind_name = rd.string(*a, path, "kind");
  if (!kind_name) return std::nullopt;
  auto kind = rd.guarded(path + ".kind", [&] { return parse_adversary_kind(*kind_name); });
  if (!kind) return std::nullopt;
  switch (*kind) {
    case AdversarySpec::Kind::kCrash: {
      rd.only_keys(*a, path, {"kind", "t0"});
      auto t0 = rd.count(*a, path, "t0", 0);
      if (!t0) return std::nullopt;
      return AdversarySpec::crash(*t0);
    }
    case AdversarySpec::Kind::kConstant: {
      rd.only_keys(*a, path, {"kind", "value"});
      auto v = rd.number(*a, path, "value");
      if (!v) return std::nullopt;
      return AdversarySpec::constant(*v);
    }
    case AdversarySpec::Kind::kRandomUniform: {
      rd.only_keys(*a, path, {"kind", "lo", "hi"});
      auto lo = rd.number(*a, path, "lo");
      auto hi = rd.number(*a, path, "hi");
      if (!lo || !hi) return std::nullopt;
      return AdversarySpec::random_uniform(*lo, *hi);
    }
    case AdversarySpec::Kind::kSplit: {
      rd.only_keys(*a, path, {"kind", "low", "high", "low_receivers"});
      auto lo = rd.number(*a, path, "low");
      auto hi = rd.number(*a, path, "high");
      std::optional<AgentSet> receivers;
      if (const json* r = rd.field(*a, path, "low_receivers", false)) {
        auto ids = rd.counts(*r, path + ".low_receivers");
        if (!ids) return std::nullopt;
        receivers = rd.guarded(path + ".low_receivers", [&] { return AgentSet(*ids); });
        if (!receivers) return std::nullopt;
      }
      if (!lo || !hi) return std::nullopt;
      return AdversarySpec::split(*lo, *hi, receivers);
    }
    case AdversarySpec::Kind::kMaxSpread:
      rd.only_keys(*a, path, {"kind"});
      return AdversarySpec::max_spread();
  }
  return std::nullopt;
}

std::optional<FnCollection> parse_functions(Reader& rd, const json& doc) {
  const json* fs = rd.field(doc, "config", "functions", true);
  if (!fs) return std::nullopt;
  if (!fs->is_array() || fs->empty()) {
    rd.fail("functions", "expected a nonempty array of function objects");
    return std::nullopt;
  }
  std::vector<ScalarConvexFn> members;
  bool ok = true;
  for (std::size_t j = 0; j < fs->size(); ++j) {
    const json& f = (*fs)[j];
    const std::string path = "functions[" + std::to_string(j) + "]";
    auto kind = rd.string(f, path, "kind");
    std::optional<ScalarConvexFn> fn;
    if (!kind) {
      ok = false;
      continue;
    }
    if (*kind == "abs_shift") {
      rd.only_keys(f, path, {"kind", "center", "weight"});
      auto c = rd.number(f, path, "center");
      auto w = rd.number(f, path, "weight", 1.0);
      if (c && w) fn = rd.guarded(path, [&] { return ScalarConvexFn::abs_shift(*c, *w); });
    } else if (*kind == "flat_bottom") {
      rd.only_keys(f, path, {"kind", "a", "b", "slope_left", "slope_right"});
      auto a = rd.number(f, path, "a");
      auto b = rd.number(f, path, "b");
      auto sl = rd.number(f, path, "slope_left", 1.0);
      auto sr = rd.number(f, path, "slope_right", 1.0);
      if (a && b && sl && sr) fn = rd.guarded(path, [&] { return ScalarConvexFn::flat_bottom(*a, *b, *sl, *sr); });
    } else if (*kind == "smooth_abs") {
      rd.only_keys(f, path, {"kind", "center", "eps", "scale"});
      auto c = rd.number(f, path, "center");
      auto e = rd.number(f, path, "eps", 1.0);
      auto s = rd.number(f, path, "scale", 1.0);
      if (c && e && s) fn = rd.guarded(path, [&] { return ScalarConvexFn::smooth_abs(*c, *e, *s); });
    } else if (*kind == "quadratic") {
      rd.fail(path + ".kind", "quadratic functions are not globally Lipschitz and are not admissible");
    } else {
      rd.fail(path + ".kind", "unknown function kind '" + *kind + "' (expected abs_shift, flat_bottom, smooth_abs)");
    }
    if (fn) members.push_back(*fn); else ok = false;
  }
  if (!ok) return std::nullopt;
  return rd.guarded("functions", [&] { return FnCollection(members); });
}

std::optional<AssignmentMatrix> parse_assignment(Reader& rd, const json& doc, std::optional<std::size_t> k,
                                                 std::optional<std::size_t> n) {
  const json* a = rd.field(doc, "config", "assignment", true);
  if (!a) return std::nullopt;
  const std::string path = "assignment";
  auto kind = rd.string(*a, path, "kind");
  if (!kind) return std::nullopt;
  if (*kind == "matrix") {
    rd.only_keys(*a, path, {"kind", "rows", "normalize"});
    const json* rows = rd.field(*a, path, "rows", true);
    auto normalize = rd.boolean(*a, path, "normalize", false);
    if (!rows || !normalize) return std::nullopt;
    if (!rows->is_array() || rows->empty()) {
      rd.fail(path + ".rows", "expected a nonempty array of rows");
      return std::nullopt;
    }
    std::vector<std::vector<double>> values;
    for (std::size_t r = 0; r < rows->size(); ++r) {
      auto row = rd.numbers((*rows)[r], path + ".rows[" + std::to_string(r) + "]");
      if (!row) return std::nullopt;
      values.push_back(*row);
    }
    for (std::size_t r = 1; r < values.size(); ++r) {
      if (values[r].size() != values[0].size()) {
        rd.fail(path + ".rows[" + std::to_string(r) + "]", "row lengths differ");
        return std::nullopt;
      }
    }
    Eigen::MatrixXd raw(values.size(), values[0].size());
    for (std::size_t r = 0; r < values.size(); ++r) {
      for (std::size_t c = 0; c < values[r].size(); ++c) raw(r, c) = values[r][c];
    }
    return rd.guarded(path, [&] { return *normalize ? AssignmentMatrix::normalized(raw) : AssignmentMatrix(raw); });
  }
  // The remaining kinds derive their shape from the functions and the graph.
  if (!k || !n) return std::nullopt;
  if (*kind == "identity") {
    rd.only_keys(*a, path, {"kind"});
    if (*k != *n) {
      rd.fail(path + ".kind", "identity needs as many functions as agents (k=" + std::to_string(*k) + ", n=" +
                                  std::to_string(*n) + ")");
      return std::nullopt;
    }
    return AssignmentMatrix::identity(*k);
  }
  if (*kind == "repetition") {
    rd.only_keys(*a, path, {"kind", "copies"});
    auto copies = rd.count(*a, path, "copies");
    if (!copies) return std::nullopt;
    if (*k * *copies != *n) {
      rd.fail(path + ".copies", "k * copies must equal n (" + std::to_string(*k) + " * " + std::to_string(*copies) +
                                    " != " + std::to_string(*n) + ")");
      return std::nullopt;
    }
    return rd.guarded(path, [&] { return AssignmentMatrix::repetition(*k, *copies); });
  }
  if (*kind == "sparsest") {
    rd.only_keys(*a, path, {"kind", "s", "pattern_seed"});
    auto s = rd.count(*a, path, "s");
    auto seed = rd.count(*a, path, "pattern_seed", 0);
    if (!s || !seed) return std::nullopt;
    return rd.guarded(path, [&] { return construct_sparsest(*k, *n, *s, *seed); });
  }
  if (*kind == "zero_pattern") {
    rd.only_keys(*a, path, {"kind", "zeros"});
    const json* zs = rd.field(*a, path, "zeros", true);
    if (!zs) return std::nullopt;
    if (!zs->is_array()) {
      rd.fail(path + ".zeros", "expected one array of column ids per row");
      return std::nullopt;
    }
    std::vector<std::vector<std::size_t>> zeros;
    for (std::size_t r = 0; r < zs->size(); ++r) {
      auto row = rd.counts((*zs)[r], path + ".zeros[" + std::to_string(r) + "]");
      if (!row) return std::nullopt;
      zeros.push_back(*row);
    }
    return rd.guarded(path, [&] { return construct_from_zero_pattern(*k, *n, zeros); });
  }
  rd.fail(path + ".kind", "unknown assignment kind '" + *kind +
                              "' (expected identity, repetition, sparsest, zero_pattern, matrix)");
  return std::nullopt;
}

std::optional<StepSchedule> parse_schedule(Reader& rd, const json& doc) {
  const json* s = rd.field(doc, "config", "schedule", false);
  if (!s) return StepSchedule::harmonic(1.0);
  const std::string path = "schedule";
  auto kind = rd.string(*s, path, "kind");
  if (!kind) return std::nullopt;
  if (*kind == "harmonic") {
    rd.only_keys(*s, path, {"kind", "a"});
    auto a = rd.number(*s, path, "a", 1.0);
    if (!a) return std::nullopt;
    return rd.guarded(path, [&] { return StepSchedule::harmonic(*a); });
  }
  if (*kind == "power") {
    rd.only_keys(*s, path, {"kind", "a", "p"});
    auto a = rd.number(*s, path, "a", 1.0);
    auto p = rd.number(*s, path, "p");
    if (!a || !p) return std::nullopt;
    return rd.guarded(path, [&] { return StepSchedule::power(*a, *p); });
  }
  rd.fail(path + ".kind", "unknown schedule kind '" + *kind + "' (expected harmonic, power)");
  return std::nullopt;
}

std::optional<AnalysisOptions> parse_analysis(Reader& rd, const json& doc) {
  const json* a = rd.field(doc, "config", "analysis", false);
  AnalysisOptions opts;
  if (!a) return opts;
  const std::string path = "analysis";
  rd.only_keys(*a, path, {"enabled", "window_start", "window", "uub_rounds", "x_ref"});
  auto enabled = rd.boolean(*a, path, "enabled", true);
  auto start = rd.count(*a, path, "window_start", 0);
  auto window = rd.count(*a, path, "window", 30);
  auto uub = rd.count(*a, path, "uub_rounds", 200);
  std::optional<double> x_ref;
  if (rd.field(*a, path, "x_ref", false)) {
    x_ref = rd.number(*a, path, "x_ref");
    if (!x_ref) return std::nullopt;
  }
  if (!enabled || !start || !window || !uub) return std::nullopt;
  opts.enabled = *enabled;
  opts.window_start = *start;
  opts.window = *window;
  opts.uub_rounds = *uub;
  opts.x_ref = x_ref;
  return opts;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument("invalid configuration:" + join_lines(problems)), problems_(std::move(problems)) {}

std::string_view to_string(Algorithm a) {
  return a == Algorithm::kGradientDecoding ? "alg1" : "alg2";
}

std::string config_hash(const json& doc) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(doc.dump());
  return os.str();
}

RunConfig parse_run_config(const json& doc, bool check_preconditions) {
  Reader rd;
  if (!doc.is_object()) throw ConfigError({"config: expected a JSON object"});
  rd.only_keys(doc, "config",
               {"schema_version", "name", "description", "algorithm", "graph", "faulty", "adversary", "assignment",
                "functions", "schedule", "x0", "rounds", "seed", "default_value", "subgradient_rule",
                "adversarial_demo", "broadcast_capable", "expected_failure", "export_messages", "analysis"});
  if (const json* v = rd.field(doc, "config", "schema_version", false)) {
    if (!v->is_number_integer() || v->get<long long>() != kSchemaVersion) {
      rd.fail("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
    }
  }
  auto name = rd.string(doc, "config", "name", std::string("unnamed"));
  auto description = rd.string(doc, "config", "description", std::string());
  auto algorithm_name = rd.string(doc, "config", "algorithm", std::string("alg2"));
  std::optional<Algorithm> algorithm;
  if (algorithm_name) {
    if (*algorithm_name == "alg2") algorithm = Algorithm::kTrimmedConsensus;
    else if (*algorithm_name == "alg1") algorithm = Algorithm::kGradientDecoding;
    else rd.fail("algorithm", "expected alg1 or alg2, got '" + *algorithm_name + "'");
  }

  auto graph = parse_graph(rd, doc);
  auto faulty = parse_faulty(rd, doc);
  auto adversary = parse_adversary(rd, doc);
  auto functions = parse_functions(rd, doc);
  std::optional<std::size_t> k = functions ? std::optional(functions->size()) : std::nullopt;
  std::optional<std::size_t> n = graph ? std::optional(graph->size()) : std::nullopt;
  auto assignment = parse_assignment(rd, doc, k, n);
  auto schedule = parse_schedule(rd, doc);

  std::optional<std::vector<double>> x0;
  if (const json* v = rd.field(doc, "config", "x0", true)) {
    if (v->is_number()) {
      if (n) x0 = std::vector<double>(*n, v->get<double>());
    } else {
      x0 = rd.numbers(*v, "x0");
    }
  }
  auto rounds = rd.count(doc, "config", "rounds");
  auto seed = rd.count(doc, "config", "seed", 0);
  auto default_value = rd.number(doc, "config", "default_value", 0.0);
  auto rule_name = rd.string(doc, "config", "subgradient_rule", std::string("midpoint"));
  std::optional<SubgradRule> rule;
  if (rule_name) rule = rd.guarded("subgradient_rule", [&] { return parse_subgrad_rule(*rule_name); });
  auto demo = rd.boolean(doc, "config", "adversarial_demo", false);
  auto broadcast = rd.boolean(doc, "config", "broadcast_capable", false);
  auto expected_failure = rd.boolean(doc, "config", "expected_failure", false);
  auto export_messages = rd.boolean(doc, "config", "export_messages", false);
  auto analysis = parse_analysis(rd, doc);

  if (!rd.problems.empty() || !graph || !faulty || !adversary || !functions || !assignment || !schedule || !x0 ||
      !rounds || !seed || !default_value || !rule || !demo || !broadcast || !expected_failure || !export_messages ||
      !analysis || !algorithm || !name || !description) {
    if (rd.problems.empty()) rd.fail("config", "incomplete configuration");
    throw ConfigError(std::move(rd.problems));
  }

  Scenario scenario{*name,     *graph,  *faulty,        *adversary, *assignment, *functions, *schedule,
                    *x0,       *rounds, *default_value, *seed,      *rule,       *demo,      *broadcast};

  if (check_preconditions) {
    auto problems = *algorithm == Algorithm::kGradientDecoding ? validate_algorithm1(scenario)
                                                               : validate_algorithm2(scenario);
    for (auto& p : problems) rd.problems.push_back("scenario: " + p);
    if (analysis->enabled) {
      if (*algorithm != Algorithm::kTrimmedConsensus) {
        rd.fail("analysis.enabled", "matrix analysis applies to alg2 runs only");
      }
      if (graph->size() > kAnalysisMaxAgents || faulty->bound > kAnalysisMaxFaults) {
        rd.fail("analysis.enabled", "matrix analysis is limited to n <= " + std::to_string(kAnalysisMaxAgents) +
                                        " and f <= " + std::to_string(kAnalysisMaxFaults));
      }
    }
    if (!rd.problems.empty()) throw ConfigError(std::move(rd.problems));
  }

  return RunConfig{doc,
                   *name,
                   *description,
                   *algorithm,
                   std::move(scenario),
                   *expected_failure,
                   *export_messages,
                   *analysis,
                   config_hash(doc)};
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError({"override '" + std::string(assignment) + "': expected path=value"});
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError({"override '" + path + "': empty path segment"});
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        throw ConfigError({"override '" + path + "': '" + key + "' is not an array index"});
      }
      if (idx >= node->size()) throw ConfigError({"override '" + path + "': index " + key + " out of range"});
      next = &(*node)[idx];
    } else {
      if (!node->is_object()) *node = json::object();
      next = &(*node)[key];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

}  // namespace bzopt
