#include "bzopt/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "bzopt/analysis.hpp"

namespace bzopt {

using nlohmann::json;

namespace {

json agents_json(AgentSet s) { return s.to_vector(); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_messages_csv(const Trace& trace, const DiGraph& g, std::ostream& os) {
  os << "round,sender,receiver,value\n";
  for (std::size_t t = 1; t <= trace.rounds; ++t) {
    for (Agent from = 0; from < trace.n; ++from) {
      for (Agent to = 0; to < trace.n; ++to) {
        if (!g.has_edge(from, to)) continue;
        const auto& m = trace.messages[t - 1][from * trace.n + to];
        os << t << ',' << from << ',' << to << ',' << (m ? format_double(*m) : std::string()) << '\n';
      }
    }
  }
}

void write_decode_csv(const Algorithm1Trace& a1, std::ostream& os) {
  os << "round,error_support,residual\n";
  for (const auto& d : a1.decodes) {
    os << d.round << ',';
    for (std::size_t i = 0; i < d.error_support.size(); ++i) os << (i ? ";" : "") << d.error_support[i];
    os << ',' << format_double(d.residual_max) << '\n';
  }
}

std::size_t converged_prefix(const std::vector<PiEstimate>& pis) {
  std::size_t k = 0;
  while (k < pis.size() && pis[k].converged()) ++k;
  return k;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(const Trace& trace, std::ostream& os) {
  os << "round,agent,value,is_faulty\n";
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    for (Agent i = 0; i < trace.n; ++i) {
      os << t << ',' << i << ',' << format_double(trace.states[t][i]) << ',' << (trace.faulty.contains(i) ? 1 : 0)
         << '\n';
    }
  }
}

Interval global_optimum(const FnCollection& fns) {
  if (fns.all_piecewise_linear()) return argmin_interval(fns);
  return argmin_by_bisection(std::vector<double>(fns.size(), 1.0 / static_cast<double>(fns.size())), fns);
}

RunResult execute(const RunConfig& config) {
  const Scenario& s = config.scenario;
  RunResult result;
  const Interval x_set = global_optimum(s.functions);
  json extra = json::object();
  if (config.algorithm == Algorithm::kGradientDecoding) {
    result.decoding = run_algorithm1(s);
    result.trace = result.decoding->trace;
    const auto honest = (AgentSet::range(s.n()) - s.faulty.members).to_vector();
    const auto central = centralized_gradient_descent(s.functions, s.schedule, s.x0[honest.front()], s.rounds,
                                                      s.subgrad_rule);
    double deviation = 0.0;
    for (std::size_t t = 0; t < central.size(); ++t) {
      for (Agent i : honest) deviation = std::max(deviation, std::abs(result.trace.states[t][i] - central[t]));
    }
    std::size_t corrected = 0;
    for (const auto& d : result.decoding->decodes) corrected += d.error_support.empty() ? 0 : 1;
    extra["centralized_max_deviation"] = deviation;
    extra["rounds_with_corrected_errors"] = corrected;
  } else {
    result.trace = run_scenario(s);
  }
  const Diagnostics diag = diagnostics(result.trace, x_set);
  const double spread = diag.spread.back();
  const double dist = diag.dist_to_x.back();
  result.summary = {
      {"schema_version", kSchemaVersion},
      {"name", config.name},
      {"algorithm", std::string(to_string(config.algorithm))},
      {"config_hash", config.hash},
      {"rounds", s.rounds},
      {"n", s.n()},
      {"f", s.faulty.bound},
      {"faulty", agents_json(s.faulty.members)},
      {"adversary", std::string(to_string(s.adversary.kind))},
      {"x_set", {{"lo", x_set.lo}, {"hi", x_set.hi}}},
      {"redundancy", std::string(to_string(classify_redundancy(s.functions)))},
      {"final_spread", spread},
      {"final_dist_to_x", dist},
      {"in_x", diag.final_in_x},
      {"degenerate_updates", result.trace.degenerate_updates.size()},
      {"expected_failure", config.expected_failure},
      {"failure_observed", spread >= 1e-3 || dist >= 1e-2},
  };
  for (auto& [key, value] : extra.items()) result.summary[key] = value;
  return result;
}

json run_to_directory(const RunConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "config.json", config.document.dump(2) + "\n");
  RunResult result = execute(config);
  {
    std::ofstream os(out_dir / "trace.csv", std::ios::binary);
    write_trace_csv(result.trace, os);
  }
  if (config.export_messages) {
    std::ofstream os(out_dir / "messages.csv", std::ios::binary);
    write_messages_csv(result.trace, config.scenario.graph, os);
  }
  if (result.decoding) {
    std::ofstream os(out_dir / "decode.csv", std::ios::binary);
    write_decode_csv(*result.decoding, os);
  }
  if (config.analysis.enabled) {
    json report = analysis_report(config, result.trace);
    result.summary["analysis_pass"] = report["pass"];
    write_text(out_dir / "analysis.json", report.dump(2) + "\n");
  }
  write_text(out_dir / "summary.json", result.summary.dump(2) + "\n");
  return result.summary;
}

json analysis_report(const RunConfig& config, const Trace& trace) {
  const Scenario& s = config.scenario;
  const AnalysisOptions& opt = config.analysis;
  const std::size_t sp = sparsity_by_row_zeros(s.assignment).value;
  const std::size_t f = s.faulty.bound;
  const double lip = s.functions.lipschitz();
  const Interval x_set = global_optimum(s.functions);
  const double x_ref = opt.x_ref.value_or(0.5 * (x_set.lo + x_set.hi));

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["config_hash"] = config.hash;
  rep["rounds"] = trace.rounds;
  if (trace.rounds == 0) {
    rep["pass"] = true;
    rep["note"] = "empty trace";
    return rep;
  }

  const TransitionRecord rec = build_transition_record(trace, s.graph);
  const double max_residual = *std::max_element(rec.residual.begin(), rec.residual.end());
  rep["beta"] = rec.beta;
  rep["tau"] = rec.tau;
  rep["nu"] = rec.nu;
  rep["gamma"] = std::exp(rec.log_gamma);
  rep["log_beta_nu"] = static_cast<double>(rec.nu) * rec.log_beta;
  rep["reconstruction"] = {{"max_residual", max_residual}, {"pass", max_residual < 1e-10}, {"residuals", rec.residual}};

  // Property 4 is only claimed where every non-faulty agent hears from f
  // faulty agents; elsewhere it is reported without grading.
  bool property4_applies = true;
  for (Agent i : rec.index) {
    if ((s.graph.in_neighbors(i) & s.faulty.members).size() != f) property4_applies = false;
  }
  bool stochastic = true, diagonal = true, support = true, counts = true;
  long min_slack = std::numeric_limits<long>::max();
  std::size_t witnesses = 0;
  for (std::size_t t = 0; t < rec.M.size(); ++t) {
    const MatrixCheck c = check_M(rec.M[t], trace, s.graph, t, rec.beta);
    stochastic = stochastic && c.stochastic();
    diagonal = diagonal && c.diagonal_matches;
    support = support && c.support_on_edges;
    counts = counts && c.beta_counts_ok();
    for (long v : c.beta_count_slack) min_slack = std::min(min_slack, v);
    if (find_reduced_witness(rec.M[t], rec.beta, s.graph, s.faulty, rec.index)) ++witnesses;
  }
  rep["matrix_properties"] = {{"stochastic", stochastic},
                              {"diagonal_equals_a", diagonal},
                              {"support_on_edges", support},
                              {"beta_count", {{"applies", property4_applies}, {"holds", counts}, {"min_slack", min_slack}}}};
  rep["witnesses"] = {{"found", witnesses}, {"rounds", rec.M.size()}, {"pass", witnesses == rec.M.size()}};

  const LemmaLbReport lb = check_lemma_lb(rec, opt.window_start, sp, f);
  rep["lemma_lb"] = {{"r", opt.window_start},
                     {"sufficient_horizon", lb.sufficient_horizon},
                     {"qualifying_columns", lb.qualifying_columns},
                     {"required", lb.required},
                     {"log_threshold", lb.log_threshold},
                     {"min_log_entry", finite_or_null(lb.min_log_entry)},
                     {"pass", lb.pass()}};

  const std::vector<PiEstimate> all_pis = estimate_pi_series(rec, rec.M.size() - 1);
  const std::size_t converged = converged_prefix(all_pis);
  rep["pi"] = {{"horizon", rec.M.size() - 1}, {"converged_prefix", converged}};

  const std::size_t w_end = std::min(opt.window_start + opt.window, rec.M.size());
  double rate_margin = std::numeric_limits<double>::infinity();
  bool rate_ok = true, rate_conclusive = true, pi_ok = true;
  json pi_lower = json::array();
  for (std::size_t r = opt.window_start; r < w_end; ++r) {
    for (std::size_t t = r; t < w_end; ++t) {
      const RateReport rr = check_rate(rec, t, r, all_pis[r]);
      rate_margin = std::min(rate_margin, rr.margin);
      rate_ok = rate_ok && rr.pass();
      rate_conclusive = rate_conclusive && rr.conclusive;
    }
    const PiLowerReport pl = check_pi_lower(rec, all_pis[r], sp, f);
    pi_ok = pi_ok && pl.pass();
    pi_lower.push_back({{"r", r}, {"qualifying", pl.qualifying}, {"required", pl.required}, {"pass", pl.pass()}});
  }
  rep["rate"] = {{"window", {opt.window_start, w_end}},
                 {"min_margin", finite_or_null(rate_margin)},
                 {"conclusive", rate_conclusive},
                 {"pass", rate_ok}};
  rep["pi_lower"] = {{"pass", pi_ok}, {"per_r", pi_lower}};

  // Everything past the converged prefix would be inconclusive.
  const std::vector<PiEstimate> pis(all_pis.begin(), all_pis.begin() + static_cast<std::ptrdiff_t>(converged));
  const YSequence ys = y_sequence(rec, trace, pis);
  rep["y"] = {{"length", ys.y.size()},
              {"max_route_gap", ys.max_route_gap},
              {"recurrence_residual", ys.recurrence_residual},
              {"pass", ys.recurrence_residual <= 1e-9 && ys.max_route_gap <= 1e-9}};

  const std::size_t t_max = std::min(opt.uub_rounds, ys.y.empty() ? 0 : ys.y.size() - 1);
  json margins = json::array();
  bool uub_ok = true;
  for (std::size_t t = 1; t <= t_max; ++t) {
    const UubReport u = check_uub(rec, trace, ys, t, lip);
    uub_ok = uub_ok && u.pass();
    margins.push_back(u.bound - u.max_gap);
  }
  json uub = {{"t_max", t_max}, {"pass", uub_ok}, {"margins", margins}};
  if (t_max >= 200) {
    const double b20 = uub_bound(rec, trace, 20, lip);
    const double b200 = uub_bound(rec, trace, 200, lip);
    uub["bound_20"] = b20;
    uub["bound_200"] = b200;
    uub["bound_decreasing"] = b200 < b20;
  }
  rep["uub"] = uub;

  if (ys.y.size() >= 3) {
    const std::size_t t_end = ys.y.size() - 1;
    double gap = 0.0;
    for (Agent i : rec.index) gap = std::max(gap, std::abs(ys.y[t_end] - trace.states[t_end][i]));
    const double b_end = uub_bound(rec, trace, t_end, lip);
    const double b_half = uub_bound(rec, trace, t_end / 2, lip);
    rep["consensus_decay"] = {{"t", t_end},
                              {"gap", gap},
                              {"bound", b_end},
                              {"bound_half", b_half},
                              {"pass", gap <= b_end && gap < 10.0 * b_half}};
  } else {
    rep["consensus_decay"] = {{"pass", true}, {"note", "insufficient converged horizon"}};
  }

  bool basic_ok = true;
  std::size_t basic_checked = 0;
  for (std::size_t t = 0; t + 1 < ys.y.size() && t < opt.uub_rounds; ++t) {
    const BasicIterReport b = check_basic_iter(rec, trace, s, ys, pis, t, x_ref);
    basic_ok = basic_ok && b.pass();
    ++basic_checked;
  }
  rep["basic_iter"] = {{"x_ref", x_ref}, {"checked", basic_checked}, {"pass", basic_ok}};

  const SupermartingaleReport sm = supermartingale_monitor(rec, trace, s, ys, pis, x_ref);
  rep["supermartingale"] = {{"violations", sm.violations},
                            {"b_sum", sm.b_sum.empty() ? 0.0 : sm.b_sum.back()},
                            {"c_sum", sm.c_sum.empty() ? 0.0 : sm.c_sum.back()}};

  const bool pass = rep["reconstruction"]["pass"].get<bool>() && stochastic && diagonal && support &&
                    (!property4_applies || counts) && rep["witnesses"]["pass"].get<bool>() &&
                    (lb.pass() || !lb.sufficient_horizon) && rate_ok && pi_ok && rep["y"]["pass"].get<bool>() &&
                    uub_ok && rep["consensus_decay"]["pass"].get<bool>() && basic_ok;
  rep["pass"] = pass;
  return rep;
}

json analyze_directory(const std::filesystem::path& dir) {
  std::vector<std::string> missing;
  for (const char* name : {"config.json", "trace.csv", "summary.json"}) {
    if (!std::filesystem::exists(dir / name)) missing.push_back((dir / name).string());
  }
  if (!missing.empty()) {
    std::string msg = "missing trace files:";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }
  const RunConfig config = parse_run_config(load_json_file(dir / "config.json"));
  if (config.algorithm != Algorithm::kTrimmedConsensus) {
    throw std::runtime_error("matrix analysis applies to alg2 traces only");
  }
  const json summary = load_json_file(dir / "summary.json");
  const Trace trace = run_scenario(config.scenario);
  std::ostringstream csv;
  write_trace_csv(trace, csv);
  if (csv.str() != read_text(dir / "trace.csv")) {
    throw std::runtime_error("trace.csv does not match a re-execution of config.json");
  }
  json rep = analysis_report(config, trace);
  rep["summary_hash_matches"] = summary.value("config_hash", "") == config.hash;

  std::ostringstream ycsv;
  ycsv << "t,y,y_direct,spread\n";
  if (trace.rounds > 0) {
    const TransitionRecord rec = build_transition_record(trace, config.scenario.graph);
    auto pis = estimate_pi_series(rec, rec.M.size() - 1);
    pis.resize(converged_prefix(pis));
    const YSequence ys = y_sequence(rec, trace, pis);
    const Diagnostics diag = diagnostics(trace, global_optimum(config.scenario.functions));
    for (std::size_t t = 0; t < ys.y.size(); ++t) {
      ycsv << t << ',' << format_double(ys.y[t]) << ',' << format_double(ys.y_direct[t]) << ','
           << format_double(diag.spread[t]) << '\n';
    }
  }
  write_text(dir / "y.csv", ycsv.str());
  write_text(dir / "analysis.json", rep.dump(2) + "\n");
  return rep;
}

json check_graph_report(const RunConfig& config) {
  const Scenario& s = config.scenario;
  const std::size_t f = s.faulty.bound;
  const std::size_t sp = sparsity_by_row_zeros(s.assignment).value;
  json rep = {{"config_hash", config.hash}, {"n", s.n()}, {"f", f}, {"sparsity", sp}};

  const Condition1Result c1 = check_condition1(s.graph, f, sp);
  json j1 = {{"holds", c1.holds}, {"required_size", c1.required_size}};
  if (c1.witness) {
    json removed = json::object();
    for (Agent i = 0; i < c1.witness->reduced.removed.size(); ++i) {
      if (!c1.witness->reduced.removed[i].empty()) {
        removed[std::to_string(i)] = agents_json(c1.witness->reduced.removed[i]);
      }
    }
    j1["witness"] = {{"faulty", agents_json(c1.witness->reduced.faulty.members)},
                     {"removed_edges_into", removed},
                     {"source_component", agents_json(c1.witness->source)}};
  }
  rep["condition1"] = j1;

  if (s.n() > kCondition2MaxAgents) {
    rep["condition2"] = {{"skipped", "partition enumeration is limited to " + std::to_string(kCondition2MaxAgents) +
                                         " agents"}};
  } else {
    const Condition2Result c2 = check_condition2(s.graph, f);
    json j2 = {{"holds", c2.holds}};
    if (c2.witness) {
      j2["witness"] = {{"left", agents_json(c2.witness->left)},
                       {"right", agents_json(c2.witness->right)},
                       {"center", agents_json(c2.witness->center)},
                       {"faulty", agents_json(c2.witness->faulty)}};
    }
    rep["condition2"] = j2;
  }
  return rep;
}

}  // namespace bzopt
