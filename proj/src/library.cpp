#include <stdexcept>

#include "bzopt/harness.hpp"

namespace bzopt {

using nlohmann::json;

namespace {

json flat(double a, double b) { return {{"kind", "flat_bottom"}, {"a", a}, {"b", b}}; }
json smooth(double c, double eps, double scale = 1.0) {
  return {{"kind", "smooth_abs"}, {"center", c}, {"eps", eps}, {"scale", scale}};
}

json k5_constant_lie() {
  return {
      {"name", "k5-constant-lie"},
      {"description", "K5 with one faulty agent sending 1e6; four flat-bottom inputs whose optimum sets meet in "
                      "[0.4, 0.6]; one zero per assignment row (sp = 2)."},
      {"algorithm", "alg2"},
      {"graph", {{"kind", "complete"}, {"n", 5}}},
      {"faulty", {{"members", {4}}, {"f", 1}}},
      {"adversary", {{"kind", "constant"}, {"value", 1e6}}},
      {"assignment", {{"kind", "zero_pattern"}, {"zeros", {{0}, {1}, {2}, {3}}}}},
      {"functions", {flat(0.4, 0.6), flat(0.3, 0.6), flat(0.4, 0.8), flat(0.2, 0.7)}},
      {"schedule", {{"kind", "harmonic"}, {"a", 1.0}}},
      {"x0", {-3.0, 2.0, 5.0, 8.0, 0.0}},
      {"rounds", 20000},
      {"seed", 1},
      {"analysis", {{"enabled", true}, {"window_start", 0}, {"window", 30}, {"uub_rounds", 200}}},
  };
}

json alg1_repetition_f1() {
  return {
      {"name", "alg1-repetition-f1"},
      {"description", "Gradient decoding on K6 with a two-function repetition code (three copies each); one "
                      "faulty agent broadcasts 1e9 every round."},
      {"algorithm", "alg1"},
      {"graph", {{"kind", "complete"}, {"n", 6}}},
      {"faulty", {{"members", {5}}, {"f", 1}}},
      {"adversary", {{"kind", "constant"}, {"value", 1e9}}},
      {"assignment", {{"kind", "repetition"}, {"copies", 3}}},
      {"functions", {smooth(1.0, 0.1, 2.0), smooth(3.0, 0.1)}},
      {"schedule", {{"kind", "harmonic"}, {"a", 0.5}}},
      {"x0", 0.0},
      {"rounds", 500},
      {"broadcast_capable", true},
  };
}

json alg1_smooth_f2() {
  return {
      {"name", "alg1-smooth-f2"},
      {"description", "Gradient decoding with n = 5, one smooth input replicated at every agent, two faulty "
                      "agents sending random values."},
      {"algorithm", "alg1"},
      {"graph", {{"kind", "complete"}, {"n", 5}}},
      {"faulty", {{"members", {3, 4}}, {"f", 2}}},
      {"adversary", {{"kind", "random_uniform"}, {"lo", -100.0}, {"hi", 100.0}}},
      {"assignment", {{"kind", "matrix"}, {"rows", {{1, 1, 1, 1, 1}}}}},
      {"functions", {smooth(1.0, 0.1)}},
      {"schedule", {{"kind", "harmonic"}, {"a", 0.5}}},
      {"x0", 0.0},
      {"rounds", 500},
      {"seed", 7},
      {"broadcast_capable", true},
  };
}

json impossibility_demo() {
  return {
      {"name", "impossibility-demo"},
      {"description", "Two agents, identity assignment, f = 1: agent 1 crashes before sending, so agent 0 only "
                      "ever sees its own input |x| and settles at 0 while the optimum of |x| + 2|x - 1| is 1."},
      {"algorithm", "alg2"},
      {"graph", {{"kind", "complete"}, {"n", 2}}},
      {"faulty", {{"members", {1}}, {"f", 1}}},
      {"adversary", {{"kind", "crash"}, {"t0", 0}}},
      {"assignment", {{"kind", "identity"}}},
      {"functions",
       {{{"kind", "abs_shift"}, {"center", 0.0}, {"weight", 1.0}},
        {{"kind", "abs_shift"}, {"center", 1.0}, {"weight", 2.0}}}},
      {"schedule", {{"kind", "harmonic"}, {"a", 1.0}}},
      {"x0", {0.5, 0.5}},
      {"rounds", 20000},
      {"adversarial_demo", true},
      {"expected_failure", true},
  };
}

json partition_counterexample() {
  // L = {0, 1} and R = {2, 3} each have at most f in-neighbours on the other
  // side; agent 4 tells L "0" and R "1", so neither side ever moves.
  return {
      {"name", "partition-counterexample"},
      {"description", "Graph with an L/R split that violates Condition 2; the faulty agent mirrors each side's "
                      "value and the spread stays at 1."},
      {"algorithm", "alg2"},
      {"graph",
       {{"kind", "edges"},
        {"n", 5},
        {"edges",
         {{0, 1}, {1, 0}, {2, 3}, {3, 2}, {2, 0}, {0, 2}, {4, 0}, {4, 1}, {4, 2}, {4, 3}}}}},
      {"faulty", {{"members", {4}}, {"f", 1}}},
      {"adversary", {{"kind", "split"}, {"low", 0.0}, {"high", 1.0}, {"low_receivers", {0, 1}}}},
      {"assignment", {{"kind", "matrix"}, {"rows", {{1, 1, 1, 1, 1}}}}},
      {"functions", {flat(-1.0, 2.0)}},
      {"schedule", {{"kind", "harmonic"}, {"a", 1.0}}},
      {"x0", {0.0, 0.0, 1.0, 1.0, 0.0}},
      {"rounds", 2000},
      {"adversarial_demo", true},
      {"expected_failure", true},
  };
}

json tight_k4_f1() {
  return {
      {"name", "tight-k4-f1"},
      {"description", "Smallest complete graph for sp = 2 and f = 1 (K4) under a random-value adversary."},
      {"algorithm", "alg2"},
      {"graph", {{"kind", "complete"}, {"n", 4}}},
      {"faulty", {{"members", {3}}, {"f", 1}}},
      {"adversary", {{"kind", "random_uniform"}, {"lo", -50.0}, {"hi", 50.0}}},
      {"assignment", {{"kind", "zero_pattern"}, {"zeros", {{0}, {1}, {2}}}}},
      {"functions", {flat(0.0, 1.0), flat(-0.5, 0.5), flat(0.25, 2.0)}},
      {"schedule", {{"kind", "harmonic"}, {"a", 1.0}}},
      {"x0", {-4.0, 1.0, 6.0, 0.0}},
      {"rounds", 20000},
      {"seed", 3},
      {"analysis", {{"enabled", true}, {"window_start", 0}, {"window", 30}, {"uub_rounds", 200}}},
  };
}

json safety_random_k5() {
  return {
      {"name", "safety-random-k5"},
      {"description", "Zero subgradients on K5 with a random-value adversary; every estimate stays in the "
                      "initial non-faulty range."},
      {"algorithm", "alg2"},
      {"graph", {{"kind", "complete"}, {"n", 5}}},
      {"faulty", {{"members", {2}}, {"f", 1}}},
      {"adversary", {{"kind", "random_uniform"}, {"lo", -1000.0}, {"hi", 1000.0}}},
      {"assignment", {{"kind", "matrix"}, {"rows", {{1, 1, 1, 1, 1}}}}},
      {"functions", {flat(-1e9, 1e9)}},
      {"schedule", {{"kind", "harmonic"}, {"a", 1.0}}},
      {"x0", {0.0, 3.0, 0.0, -2.0, 7.0}},
      {"rounds", 1000},
      {"seed", 11},
  };
}

json fault_free_point() {
  return {
      {"name", "fault-free-point"},
      {"description", "No faults, four agents, identical inputs |x - 0.3|; all estimates approach 0.3."},
      {"algorithm", "alg2"},
      {"graph", {{"kind", "cycle"}, {"n", 4}}},
      {"faulty", {{"members", json::array()}, {"f", 0}}},
      {"assignment", {{"kind", "identity"}}},
      {"functions",
       {{{"kind", "abs_shift"}, {"center", 0.3}},
        {{"kind", "abs_shift"}, {"center", 0.3}},
        {{"kind", "abs_shift"}, {"center", 0.3}},
        {{"kind", "abs_shift"}, {"center", 0.3}}}},
      {"schedule", {{"kind", "harmonic"}, {"a", 1.0}}},
      {"x0", {-2.0, 0.0, 1.0, 5.0}},
      {"rounds", 10000},
  };
}

}  // namespace

const std::vector<LibraryEntry>& scenario_library() {
  static const std::vector<LibraryEntry> entries = [] {
    std::vector<LibraryEntry> out;
    for (auto build : {k5_constant_lie, alg1_repetition_f1, alg1_smooth_f2, impossibility_demo,
                       partition_counterexample, tight_k4_f1, safety_random_k5, fault_free_point}) {
      json doc = build();
      out.push_back({doc["name"].get<std::string>(), doc["description"].get<std::string>(), build});
    }
    return out;
  }();
  return entries;
}

json library_config(std::string_view name) {
  for (const auto& e : scenario_library()) {
    if (e.name == name) {
      json doc = e.build();
      doc["schema_version"] = kSchemaVersion;
      return doc;
    }
  }
  throw std::out_of_range("no library scenario named '" + std::string(name) + "'");
}

}  // namespace bzopt
