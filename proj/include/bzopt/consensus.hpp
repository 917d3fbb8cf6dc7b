#pragma once

// Synchronous-round engine for trimmed-mean consensus with diminishing-step
// subgradient descent, Byzantine adversaries, and full trace capture.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bzopt/assignment.hpp"
#include "bzopt/graph.hpp"
#include "bzopt/objective.hpp"

namespace bzopt {

/// Step size alpha(t) = a / (t + 1)^p with 1/2 < p <= 1, so the steps are
/// positive, non-increasing, not summable, and square-summable.
class StepSchedule {
 public:
  static StepSchedule harmonic(double a) { return StepSchedule(a, 1.0); }
  static StepSchedule power(double a, double p) { return StepSchedule(a, p); }

  [[nodiscard]] double operator()(std::size_t t) const;
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] double exponent() const { return exponent_; }

 private:
  StepSchedule(double a, double p);
  double scale_;
  double exponent_;
};

struct AdversarySpec {
  enum class Kind {
    kCrash,          // honest through round crash_round, silent afterwards
    kConstant,       // `low` to everyone
    kRandomUniform,  // independent U[low, high] per round and receiver
    kSplit,          // `low` to the low receivers, `high` to the rest
    kMaxSpread,      // pushes each receiver toward the nearer extreme
  };

  Kind kind = Kind::kConstant;
  double low = 0.0;
  double high = 0.0;
  std::size_t crash_round = 0;
  /// For kSplit: receivers that get `low`. Defaults to the lower-id half
  /// (rounded up) of each faulty sender's out-neighbours.
  std::optional<AgentSet> low_receivers;

  static AdversarySpec crash(std::size_t t0) { return {Kind::kCrash, 0.0, 0.0, t0, {}}; }
  static AdversarySpec constant(double v) { return {Kind::kConstant, v, v, 0, {}}; }
  static AdversarySpec random_uniform(double lo, double hi) { return {Kind::kRandomUniform, lo, hi, 0, {}}; }
  static AdversarySpec split(double v_low, double v_high, std::optional<AgentSet> low = {}) {
    return {Kind::kSplit, v_low, v_high, 0, low};
  }
  static AdversarySpec max_spread() { return {Kind::kMaxSpread, 0.0, 0.0, 0, {}}; }
};

std::string_view to_string(AdversarySpec::Kind kind);
AdversarySpec::Kind parse_adversary_kind(std::string_view name);

/// What an adversary may look at when choosing a message in round `round`.
struct AdversaryView {
  std::size_t round = 1;
  /// x(round - 1) for every agent (faulty entries are nominal).
  std::span<const double> states;
  /// The value a correct agent would send this round, per agent.
  std::span<const double> honest_values;
  const DiGraph* graph = nullptr;
  AgentSet faulty;
  std::uint64_t seed = 0;
};

/// Message from faulty `sender` to `receiver`; nullopt means nothing is sent.
std::optional<double> adversary_message(const AdversarySpec& spec, const AdversaryView& view,
                                        Agent sender, Agent receiver);

/// Value a faulty sender pushes through a consistent broadcast (one value for
/// every receiver); nullopt means nothing is sent.
std::optional<double> adversary_broadcast(const AdversarySpec& spec, const AdversaryView& view, Agent sender);

/// Complete description of one execution.
struct Scenario {
  std::string name;
  DiGraph graph;
  FaultySet faulty;
  AdversarySpec adversary;
  AssignmentMatrix assignment;
  FnCollection functions;
  StepSchedule schedule;
  std::vector<double> x0;
  std::size_t rounds = 0;
  double default_value = 0.0;
  std::uint64_t seed = 0;
  SubgradRule subgrad_rule = SubgradRule::kMidpoint;
  /// Skip the Condition 1 precondition (counterexample reproduction).
  bool adversarial_demo = false;
  /// Asserts the graph supports Byzantine broadcast (decoding algorithm).
  bool broadcast_capable = false;

  [[nodiscard]] std::size_t n() const { return graph.size(); }
  [[nodiscard]] LocalObjective local_objective(Agent i) const {
    return LocalObjective(assignment.column(i), functions);
  }
};

/// Raised before round 0 with every problem found, not just the first.
class ScenarioError : public std::invalid_argument {
 public:
  explicit ScenarioError(std::vector<std::string> problems);
  [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Problems shared by both algorithms (dimensions, ids, finiteness).
std::vector<std::string> validate_common(const Scenario& s);

/// validate_common plus the Condition 1 precondition (skipped for
/// adversarial demos).
std::vector<std::string> validate_algorithm2(const Scenario& s);

struct Received {
  Agent sender = 0;
  double value = 0.0;
};

struct TrimResult {
  double value = 0.0;
  /// Senders whose values survived trimming, in sorted-value order.
  std::vector<Agent> kept;
};

/// One trimmed-mean update: sort by (value, sender), drop the f smallest and f
/// largest, average the rest with x_self, then step against d_self.
TrimResult trimmed_update(double x_self, std::span<const Received> received, std::size_t f,
                          double d_self, double alpha);

/// Values received by a non-faulty agent, sorted by (value, sender).
std::vector<Received> sorted_received(std::span<const Received> received);

struct Trace {
  std::size_t n = 0;
  std::size_t rounds = 0;
  std::size_t f = 0;
  AgentSet faulty;
  double default_value = 0.0;
  /// states[t][i] = x_i(t), t = 0..rounds.
  std::vector<std::vector<double>> states;
  /// messages[t-1][sender * n + receiver]: value sent on that edge in round t
  /// (nullopt for missing messages and non-edges).
  std::vector<std::vector<std::optional<double>>> messages;
  /// kept[t-1][i]: senders kept by non-faulty i in round t.
  std::vector<std::vector<std::vector<Agent>>> kept;
  /// gradients[t-1][i] = d_i(t-1), the subgradient used in round t (NaN for faulty agents).
  std::vector<std::vector<double>> gradients;
  /// step_sizes[t-1] = alpha(t-1).
  std::vector<double> step_sizes;
  /// (round, agent) pairs where |N_i^-| <= 2f made the update pure descent.
  std::vector<std::pair<std::size_t, Agent>> degenerate_updates;

  [[nodiscard]] std::optional<double> message(std::size_t round, Agent sender, Agent receiver) const {
    return messages[round - 1][sender * n + receiver];
  }
  /// What non-faulty `receiver` used from each in-neighbour in `round`
  /// (missing messages replaced by the default value), in sender order.
  [[nodiscard]] std::vector<Received> received(const DiGraph& g, std::size_t round, Agent receiver) const;
};

/// Runs the trimmed-consensus algorithm. Throws ScenarioError on invalid
/// configuration, including graphs failing Condition 1 unless the scenario is
/// an adversarial demo.
Trace run_scenario(const Scenario& s);

struct Diagnostics {
  std::vector<double> spread;
  std::vector<double> dist_to_x;
  bool final_in_x = false;
};

/// Max pairwise spread and max distance to `x_set` over non-faulty agents.
Diagnostics diagnostics(const Trace& trace, const Interval& x_set);

/// x(t) = x(t-1) - alpha(t-1) * sum_j h_j'(x(t-1)) on the whole collection.
std::vector<double> centralized_gradient_descent(const FnCollection& fns, const StepSchedule& schedule,
                                                 double x0, std::size_t rounds,
                                                 SubgradRule rule = SubgradRule::kMidpoint);

}  // namespace bzopt
