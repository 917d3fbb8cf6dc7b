#include "bzopt/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bzopt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform draw in [0, 1) keyed on (seed, round, sender, receiver). Keyed
// hashing keeps every message independent of evaluation order.
double keyed_uniform(std::uint64_t seed, std::size_t round, Agent sender, Agent receiver) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(round));
  h = splitmix64(h ^ static_cast<std::uint64_t>(sender));
  h = splitmix64(h ^ static_cast<std::uint64_t>(receiver));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

AgentSet default_low_receivers(const DiGraph& g, Agent sender) {
  const auto receivers = g.out_neighbors(sender).to_vector();
  const std::size_t low_count = (receivers.size() + 1) / 2;
  AgentSet low;
  for (std::size_t i = 0; i < low_count; ++i) low.insert(receivers[i]);
  return low;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

}  // namespace

StepSchedule::StepSchedule(double a, double p) : scale_(a), exponent_(p) {
  if (!std::isfinite(a) || a <= 0.0) throw std::invalid_argument("step scale must be positive and finite");
  if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("step exponent must lie in (0.5, 1]");
}

double StepSchedule::operator()(std::size_t t) const {
  const double base = static_cast<double>(t) + 1.0;
  return exponent_ == 1.0 ? scale_ / base : scale_ / std::pow(base, exponent_);
}

std::string_view to_string(AdversarySpec::Kind kind) {
  switch (kind) {
    case AdversarySpec::Kind::kCrash: return "crash";
    case AdversarySpec::Kind::kConstant: return "constant";
    case AdversarySpec::Kind::kRandomUniform: return "random_uniform";
    case AdversarySpec::Kind::kSplit: return "split";
    case AdversarySpec::Kind::kMaxSpread: return "max_spread";
  }
  return "unknown";
}

AdversarySpec::Kind parse_adversary_kind(std::string_view name) {
  for (auto kind : {AdversarySpec::Kind::kCrash, AdversarySpec::Kind::kConstant,
                    AdversarySpec::Kind::kRandomUniform, AdversarySpec::Kind::kSplit,
                    AdversarySpec::Kind::kMaxSpread}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown adversary kind '" + std::string(name) + "'");
}

std::optional<double> adversary_message(const AdversarySpec& spec, const AdversaryView& view,
                                        Agent sender, Agent receiver) {
  switch (spec.kind) {
    case AdversarySpec::Kind::kCrash:
      if (view.round > spec.crash_round) return std::nullopt;
      return view.honest_values[sender];
    case AdversarySpec::Kind::kConstant:
      return spec.low;
    case AdversarySpec::Kind::kRandomUniform:
      return spec.low + (spec.high - spec.low) * keyed_uniform(view.seed, view.round, sender, receiver);
    case AdversarySpec::Kind::kSplit: {
      const AgentSet low = spec.low_receivers ? *spec.low_receivers
                                              : default_low_receivers(*view.graph, sender);
      return low.contains(receiver) ? spec.low : spec.high;
    }
    case AdversarySpec::Kind::kMaxSpread: {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (Agent i = 0; i < view.states.size(); ++i) {
        if (view.faulty.contains(i)) continue;
        lo = std::min(lo, view.states[i]);
        hi = std::max(hi, view.states[i]);
      }
      if (!std::isfinite(lo)) return view.honest_values[sender];
      return view.states[receiver] <= 0.5 * (lo + hi) ? lo : hi;
    }
  }
  return std::nullopt;
}

std::optional<double> adversary_broadcast(const AdversarySpec& spec, const AdversaryView& view, Agent sender) {
  switch (spec.kind) {
    case AdversarySpec::Kind::kCrash:
      if (view.round > spec.crash_round) return std::nullopt;
      return view.honest_values[sender];
    case AdversarySpec::Kind::kConstant:
    case AdversarySpec::Kind::kSplit:
      // Broadcast forbids equivocation; a split adversary commits to its low value.
      return spec.low;
    case AdversarySpec::Kind::kRandomUniform:
      return spec.low + (spec.high - spec.low) * keyed_uniform(view.seed, view.round, sender, sender);
    case AdversarySpec::Kind::kMaxSpread: {
      const double honest = view.honest_values[sender];
      return -10.0 * honest - 1.0;
    }
  }
  return std::nullopt;
}

ScenarioError::ScenarioError(std::vector<std::string> problems)
    : std::invalid_argument("invalid scenario: " + join(problems)), problems_(std::move(problems)) {}

std::vector<std::string> validate_common(const Scenario& s) {
  std::vector<std::string> problems;
  const std::size_t n = s.n();
  if (s.assignment.n() != n) {
    problems.push_back("assignment has " + std::to_string(s.assignment.n()) + " columns but the graph has " +
                       std::to_string(n) + " agents");
  }
  if (s.assignment.k() != s.functions.size()) {
    problems.push_back("assignment has " + std::to_string(s.assignment.k()) + " rows but " +
                       std::to_string(s.functions.size()) + " functions are given");
  }
  if (s.x0.size() != n) {
    problems.push_back("x0 has " + std::to_string(s.x0.size()) + " entries, expected " + std::to_string(n));
  }
  for (std::size_t i = 0; i < s.x0.size(); ++i) {
    if (!std::isfinite(s.x0[i])) problems.push_back("x0[" + std::to_string(i) + "] is not finite");
  }
  try {
    s.faulty.validate(n);
  } catch (const std::exception& e) {
    problems.push_back(e.what());
  }
  if (!std::isfinite(s.default_value)) problems.push_back("default_value is not finite");
  const auto& adv = s.adversary;
  if (!std::isfinite(adv.low) || !std::isfinite(adv.high)) {
    problems.push_back("adversary parameters must be finite");
  }
  if (adv.kind == AdversarySpec::Kind::kRandomUniform && adv.low > adv.high) {
    problems.push_back("random_uniform adversary needs lo <= hi");
  }
  if (adv.low_receivers && !adv.low_receivers->is_subset_of(AgentSet::range(n))) {
    problems.push_back("split adversary low_receivers names an agent outside 0.." + std::to_string(n - 1));
  }
  return problems;
}

std::vector<Received> sorted_received(std::span<const Received> received) {
  std::vector<Received> sorted(received.begin(), received.end());
  std::sort(sorted.begin(), sorted.end(), [](const Received& a, const Received& b) {
    return a.value < b.value || (a.value == b.value && a.sender < b.sender);
  });
  return sorted;
}

TrimResult trimmed_update(double x_self, std::span<const Received> received, std::size_t f,
                          double d_self, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("step size must be positive");
  TrimResult result;
  double sum = x_self;
  if (received.size() > 2 * f) {
    const auto sorted = sorted_received(received);
    for (std::size_t i = f; i + f < sorted.size(); ++i) {
      result.kept.push_back(sorted[i].sender);
      sum += sorted[i].value;
    }
  }
  result.value = sum / static_cast<double>(result.kept.size() + 1) - alpha * d_self;
  return result;
}

std::vector<Received> Trace::received(const DiGraph& g, std::size_t round, Agent receiver) const {
  std::vector<Received> out;
  for (Agent j : g.in_neighbors(receiver).to_vector()) {
    out.push_back({j, message(round, j, receiver).value_or(default_value)});
  }
  return out;
}

std::vector<std::string> validate_algorithm2(const Scenario& s) {
  auto problems = validate_common(s);
  if (problems.empty() && !s.adversarial_demo) {
    const auto sp = sparsity_by_row_zeros(s.assignment).value;
    const auto c1 = check_condition1(s.graph, s.faulty.bound, sp);
    if (!c1.holds) {
      std::string msg = "graph fails Condition 1 for f=" + std::to_string(s.faulty.bound) +
                        ", sp(A)=" + std::to_string(sp) + " (needs source component of size " +
                        std::to_string(c1.required_size) + ")";
      if (c1.witness) {
        msg += "; witness faulty set " + to_string(c1.witness->reduced.faulty.members) + " with source " +
               to_string(c1.witness->source);
      }
      msg += "; mark the scenario adversarial_demo to run it anyway";
      problems.push_back(msg);
    }
  }
  return problems;
}

Trace run_scenario(const Scenario& s) {
  auto problems = validate_algorithm2(s);
  if (!problems.empty()) throw ScenarioError(std::move(problems));

  const std::size_t n = s.n();
  const std::size_t f = s.faulty.bound;
  const AgentSet faulty = s.faulty.members;

  Trace trace;
  trace.n = n;
  trace.rounds = s.rounds;
  trace.f = f;
  trace.faulty = faulty;
  trace.default_value = s.default_value;
  trace.states.reserve(s.rounds + 1);
  trace.states.push_back(s.x0);
  trace.messages.reserve(s.rounds);
  trace.kept.reserve(s.rounds);
  trace.gradients.reserve(s.rounds);
  trace.step_sizes.reserve(s.rounds);

  std::vector<LocalObjective> objectives;
  objectives.reserve(n);
  for (Agent i = 0; i < n; ++i) objectives.push_back(s.local_objective(i));

  std::vector<std::vector<Agent>> in_lists(n);
  std::vector<std::vector<Agent>> out_lists(n);
  for (Agent i = 0; i < n; ++i) {
    in_lists[i] = s.graph.in_neighbors(i).to_vector();
    out_lists[i] = s.graph.out_neighbors(i).to_vector();
  }

  for (std::size_t t = 1; t <= s.rounds; ++t) {
    const std::vector<double>& prev = trace.states[t - 1];
    const double alpha = s.schedule(t - 1);

    AdversaryView view;
    view.round = t;
    view.states = prev;
    view.honest_values = prev;
    view.graph = &s.graph;
    view.faulty = faulty;
    view.seed = s.seed;

    std::vector<std::optional<double>> msgs(n * n);
    for (Agent from = 0; from < n; ++from) {
      for (Agent to : out_lists[from]) {
        msgs[from * n + to] = faulty.contains(from) ? adversary_message(s.adversary, view, from, to)
                                                    : std::optional<double>(prev[from]);
      }
    }

    std::vector<double> next(n, 0.0);
    std::vector<std::vector<Agent>> kept(n);
    std::vector<double> grads(n, std::numeric_limits<double>::quiet_NaN());

    auto honest_step = [&](Agent i) {
      std::vector<Received> received;
      received.reserve(in_lists[i].size());
      for (Agent j : in_lists[i]) received.push_back({j, msgs[j * n + i].value_or(s.default_value)});
      const double d = objectives[i].subgrad(prev[i], s.subgrad_rule);
      auto r = trimmed_update(prev[i], received, f, d, alpha);
      return std::pair{r, d};
    };

    for (Agent i = 0; i < n; ++i) {
      if (faulty.contains(i)) continue;
      auto [r, d] = honest_step(i);
      next[i] = r.value;
      kept[i] = std::move(r.kept);
      grads[i] = d;
      if (in_lists[i].size() <= 2 * f) trace.degenerate_updates.emplace_back(t, i);
    }

    for (Agent p : faulty.to_vector()) {
      if (s.adversary.kind == AdversarySpec::Kind::kCrash) {
        next[p] = t <= s.adversary.crash_round ? honest_step(p).first.value : prev[p];
        continue;
      }
      next[p] = prev[p];
      for (Agent to : out_lists[p]) {
        if (msgs[p * n + to]) {
          next[p] = *msgs[p * n + to];
          break;
        }
      }
    }

    trace.states.push_back(std::move(next));
    trace.messages.push_back(std::move(msgs));
    trace.kept.push_back(std::move(kept));
    trace.gradients.push_back(std::move(grads));
    trace.step_sizes.push_back(alpha);
  }
  return trace;
}

Diagnostics diagnostics(const Trace& trace, const Interval& x_set) {
  Diagnostics out;
  out.spread.reserve(trace.states.size());
  out.dist_to_x.reserve(trace.states.size());
  for (const auto& row : trace.states) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double dist = 0.0;
    for (Agent i = 0; i < row.size(); ++i) {
      if (trace.faulty.contains(i)) continue;
      lo = std::min(lo, row[i]);
      hi = std::max(hi, row[i]);
      dist = std::max(dist, x_set.distance(row[i]));
    }
    out.spread.push_back(hi >= lo ? hi - lo : 0.0);
    out.dist_to_x.push_back(dist);
  }
  out.final_in_x = !out.dist_to_x.empty() && out.dist_to_x.back() == 0.0;
  return out;
}

std::vector<double> centralized_gradient_descent(const FnCollection& fns, const StepSchedule& schedule,
                                                 double x0, std::size_t rounds, SubgradRule rule) {
  std::vector<double> xs{x0};
  xs.reserve(rounds + 1);
  for (std::size_t t = 1; t <= rounds; ++t) {
    const double x = xs.back();
    double sum = 0.0;
    for (const auto& h : fns.members()) sum += h.subgrad(x, rule);
    xs.push_back(x - schedule(t - 1) * sum);
  }
  return xs;
}

}  // namespace bzopt
