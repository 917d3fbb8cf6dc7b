#include "bzopt/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bzopt {

namespace {

// Subsets of 0..n-1 of size <= f, by size then lexicographically.
std::vector<std::vector<std::size_t>> supports_up_to(std::size_t n, std::size_t f) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t m = 0; m <= std::min(f, n); ++m) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    while (true) {
      out.push_back(idx);
      if (m == 0) break;
      std::size_t pos = m;
      while (pos > 0 && idx[pos - 1] == n - m + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < m; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  return out;
}

std::string round_prefix(std::size_t t) { return "round " + std::to_string(t) + ": "; }

}  // namespace

BroadcastRound byz_broadcast_round(std::span<const double> honest_values, AgentSet faulty,
                                   std::span<const double> adversary_values) {
  if (honest_values.size() != adversary_values.size()) {
    throw std::invalid_argument("honest and adversary vectors must have the same length");
  }
  BroadcastRound round;
  round.values.resize(honest_values.size());
  for (Agent i = 0; i < honest_values.size(); ++i) {
    round.values[i] = faulty.contains(i) ? adversary_values[i] : honest_values[i];
  }
  return round;
}

GradientDecoder::GradientDecoder(const AssignmentMatrix& a, std::size_t f, double rel_tol)
    : a_(a.entries()), f_(f), rel_tol_(rel_tol) {
  const std::size_t n = a.n();
  for (auto& support : supports_up_to(n, f)) {
    Candidate c;
    for (std::size_t col = 0; col < n; ++col) {
      if (!std::binary_search(support.begin(), support.end(), col)) c.kept.push_back(col);
    }
    Eigen::MatrixXd system(c.kept.size(), a.k());
    for (std::size_t r = 0; r < c.kept.size(); ++r) {
      system.row(static_cast<Eigen::Index>(r)) = a_.col(static_cast<Eigen::Index>(c.kept[r])).transpose();
    }
    c.qr.compute(system);
    c.system = std::move(system);
    c.support = std::move(support);
    candidates_.push_back(std::move(c));
  }
}

DecodeResult GradientDecoder::decode(std::span<const double> y) const {
  if (y.size() != static_cast<std::size_t>(a_.cols())) {
    throw std::invalid_argument("received vector has " + std::to_string(y.size()) + " entries, expected " +
                                std::to_string(a_.cols()));
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates_) {
    Eigen::VectorXd b(c.kept.size());
    double scale = 1.0;
    for (std::size_t r = 0; r < c.kept.size(); ++r) {
      b[static_cast<Eigen::Index>(r)] = y[c.kept[r]];
      scale = std::max(scale, std::abs(y[c.kept[r]]));
    }
    const Eigen::VectorXd d = c.qr.solve(b);
    const double residual = b.size() == 0 ? 0.0 : (c.system * d - b).cwiseAbs().maxCoeff();
    best = std::min(best, residual);
    if (residual > rel_tol_ * scale) continue;

    DecodeResult result;
    result.d.assign(d.data(), d.data() + d.size());
    result.residual_max = residual;
    const Eigen::RowVectorXd codeword = d.transpose() * a_;
    for (std::size_t col = 0; col < y.size(); ++col) {
      if (std::abs(y[col] - codeword[static_cast<Eigen::Index>(col)]) > rel_tol_ * scale) {
        result.error_support.push_back(col);
      }
    }
    return result;
  }
  throw DecodeError("no gradient vector agrees with the received values outside " + std::to_string(f_) +
                        " coordinates (best residual " + std::to_string(best) + ")",
                    best);
}

DecodeResult decode(std::span<const double> y, const AssignmentMatrix& a, std::size_t f, double rel_tol) {
  return GradientDecoder(a, f, rel_tol).decode(y);
}

std::vector<std::string> validate_algorithm1(const Scenario& s) {
  auto problems = validate_common(s);
  if (!s.functions.all_differentiable()) {
    problems.push_back("the decoding algorithm needs differentiable input functions (smooth_abs)");
  }
  if (!s.broadcast_capable) {
    problems.push_back("scenario does not assert broadcast_capable; the decoding algorithm assumes Byzantine broadcast");
  }
  if (s.x0.size() == s.n()) {
    std::optional<double> common;
    for (Agent i = 0; i < s.n(); ++i) {
      if (s.faulty.members.contains(i)) continue;
      if (!common) common = s.x0[i];
      if (*common != s.x0[i]) {
        problems.push_back("the decoding algorithm needs a common initial estimate at every non-faulty agent");
        break;
      }
    }
  }
  if (s.assignment.n() == s.n() && !decoding_capability(s.assignment, s.faulty.bound)) {
    problems.push_back("assignment matrix lacks decoding capability for f=" + std::to_string(s.faulty.bound) +
                       " (some 2f column deletion drops rank below k)");
  }
  return problems;
}

Algorithm1Trace run_algorithm1(const Scenario& s, double rel_tol) {
  auto problems = validate_algorithm1(s);
  if (!problems.empty()) throw ScenarioError(std::move(problems));

  const std::size_t n = s.n();
  const AgentSet faulty = s.faulty.members;
  const GradientDecoder decoder(s.assignment, s.faulty.bound, rel_tol);

  std::vector<LocalObjective> objectives;
  objectives.reserve(n);
  for (Agent i = 0; i < n; ++i) objectives.push_back(s.local_objective(i));

  Algorithm1Trace out;
  Trace& trace = out.trace;
  trace.n = n;
  trace.rounds = s.rounds;
  trace.f = s.faulty.bound;
  trace.faulty = faulty;
  trace.default_value = s.default_value;
  trace.states.push_back(s.x0);

  // Faulty rows track the common estimate they would hold if honest.
  double common = 0.0;
  for (Agent i = 0; i < n; ++i) {
    if (!faulty.contains(i)) {
      common = s.x0[i];
      break;
    }
  }
  for (Agent p : faulty.to_vector()) trace.states[0][p] = common;

  for (std::size_t t = 1; t <= s.rounds; ++t) {
    const std::vector<double>& prev = trace.states[t - 1];
    const double alpha = s.schedule(t - 1);

    std::vector<double> honest(n);
    for (Agent i = 0; i < n; ++i) honest[i] = objectives[i].subgrad(prev[i], s.subgrad_rule);

    AdversaryView view;
    view.round = t;
    view.states = prev;
    view.honest_values = honest;
    view.graph = &s.graph;
    view.faulty = faulty;
    view.seed = s.seed;
    std::vector<double> adversarial(n, 0.0);
    for (Agent p : faulty.to_vector()) {
      adversarial[p] = adversary_broadcast(s.adversary, view, p).value_or(s.default_value);
    }
    const BroadcastRound y = byz_broadcast_round(honest, faulty, adversarial);

    std::vector<std::optional<double>> msgs(n * n);
    for (Agent from = 0; from < n; ++from) {
      for (Agent to = 0; to < n; ++to) {
        if (from != to) msgs[from * n + to] = y.values[from];
      }
    }

    std::vector<double> next(n);
    std::vector<double> grads(n, std::numeric_limits<double>::quiet_NaN());
    std::optional<DecodeResult> first;
    for (Agent i = 0; i < n; ++i) {
      if (faulty.contains(i)) continue;
      DecodeResult r;
      try {
        r = decoder.decode(y.values);
      } catch (const DecodeError& e) {
        throw DecodeError(round_prefix(t) + e.what(), e.best_residual());
      }
      double sum = 0.0;
      for (double v : r.d) sum += v;
      next[i] = prev[i] - alpha * sum;
      grads[i] = honest[i];
      if (!first) first = std::move(r);
    }
    const double agreed = first ? next[(AgentSet::range(n) - faulty).to_vector().front()] : common;
    for (Agent p : faulty.to_vector()) next[p] = agreed;

    if (first) {
      out.decodes.push_back({t, first->error_support, first->residual_max});
      out.decoded.push_back(first->d);
    } else {
      out.decodes.push_back({t, {}, 0.0});
      out.decoded.emplace_back();
    }
    trace.states.push_back(std::move(next));
    trace.messages.push_back(std::move(msgs));
    trace.kept.emplace_back(n);
    trace.gradients.push_back(std::move(grads));
    trace.step_sizes.push_back(alpha);
  }
  return out;
}

}  // namespace bzopt
