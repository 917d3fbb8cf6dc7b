#include "bzopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bzopt {

namespace {

std::vector<long> local_index_map(const std::vector<Agent>& index, std::size_t n) {
  std::vector<long> loc(n, -1);
  for (std::size_t k = 0; k < index.size(); ++k) loc[index[k]] = static_cast<long>(k);
  return loc;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

std::size_t ceil_div(std::size_t a, std::uint64_t b) {
  return static_cast<std::size_t>((a + b - 1) / b);
}

double dot(const Eigen::RowVectorXd& pi, const std::vector<double>& v, const std::vector<Agent>& index) {
  double s = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) s += pi[static_cast<Eigen::Index>(k)] * v[index[k]];
  return s;
}

std::string describe_round(const std::vector<Received>& sorted, std::size_t t, Agent i, AgentSet faulty) {
  std::ostringstream os;
  os << "step " << t << ", agent " << i << ", received:";
  for (const auto& r : sorted) {
    os << " (" << r.sender << (faulty.contains(r.sender) ? "*" : "") << ", " << r.value << ")";
  }
  return os.str();
}

}  // namespace

void validate_analysis_scope(const Trace& trace) {
  if (trace.n > kAnalysisMaxAgents || trace.f > kAnalysisMaxFaults) {
    throw std::invalid_argument("matrix analysis is limited to n <= " + std::to_string(kAnalysisMaxAgents) +
                                " and f <= " + std::to_string(kAnalysisMaxFaults) + " (got n=" +
                                std::to_string(trace.n) + ", f=" + std::to_string(trace.f) + ")");
  }
}

std::vector<Agent> nonfaulty_agents(const Trace& trace) {
  return (AgentSet::range(trace.n) - trace.faulty).to_vector();
}

Eigen::MatrixXd build_M(const Trace& trace, const DiGraph& g, std::size_t t) {
  if (t >= trace.rounds) throw std::out_of_range("step " + std::to_string(t) + " is past the trace");
  const auto index = nonfaulty_agents(trace);
  const auto loc = local_index_map(index, trace.n);
  const std::size_t f = trace.f;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(index.size()),
                                            static_cast<Eigen::Index>(index.size()));

  for (std::size_t row = 0; row < index.size(); ++row) {
    const Agent i = index[row];
    const auto r = static_cast<Eigen::Index>(row);
    const auto sorted = sorted_received(trace.received(g, t + 1, i));
    if (sorted.size() <= 2 * f) {
      m(r, r) = 1.0;
      continue;
    }
    const std::size_t kept = sorted.size() - 2 * f;
    const double a = 1.0 / static_cast<double>(kept + 1);
    m(r, r) = a;

    std::optional<Received> lo;
    std::optional<Received> hi;
    for (std::size_t p = 0; p < f; ++p) {
      if (!trace.faulty.contains(sorted[p].sender)) lo = sorted[p];
    }
    for (std::size_t p = sorted.size(); p-- > sorted.size() - f;) {
      if (!trace.faulty.contains(sorted[p].sender)) hi = sorted[p];
    }

    for (std::size_t p = f; p < f + kept; ++p) {
      const Received& w = sorted[p];
      if (!trace.faulty.contains(w.sender)) {
        m(r, loc[w.sender]) += a;
        continue;
      }
      if (!lo || !hi) {
        throw ConstructionError("kept faulty value from agent " + std::to_string(w.sender) +
                                " has no non-faulty bracket on both sides; " +
                                describe_round(sorted, t, i, trace.faulty));
      }
      if (w.value == lo->value && w.value == hi->value) {
        m(r, loc[std::min(lo->sender, hi->sender)]) += a;
      } else if (w.value == lo->value) {
        m(r, loc[lo->sender]) += a;
      } else if (w.value == hi->value) {
        m(r, loc[hi->sender]) += a;
      } else {
        const double lambda = (hi->value - w.value) / (hi->value - lo->value);
        m(r, loc[lo->sender]) += a * lambda;
        m(r, loc[hi->sender]) += a * (1.0 - lambda);
      }
    }
  }
  return m;
}

bool MatrixCheck::beta_counts_ok() const {
  return std::all_of(beta_count_slack.begin(), beta_count_slack.end(), [](long s) { return s >= 0; });
}

MatrixCheck check_M(const Eigen::MatrixXd& m, const Trace& trace, const DiGraph& g, std::size_t t, double beta) {
  const auto index = nonfaulty_agents(trace);
  MatrixCheck out;
  out.min_entry = m.size() == 0 ? 0.0 : m.minCoeff();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.row_sum_error = std::max(out.row_sum_error, std::abs(m.row(r).sum() - 1.0));
    const Agent i = index[static_cast<std::size_t>(r)];
    const auto& kept = trace.kept[t][i];
    const bool degenerate = trace.received(g, t + 1, i).size() <= 2 * trace.f;
    const double a = degenerate ? 1.0 : 1.0 / static_cast<double>(kept.size() + 1);
    if (std::abs(m(r, r) - a) > 1e-15) out.diagonal_matches = false;
    long at_least_beta = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Agent j = index[static_cast<std::size_t>(c)];
      if (m(r, c) > 0.0 && c != r && !g.has_edge(j, i)) out.support_on_edges = false;
      if (m(r, c) >= beta) ++at_least_beta;
    }
    const long honest_in = static_cast<long>((g.in_neighbors(i) - trace.faulty).size());
    out.beta_count_slack.push_back(at_least_beta - (honest_in - static_cast<long>(trace.f) + 1));
  }
  return out;
}

std::optional<ReducedGraph> find_reduced_witness(const Eigen::MatrixXd& m, double beta, const DiGraph& g,
                                                 const FaultySet& faulty, const std::vector<Agent>& index) {
  const auto loc = local_index_map(index, g.size());
  ReducedGraph h;
  h.faulty = faulty;
  h.removed.assign(g.size(), AgentSet{});
  h.graph.vertices = AgentSet::range(g.size()) - faulty.members;
  h.graph.in.assign(g.size(), AgentSet{});
  for (std::size_t row = 0; row < index.size(); ++row) {
    const Agent i = index[row];
    const auto r = static_cast<Eigen::Index>(row);
    if (m(r, r) < beta) return std::nullopt;
    for (Agent j : (g.in_neighbors(i) - faulty.members).to_vector()) {
      if (m(r, loc[j]) >= beta) {
        h.graph.in[i].insert(j);
      } else {
        h.removed[i].insert(j);
      }
    }
    if (h.removed[i].size() > faulty.bound) return std::nullopt;
  }
  return h;
}

double TransitionRecord::gamma_pow(std::size_t e) const {
  return std::exp(static_cast<double>(e) * log_gamma);
}

TransitionRecord build_transition_record(const Trace& trace, const DiGraph& g) {
  validate_analysis_scope(trace);
  TransitionRecord rec;
  rec.index = nonfaulty_agents(trace);
  rec.M.reserve(trace.rounds);
  rec.residual.reserve(trace.rounds);
  double beta = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trace.rounds; ++t) {
    Eigen::MatrixXd m = build_M(trace, g, t);
    double worst = 0.0;
    for (std::size_t row = 0; row < rec.index.size(); ++row) {
      double predicted = -trace.step_sizes[t] * trace.gradients[t][rec.index[row]];
      for (std::size_t c = 0; c < rec.index.size(); ++c) {
        predicted += m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) * trace.states[t][rec.index[c]];
      }
      worst = std::max(worst, std::abs(trace.states[t + 1][rec.index[row]] - predicted));
    }
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double v = m.data()[k];
      if (v > 0.0) beta = std::min(beta, v);
    }
    rec.residual.push_back(worst);
    rec.M.push_back(std::move(m));
  }
  rec.beta = std::isfinite(beta) ? beta : 1.0;
  rec.tau = count_reduced_graphs(g, FaultySet{trace.faulty, trace.f});
  rec.nu = saturating_mul(rec.tau, rec.index.size());
  rec.log_beta = std::log(rec.beta);
  rec.log_gamma = std::log1p(-std::exp(static_cast<double>(rec.nu) * rec.log_beta));
  return rec;
}

Eigen::MatrixXd phi_product(const TransitionRecord& rec, std::size_t t, std::size_t r) {
  const auto m = static_cast<Eigen::Index>(rec.size());
  if (r == t + 1) return Eigen::MatrixXd::Identity(m, m);
  if (r > t + 1 || t >= rec.M.size()) {
    throw std::out_of_range("Phi(" + std::to_string(t) + ", " + std::to_string(r) + ") is undefined for " +
                            std::to_string(rec.M.size()) + " recorded steps");
  }
  Eigen::MatrixXd p = rec.M[r];
  for (std::size_t s = r + 1; s <= t; ++s) p = rec.M[s] * p;
  return p;
}

namespace {

PiEstimate summarize(const Eigen::MatrixXd& phi) {
  PiEstimate e;
  e.pi = phi.colwise().mean();
  e.diameter = phi.rows() == 0 ? 0.0 : (phi.colwise().maxCoeff() - phi.colwise().minCoeff()).maxCoeff();
  return e;
}

}  // namespace

PiEstimate estimate_pi(const TransitionRecord& rec, std::size_t r, std::size_t horizon) {
  return summarize(phi_product(rec, horizon, r));
}

std::vector<PiEstimate> estimate_pi_series(const TransitionRecord& rec, std::size_t horizon) {
  if (horizon >= rec.M.size()) throw std::out_of_range("horizon beyond recorded steps");
  std::vector<PiEstimate> out(horizon + 1);
  const auto m = static_cast<Eigen::Index>(rec.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m, m);
  for (std::size_t r = horizon + 1; r-- > 0;) {
    p = p * rec.M[r];
    out[r] = summarize(p);
  }
  return out;
}

LemmaLbReport check_lemma_lb(const TransitionRecord& rec, std::size_t r, std::size_t sparsity, std::size_t f) {
  LemmaLbReport rep;
  rep.required = std::max(sparsity, f + 1);
  rep.log_threshold = static_cast<double>(rec.nu) * rec.log_beta;
  if (rec.nu == 0 || r + rec.nu - 1 >= rec.M.size()) return rep;
  rep.sufficient_horizon = true;
  const Eigen::MatrixXd phi = phi_product(rec, r + rec.nu - 1, r);
  rep.min_log_entry = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < phi.cols(); ++c) {
    const double lowest = phi.col(c).minCoeff();
    if (lowest > 0.0 && std::log(lowest) >= rep.log_threshold) {
      ++rep.qualifying_columns;
      rep.min_log_entry = std::min(rep.min_log_entry, std::log(lowest));
    }
  }
  return rep;
}

RateReport check_rate(const TransitionRecord& rec, std::size_t t, std::size_t r, const PiEstimate& pi) {
  RateReport rep;
  rep.conclusive = pi.converged();
  const Eigen::MatrixXd phi = phi_product(rec, t, r);
  const double bound = rec.gamma_pow(ceil_div(t - r + 1, rec.nu)) + 1e-9;
  rep.margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
      rep.margin = std::min(rep.margin, bound - std::abs(phi(i, j) - pi.pi[j]));
    }
  }
  return rep;
}

PiLowerReport check_pi_lower(const TransitionRecord& rec, const PiEstimate& pi, std::size_t sparsity, std::size_t f) {
  PiLowerReport rep;
  rep.required = std::max(sparsity, f + 1);
  rep.conclusive = pi.converged();
  const double floor = std::exp(static_cast<double>(rec.nu) * rec.log_beta) - 1e-12;
  for (Eigen::Index i = 0; i < pi.pi.size(); ++i) {
    if (pi.pi[i] >= floor) ++rep.qualifying;
  }
  return rep;
}

YSequence y_sequence(const TransitionRecord& rec, const Trace& trace, const std::vector<PiEstimate>& pis) {
  YSequence ys;
  if (pis.empty()) return ys;
  ys.conclusive = std::all_of(pis.begin(), pis.end(), [](const PiEstimate& p) { return p.converged(); });
  ys.y.push_back(dot(pis[0].pi, trace.states[0], rec.index));
  for (std::size_t t = 1; t < pis.size(); ++t) {
    ys.y.push_back(ys.y.back() - trace.step_sizes[t - 1] * dot(pis[t].pi, trace.gradients[t - 1], rec.index));
  }
  for (std::size_t t = 0; t < pis.size(); ++t) {
    ys.y_direct.push_back(dot(pis[t].pi, trace.states[t], rec.index));
    ys.max_route_gap = std::max(ys.max_route_gap, std::abs(ys.y[t] - ys.y_direct[t]));
  }
  for (std::size_t t = 0; t + 1 < pis.size(); ++t) {
    const double predicted =
        ys.y_direct[t] - trace.step_sizes[t] * dot(pis[t + 1].pi, trace.gradients[t], rec.index);
    ys.recurrence_residual = std::max(ys.recurrence_residual, std::abs(ys.y_direct[t + 1] - predicted));
  }
  return ys;
}

double uub_bound(const TransitionRecord& rec, const Trace& trace, std::size_t t, double lipschitz) {
  if (t == 0) throw std::invalid_argument("the uniform bound starts at t = 1");
  const auto m = static_cast<double>(rec.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Agent i : rec.index) {
    lo = std::min(lo, trace.states[0][i]);
    hi = std::max(hi, trace.states[0][i]);
  }
  const double x_scale = std::max(std::abs(lo), std::abs(hi));
  double sum = 0.0;
  for (std::size_t r = 1; r + 1 <= t; ++r) {
    sum += trace.step_sizes[r - 1] * rec.gamma_pow(ceil_div(t - r, rec.nu));
  }
  return m * x_scale * rec.gamma_pow(ceil_div(t, rec.nu)) + m * lipschitz * sum +
         2.0 * trace.step_sizes[t - 1] * lipschitz;
}

UubReport check_uub(const TransitionRecord& rec, const Trace& trace, const YSequence& ys, std::size_t t,
                    double lipschitz) {
  UubReport rep;
  rep.conclusive = ys.conclusive && t < ys.y.size();
  rep.bound = uub_bound(rec, trace, t, lipschitz);
  if (t >= ys.y.size()) return rep;
  for (Agent i : rec.index) rep.max_gap = std::max(rep.max_gap, std::abs(ys.y[t] - trace.states[t][i]));
  return rep;
}

BasicIterReport check_basic_iter(const TransitionRecord& rec, const Trace& trace, const Scenario& s,
                                 const YSequence& ys, const std::vector<PiEstimate>& pis, std::size_t t,
                                 double x_ref) {
  BasicIterReport rep;
  if (t + 1 >= ys.y.size()) return rep;
  rep.conclusive = pis[t + 1].converged() && pis[t].converged();
  const double lip = s.functions.lipschitz();
  const double alpha = trace.step_sizes[t];
  const double y = ys.y[t];
  const auto m = static_cast<double>(rec.size());
  double consensus_term = 0.0;
  double tight_term = 0.0;
  double value_term = 0.0;
  double grad_sq = 0.0;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const Agent j = rec.index[k];
    const double pj = pis[t + 1].pi[static_cast<Eigen::Index>(k)];
    const LocalObjective gj = s.local_objective(j);
    const double dj = trace.gradients[t][j];
    const double delta = gj.subgrad(y, SubgradRule::kMidpoint);
    const double gap = std::abs(y - trace.states[t][j]);
    consensus_term += pj * gap;
    tight_term += pj * (std::abs(dj) + std::abs(delta)) * gap;
    value_term += pj * (gj.eval(y) - gj.eval(x_ref));
    grad_sq += dj * dj;
  }
  const double base = (y - x_ref) * (y - x_ref);
  rep.lhs = (ys.y[t + 1] - x_ref) * (ys.y[t + 1] - x_ref);
  rep.rhs = base + 4.0 * lip * alpha * consensus_term - 2.0 * alpha * value_term + alpha * alpha * m * lip * lip;
  rep.rhs_tight = base + 2.0 * alpha * tight_term - 2.0 * alpha * value_term + alpha * alpha * grad_sq;
  return rep;
}

SupermartingaleReport supermartingale_monitor(const TransitionRecord& rec, const Trace& trace, const Scenario& s,
                                              const YSequence& ys, const std::vector<PiEstimate>& pis,
                                              double x_ref) {
  SupermartingaleReport rep;
  const double lip = s.functions.lipschitz();
  const auto m = static_cast<double>(rec.size());
  std::vector<LocalObjective> objectives;
  std::vector<double> optimum;
  for (Agent j : rec.index) {
    objectives.push_back(s.local_objective(j));
    const Interval arg = argmin_by_bisection(objectives.back().weights(), s.functions);
    optimum.push_back(objectives.back().eval(arg.lo));
  }
  double b_total = 0.0;
  double c_total = 0.0;
  for (std::size_t t = 0; t < ys.y.size(); ++t) {
    const double y = ys.y[t];
    rep.a.push_back((y - x_ref) * (y - x_ref));
    if (t + 1 >= ys.y.size()) break;
    const double alpha = trace.step_sizes[t];
    double b = 0.0;
    double c = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      const double pj = pis[t + 1].pi[static_cast<Eigen::Index>(k)];
      b += pj * (objectives[k].eval(y) - optimum[k]);
      c += pj * std::abs(y - trace.states[t][rec.index[k]]);
    }
    b *= 2.0 * alpha;
    c = 4.0 * lip * alpha * c + alpha * alpha * m * lip * lip;
    b_total += b;
    c_total += c;
    rep.b_sum.push_back(b_total);
    rep.c_sum.push_back(c_total);
    const double next = (ys.y[t + 1] - x_ref) * (ys.y[t + 1] - x_ref);
    if (next > rep.a.back() - b + c + 1e-9) ++rep.violations;
  }
  return rep;
}

}  // namespace bzopt
