#pragma once

// Post-hoc verification of a trimmed-consensus trace: per-round transition
// matrices over the non-faulty agents, backward products, limit vectors, and
// numerical checks of the convergence bounds.
//
// Indexing: M(t) maps x(t) to x(t+1) = M(t) x(t) - alpha(t) d(t), where d(t)
// holds the subgradients used in round t+1 of the trace.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bzopt/consensus.hpp"
#include "bzopt/graph.hpp"

namespace bzopt {

inline constexpr std::size_t kAnalysisMaxAgents = 6;
inline constexpr std::size_t kAnalysisMaxFaults = 1;
inline constexpr double kPiConvergedDiameter = 1e-9;

/// A kept faulty value that could not be bracketed by trimmed non-faulty
/// values. Carries the offending round's data in the message.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejects traces outside the desk-scale envelope (n <= 6, f <= 1).
void validate_analysis_scope(const Trace& trace);

/// Non-faulty agent ids in increasing order; row/column i of every M refers to
/// the i-th of these.
std::vector<Agent> nonfaulty_agents(const Trace& trace);

/// Transition matrix for step t (0 <= t < rounds). Each kept faulty value w
/// is rewritten as lambda * lo + (1 - lambda) * hi over the largest non-faulty
/// value trimmed from below and the smallest trimmed from above.
Eigen::MatrixXd build_M(const Trace& trace, const DiGraph& g, std::size_t t);

struct MatrixCheck {
  double row_sum_error = 0.0;     // max |row sum - 1|
  double min_entry = 0.0;
  bool diagonal_matches = true;   // M_ii equals 1 / (|kept| + 1)
  bool support_on_edges = true;   // M_ij > 0 only on in-edges and the diagonal
  /// Per row: entries >= beta minus (|N_i^- minus F| - f + 1). Negative means
  /// the count falls short.
  std::vector<long> beta_count_slack;

  [[nodiscard]] bool stochastic() const { return row_sum_error <= 1e-12 && min_entry >= 0.0; }
  [[nodiscard]] bool beta_counts_ok() const;
};

MatrixCheck check_M(const Eigen::MatrixXd& m, const Trace& trace, const DiGraph& g, std::size_t t, double beta);

/// Reduced graph H over the non-faulty agents with M >= beta (H + I)
/// entrywise, or nullopt. The maximal candidate keeps every non-faulty edge
/// with M_ij >= beta; it works iff any reduced graph works.
std::optional<ReducedGraph> find_reduced_witness(const Eigen::MatrixXd& m, double beta, const DiGraph& g,
                                                 const FaultySet& faulty, const std::vector<Agent>& index);

struct TransitionRecord {
  std::vector<Agent> index;            // non-faulty agents
  std::vector<Eigen::MatrixXd> M;      // M[t], t = 0..rounds-1
  std::vector<double> residual;        // |x(t+1) - (M x(t) - alpha d)|_inf
  double beta = 0.0;                   // smallest positive entry over all rounds
  std::uint64_t tau = 0;               // |R_F|
  std::uint64_t nu = 0;                // tau * (n - phi)
  double log_beta = 0.0;
  /// log(gamma) with gamma = 1 - beta^nu; 0 when beta^nu underflows.
  double log_gamma = 0.0;

  [[nodiscard]] std::size_t size() const { return index.size(); }
  [[nodiscard]] double gamma_pow(std::size_t e) const;
};

TransitionRecord build_transition_record(const Trace& trace, const DiGraph& g);

/// Phi(t, r) = M(t) M(t-1) ... M(r); identity when t + 1 == r.
Eigen::MatrixXd phi_product(const TransitionRecord& rec, std::size_t t, std::size_t r);

struct PiEstimate {
  Eigen::RowVectorXd pi;
  double diameter = 0.0;  // largest column spread of Phi(horizon, r)
  [[nodiscard]] bool converged() const { return diameter < kPiConvergedDiameter; }
};

PiEstimate estimate_pi(const TransitionRecord& rec, std::size_t r, std::size_t horizon);

/// estimate_pi for every r = 0..horizon in one backward pass.
std::vector<PiEstimate> estimate_pi_series(const TransitionRecord& rec, std::size_t horizon);

struct LemmaLbReport {
  bool sufficient_horizon = false;
  std::size_t qualifying_columns = 0;
  std::size_t required = 0;
  double min_log_entry = 0.0;     // smallest log Phi entry over qualifying columns
  double log_threshold = 0.0;     // nu * log beta
  [[nodiscard]] bool pass() const { return sufficient_horizon && qualifying_columns >= required; }
};

/// Counts columns of Phi(r + nu - 1, r) whose entries are all >= beta^nu
/// (compared in the log domain).
LemmaLbReport check_lemma_lb(const TransitionRecord& rec, std::size_t r, std::size_t sparsity, std::size_t f);

struct RateReport {
  double margin = 0.0;  // min over i, j of bound - |Phi_ij - pi_j|
  bool conclusive = false;
  [[nodiscard]] bool pass() const { return !conclusive || margin >= 0.0; }
};

/// |Phi_ij(t, r) - pi_j(r)| <= gamma^ceil((t - r + 1) / nu) + 1e-9.
RateReport check_rate(const TransitionRecord& rec, std::size_t t, std::size_t r, const PiEstimate& pi);

struct PiLowerReport {
  std::size_t qualifying = 0;
  std::size_t required = 0;
  bool conclusive = false;
  [[nodiscard]] bool pass() const { return !conclusive || qualifying >= required; }
};

/// Some index set of size >= max{sp, f+1} has pi_i(r) >= beta^nu - 1e-12.
PiLowerReport check_pi_lower(const TransitionRecord& rec, const PiEstimate& pi, std::size_t sparsity, std::size_t f);

struct YSequence {
  /// y[t] for t = 0..pis.size()-1 from the explicit sum.
  std::vector<double> y;
  /// <pi(t), x(t)> for the same t.
  std::vector<double> y_direct;
  double max_route_gap = 0.0;
  /// max |y(t+1) - (y(t) - alpha(t) <pi(t+1), d(t)>)|.
  double recurrence_residual = 0.0;
  bool conclusive = false;  // every pi used is converged
};

YSequence y_sequence(const TransitionRecord& rec, const Trace& trace, const std::vector<PiEstimate>& pis);

struct UubReport {
  double bound = 0.0;
  double max_gap = 0.0;  // max over non-faulty i of |y(t) - x_i(t)|
  bool conclusive = false;
  [[nodiscard]] bool pass() const { return !conclusive || max_gap <= bound; }
};

/// Uniform bound on |y(t) - x_i(t)| for t >= 1 with Lipschitz constant L.
double uub_bound(const TransitionRecord& rec, const Trace& trace, std::size_t t, double lipschitz);
UubReport check_uub(const TransitionRecord& rec, const Trace& trace, const YSequence& ys, std::size_t t,
                    double lipschitz);

struct BasicIterReport {
  double lhs = 0.0;
  double rhs = 0.0;        // L form
  double rhs_tight = 0.0;  // with |d_j| + |delta_j| and sum d_j^2
  bool conclusive = false;
  [[nodiscard]] bool pass() const { return !conclusive || (lhs <= rhs + 1e-9 && lhs <= rhs_tight + 1e-9); }
};

/// One-step inequality for |y(t+1) - x_ref|^2 using midpoint subgradients at y(t).
BasicIterReport check_basic_iter(const TransitionRecord& rec, const Trace& trace, const Scenario& s,
                                 const YSequence& ys, const std::vector<PiEstimate>& pis, std::size_t t,
                                 double x_ref);

struct SupermartingaleReport {
  std::vector<double> a;        // |y(t) - x_ref|^2
  std::vector<double> b_sum;    // partial sums of b_t
  std::vector<double> c_sum;    // partial sums of c_t
  std::size_t violations = 0;   // rounds with a(t+1) > a(t) - b(t) + c(t) + 1e-9
};

/// Diagnostic partial sums from the almost-supermartingale argument.
SupermartingaleReport supermartingale_monitor(const TransitionRecord& rec, const Trace& trace, const Scenario& s,
                                              const YSequence& ys, const std::vector<PiEstimate>& pis,
                                              double x_ref);

}  // namespace bzopt
