#pragma once

// Gradient-coding algorithm: ideal Byzantine broadcast of local gradients,
// exact error-support decoding, and the centralized-equivalent update.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bzopt/assignment.hpp"
#include "bzopt/consensus.hpp"

namespace bzopt {

/// One value per sender, identical at every non-faulty receiver.
struct BroadcastRound {
  std::vector<double> values;
};

/// Honest entries for non-faulty senders, adversary entries for faulty ones.
/// Both vectors have length n; the unused entries are ignored.
BroadcastRound byz_broadcast_round(std::span<const double> honest_values, AgentSet faulty,
                                   std::span<const double> adversary_values);

struct DecodeResult {
  std::vector<double> d;
  /// Coordinates where y and dA disagree beyond the acceptance threshold.
  std::vector<std::size_t> error_support;
  double residual_max = 0.0;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  [[nodiscard]] double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

inline constexpr double kDecodeRelativeTolerance = 1e-9;

/// Tries every candidate error support S with |S| <= f (by size, then
/// lexicographically), solves the columns outside S by least squares and
/// accepts the first fit whose max residual is within rel_tol * max(1, |y|_inf)
/// on those columns. Factorizations are computed once per support.
class GradientDecoder {
 public:
  GradientDecoder(const AssignmentMatrix& a, std::size_t f, double rel_tol = kDecodeRelativeTolerance);

  [[nodiscard]] DecodeResult decode(std::span<const double> y) const;
  [[nodiscard]] std::size_t candidate_count() const { return candidates_.size(); }

 private:
  struct Candidate {
    std::vector<std::size_t> support;
    std::vector<std::size_t> kept;
    Eigen::MatrixXd system;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  };

  Eigen::MatrixXd a_;
  std::size_t f_;
  double rel_tol_;
  std::vector<Candidate> candidates_;
};

DecodeResult decode(std::span<const double> y, const AssignmentMatrix& a, std::size_t f,
                    double rel_tol = kDecodeRelativeTolerance);

struct DecodeReport {
  std::size_t round = 0;
  std::vector<std::size_t> error_support;
  double residual_max = 0.0;
};

struct Algorithm1Trace {
  Trace trace;
  std::vector<DecodeReport> decodes;
  /// d(t-1) per round, the recovered input-function gradients.
  std::vector<std::vector<double>> decoded;
};

/// Problems specific to the decoding algorithm (differentiability, common x0,
/// broadcast capability, decoding capability).
std::vector<std::string> validate_algorithm1(const Scenario& s);

/// Runs the decoding algorithm. Throws ScenarioError on invalid configuration
/// and DecodeError (with the round in the message) if decoding fails.
Algorithm1Trace run_algorithm1(const Scenario& s, double rel_tol = kDecodeRelativeTolerance);

}  // namespace bzopt
