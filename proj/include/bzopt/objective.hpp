#pragma once

// Admissible scalar input functions (convex, Lipschitz, compact argmin),
// weighted local objectives, and optimum-set algebra.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bzopt {

class ObjectiveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double x) const { return lo <= x && x <= hi; }
  [[nodiscard]] double distance(double x) const;
  friend bool operator==(const Interval&, const Interval&) = default;
};

std::optional<Interval> intersect(const Interval& a, const Interval& b);

/// Which element of the subdifferential to return at a kink.
enum class SubgradRule { kLeft, kRight, kMidpoint };

SubgradRule parse_subgrad_rule(std::string_view name);
std::string_view to_string(SubgradRule rule);

/// w * |x - c|
struct AbsShift {
  double center = 0.0;
  double weight = 1.0;
};

/// Zero on [a, b], slope -slope_left left of a and +slope_right right of b.
struct FlatBottom {
  double a = 0.0;
  double b = 0.0;
  double slope_left = 1.0;
  double slope_right = 1.0;
};

/// scale * (sqrt((x - c)^2 + eps^2) - eps). Differentiable, argmin {c}.
struct SmoothAbs {
  double center = 0.0;
  double eps = 1.0;
  double scale = 1.0;
};

class ScalarConvexFn {
 public:
  using Params = std::variant<AbsShift, FlatBottom, SmoothAbs>;

  /// Validates admissibility; throws ObjectiveError otherwise.
  explicit ScalarConvexFn(Params params);

  static ScalarConvexFn abs_shift(double center, double weight = 1.0) {
    return ScalarConvexFn(AbsShift{center, weight});
  }
  static ScalarConvexFn flat_bottom(double a, double b, double slope_left = 1.0, double slope_right = 1.0) {
    return ScalarConvexFn(FlatBottom{a, b, slope_left, slope_right});
  }
  static ScalarConvexFn smooth_abs(double center, double eps, double scale = 1.0) {
    return ScalarConvexFn(SmoothAbs{center, eps, scale});
  }

  [[nodiscard]] double eval(double x) const;
  [[nodiscard]] double subgrad(double x, SubgradRule rule = SubgradRule::kMidpoint) const;
  [[nodiscard]] double lipschitz() const;
  [[nodiscard]] Interval argmin() const;
  [[nodiscard]] bool piecewise_linear() const;
  [[nodiscard]] bool differentiable() const;
  /// Kink locations (empty for smooth kinds).
  [[nodiscard]] std::vector<double> breakpoints() const;
  [[nodiscard]] std::string_view kind() const;
  [[nodiscard]] const Params& params() const { return params_; }

 private:
  Params params_;
};

/// Ordered list of k >= 1 input functions.
class FnCollection {
 public:
  explicit FnCollection(std::vector<ScalarConvexFn> members);

  [[nodiscard]] std::size_t size() const { return members_.size(); }
  [[nodiscard]] const ScalarConvexFn& operator[](std::size_t j) const { return members_[j]; }
  [[nodiscard]] const std::vector<ScalarConvexFn>& members() const { return members_; }
  /// Largest member Lipschitz constant; also bounds every convex combination.
  [[nodiscard]] double lipschitz() const;
  [[nodiscard]] bool all_piecewise_linear() const;
  [[nodiscard]] bool all_differentiable() const;

 private:
  std::vector<ScalarConvexFn> members_;
};

/// sum_j weights[j] * h_j. Holds a reference to the collection.
class LocalObjective {
 public:
  /// Weights must be nonnegative and sum to one.
  LocalObjective(std::vector<double> weights, const FnCollection& collection);

  [[nodiscard]] double eval(double x) const;
  [[nodiscard]] double subgrad(double x, SubgradRule rule = SubgradRule::kMidpoint) const;
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  [[nodiscard]] const FnCollection& collection() const { return *collection_; }

 private:
  std::vector<double> weights_;
  const FnCollection* collection_;
};

double weighted_eval(const std::vector<double>& weights, const FnCollection& fns, double x);
double weighted_subgrad(const std::vector<double>& weights, const FnCollection& fns, double x,
                        SubgradRule rule = SubgradRule::kMidpoint);

/// Exact optimum interval of sum_j w_j h_j by scanning slopes across the merged
/// breakpoints. Members with zero weight are ignored; every positively
/// weighted member must be piecewise linear (otherwise use argmin_by_bisection).
Interval argmin_interval(const std::vector<double>& weights, const FnCollection& fns);

/// Optimum interval of the uniform average.
Interval argmin_interval(const FnCollection& fns);

/// Bisection on the sign of the left/right derivatives; works for every kind.
/// Endpoints are accurate to about `tol`.
Interval argmin_by_bisection(const std::vector<double>& weights, const FnCollection& fns, double tol = 1e-12);

enum class RedundancyCase { kCase1 = 1, kCase2 = 2, kCase3 = 3 };

std::string_view to_string(RedundancyCase c);

/// Case1: every X_j is the same single point. Case2: nonempty intersection.
/// Case3: empty intersection.
RedundancyCase classify_redundancy(const FnCollection& fns);

struct GlobalOptimum {
  RedundancyCase redundancy = RedundancyCase::kCase3;
  /// Exactly X for Case1/2; the hull bound [min lo_j, max hi_j] for Case3.
  Interval interval;
  /// False when `interval` is only a bound containing X.
  bool exact = false;
};

GlobalOptimum optimum_set_global(const FnCollection& fns);

}  // namespace bzopt
