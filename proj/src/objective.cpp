#include "bzopt/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bzopt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ObjectiveError(std::string(what) + " must be finite");
}

void require_positive(double v, const char* what) {
  require_finite(v, what);
  if (!(v > 0.0)) throw ObjectiveError(std::string(what) + " must be positive");
}

FlatBottom as_flat_bottom(const AbsShift& p) { return FlatBottom{p.center, p.center, p.weight, p.weight}; }

double flat_eval(const FlatBottom& p, double x) {
  if (x < p.a) return p.slope_left * (p.a - x);
  if (x > p.b) return p.slope_right * (x - p.b);
  return 0.0;
}

double flat_subgrad(const FlatBottom& p, double x, SubgradRule rule) {
  if (x < p.a) return -p.slope_left;
  if (x > p.b) return p.slope_right;
  // Subdifferential at x in [a, b]: [left, right].
  const double left = x == p.a ? -p.slope_left : 0.0;
  const double right = x == p.b ? p.slope_right : 0.0;
  switch (rule) {
    case SubgradRule::kLeft: return left;
    case SubgradRule::kRight: return right;
    case SubgradRule::kMidpoint: return 0.5 * (left + right);
  }
  return 0.0;
}

void check_weights(const std::vector<double>& weights, const FnCollection& fns) {
  if (weights.size() != fns.size()) {
    throw ObjectiveError("weight vector has " + std::to_string(weights.size()) + " entries for " +
                         std::to_string(fns.size()) + " functions");
  }
  bool any_positive = false;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ObjectiveError("weights must be finite and nonnegative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw ObjectiveError("at least one weight must be positive");
}

}  // namespace

double Interval::distance(double x) const {
  if (x < lo) return lo - x;
  if (x > hi) return x - hi;
  return 0.0;
}

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  const double lo = std::max(a.lo, b.lo);
  const double hi = std::min(a.hi, b.hi);
  if (lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

SubgradRule parse_subgrad_rule(std::string_view name) {
  if (name == "left") return SubgradRule::kLeft;
  if (name == "right") return SubgradRule::kRight;
  if (name == "midpoint") return SubgradRule::kMidpoint;
  throw ObjectiveError("unknown subgradient rule '" + std::string(name) + "' (left, right, midpoint)");
}

std::string_view to_string(SubgradRule rule) {
  switch (rule) {
    case SubgradRule::kLeft: return "left";
    case SubgradRule::kRight: return "right";
    case SubgradRule::kMidpoint: return "midpoint";
  }
  return "midpoint";
}

ScalarConvexFn::ScalarConvexFn(Params params) : params_(params) {
  std::visit(Overloaded{
                 [](const AbsShift& p) {
                   require_finite(p.center, "abs_shift center");
                   require_positive(p.weight, "abs_shift weight");
                 },
                 [](const FlatBottom& p) {
                   require_finite(p.a, "flat_bottom a");
                   require_finite(p.b, "flat_bottom b");
                   if (p.a > p.b) throw ObjectiveError("flat_bottom requires a <= b");
                   require_positive(p.slope_left, "flat_bottom slope_left");
                   require_positive(p.slope_right, "flat_bottom slope_right");
                 },
                 [](const SmoothAbs& p) {
                   require_finite(p.center, "smooth_abs center");
                   require_positive(p.eps, "smooth_abs eps");
                   require_positive(p.scale, "smooth_abs scale");
                 },
             },
             params_);
}

double ScalarConvexFn::eval(double x) const {
  if (!std::isfinite(x)) throw ObjectiveError("evaluation point must be finite");
  return std::visit(Overloaded{
                        [x](const AbsShift& p) { return p.weight * std::abs(x - p.center); },
                        [x](const FlatBottom& p) { return flat_eval(p, x); },
                        [x](const SmoothAbs& p) {
                          const double u = x - p.center;
                          return p.scale * (std::hypot(u, p.eps) - p.eps);
                        },
                    },
                    params_);
}

double ScalarConvexFn::subgrad(double x, SubgradRule rule) const {
  if (!std::isfinite(x)) throw ObjectiveError("subgradient point must be finite");
  return std::visit(Overloaded{
                        [&](const AbsShift& p) { return flat_subgrad(as_flat_bottom(p), x, rule); },
                        [&](const FlatBottom& p) { return flat_subgrad(p, x, rule); },
                        [&](const SmoothAbs& p) {
                          const double u = x - p.center;
                          return p.scale * u / std::hypot(u, p.eps);
                        },
                    },
                    params_);
}

double ScalarConvexFn::lipschitz() const {
  return std::visit(Overloaded{
                        [](const AbsShift& p) { return p.weight; },
                        [](const FlatBottom& p) { return std::max(p.slope_left, p.slope_right); },
                        [](const SmoothAbs& p) { return p.scale; },
                    },
                    params_);
}

Interval ScalarConvexFn::argmin() const {
  return std::visit(Overloaded{
                        [](const AbsShift& p) { return Interval{p.center, p.center}; },
                        [](const FlatBottom& p) { return Interval{p.a, p.b}; },
                        [](const SmoothAbs& p) { return Interval{p.center, p.center}; },
                    },
                    params_);
}

bool ScalarConvexFn::piecewise_linear() const { return !std::holds_alternative<SmoothAbs>(params_); }

bool ScalarConvexFn::differentiable() const { return std::holds_alternative<SmoothAbs>(params_); }

std::vector<double> ScalarConvexFn::breakpoints() const {
  return std::visit(Overloaded{
                        [](const AbsShift& p) { return std::vector<double>{p.center}; },
                        [](const FlatBottom& p) {
                          return p.a == p.b ? std::vector<double>{p.a} : std::vector<double>{p.a, p.b};
                        },
                        [](const SmoothAbs&) { return std::vector<double>{}; },
                    },
                    params_);
}

std::string_view ScalarConvexFn::kind() const {
  return std::visit(Overloaded{
                        [](const AbsShift&) { return std::string_view("abs_shift"); },
                        [](const FlatBottom&) { return std::string_view("flat_bottom"); },
                        [](const SmoothAbs&) { return std::string_view("smooth_abs"); },
                    },
                    params_);
}

FnCollection::FnCollection(std::vector<ScalarConvexFn> members) : members_(std::move(members)) {
  if (members_.empty()) throw ObjectiveError("a function collection needs at least one member");
}

double FnCollection::lipschitz() const {
  double l = 0.0;
  for (const auto& fn : members_) l = std::max(l, fn.lipschitz());
  return l;
}

bool FnCollection::all_piecewise_linear() const {
  return std::all_of(members_.begin(), members_.end(), [](const auto& fn) { return fn.piecewise_linear(); });
}

bool FnCollection::all_differentiable() const {
  return std::all_of(members_.begin(), members_.end(), [](const auto& fn) { return fn.differentiable(); });
}

LocalObjective::LocalObjective(std::vector<double> weights, const FnCollection& collection)
    : weights_(std::move(weights)), collection_(&collection) {
  check_weights(weights_, collection);
  const double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw ObjectiveError("local objective weights must sum to 1");
}

double LocalObjective::eval(double x) const { return weighted_eval(weights_, *collection_, x); }

double LocalObjective::subgrad(double x, SubgradRule rule) const {
  return weighted_subgrad(weights_, *collection_, x, rule);
}

double weighted_eval(const std::vector<double>& weights, const FnCollection& fns, double x) {
  double v = 0.0;
  for (std::size_t j = 0; j < fns.size(); ++j) {
    if (weights[j] != 0.0) v += weights[j] * fns[j].eval(x);
  }
  return v;
}

double weighted_subgrad(const std::vector<double>& weights, const FnCollection& fns, double x, SubgradRule rule) {
  // The subdifferential of a positive combination is the weighted sum of the
  // member subdifferentials, so per-member midpoints give the overall midpoint.
  double g = 0.0;
  for (std::size_t j = 0; j < fns.size(); ++j) {
    if (weights[j] != 0.0) g += weights[j] * fns[j].subgrad(x, rule);
  }
  return g;
}

Interval argmin_interval(const std::vector<double>& weights, const FnCollection& fns) {
  check_weights(weights, fns);
  std::vector<double> points;
  double slope_scale = 0.0;
  for (std::size_t j = 0; j < fns.size(); ++j) {
    if (weights[j] == 0.0) continue;
    if (!fns[j].piecewise_linear()) {
      throw ObjectiveError("exact argmin needs piecewise-linear members; function " + std::to_string(j) +
                           " is " + std::string(fns[j].kind()) + ", use argmin_by_bisection instead");
    }
    const auto bp = fns[j].breakpoints();
    points.insert(points.end(), bp.begin(), bp.end());
    slope_scale += weights[j] * fns[j].lipschitz();
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  const std::size_t m = points.size();
  // Slope on segment s: s = 0 is (-inf, p0), s = m is (p_{m-1}, inf).
  auto segment_slope = [&](std::size_t s) {
    double x;
    if (s == 0) x = points.front() - 1.0;
    else if (s == m) x = points.back() + 1.0;
    else x = 0.5 * (points[s - 1] + points[s]);
    return weighted_subgrad(weights, fns, x);
  };
  const double zero_tol = 1e-12 * slope_scale;

  for (std::size_t s = 0; s <= m; ++s) {
    const double slope = segment_slope(s);
    if (slope < -zero_tol) continue;
    // s >= 1: every member slopes downward left of its breakpoints.
    const double lo = points[s - 1];
    if (slope > zero_tol) return Interval{lo, lo};
    std::size_t last = s;
    while (last < m && std::abs(segment_slope(last + 1)) <= zero_tol) ++last;
    return Interval{lo, points[last]};
  }
  throw ObjectiveError("argmin scan found no nonnegative slope; collection is not admissible");
}

Interval argmin_interval(const FnCollection& fns) {
  return argmin_interval(std::vector<double>(fns.size(), 1.0 / static_cast<double>(fns.size())), fns);
}

Interval argmin_by_bisection(const std::vector<double>& weights, const FnCollection& fns, double tol) {
  check_weights(weights, fns);
  auto right_deriv = [&](double x) { return weighted_subgrad(weights, fns, x, SubgradRule::kRight); };
  auto left_deriv = [&](double x) { return weighted_subgrad(weights, fns, x, SubgradRule::kLeft); };

  double lo_bracket = -1.0;
  double hi_bracket = 1.0;
  for (int i = 0; i < 200 && right_deriv(lo_bracket) >= 0.0; ++i) lo_bracket *= 2.0;
  for (int i = 0; i < 200 && left_deriv(hi_bracket) <= 0.0; ++i) hi_bracket *= 2.0;

  // lo = inf{x : right derivative >= 0}; hi = sup{x : left derivative <= 0}.
  auto bisect = [&](auto&& is_right_side, double a, double b) {
    for (int i = 0; i < 400 && b - a > tol * std::max(1.0, std::abs(a)); ++i) {
      const double mid = 0.5 * (a + b);
      if (is_right_side(mid)) b = mid;
      else a = mid;
    }
    return 0.5 * (a + b);
  };
  const double lo = bisect([&](double x) { return right_deriv(x) >= 0.0; }, lo_bracket, hi_bracket);
  const double hi = bisect([&](double x) { return left_deriv(x) > 0.0; }, lo_bracket, hi_bracket);
  return Interval{lo, std::max(lo, hi)};
}

std::string_view to_string(RedundancyCase c) {
  switch (c) {
    case RedundancyCase::kCase1: return "case1";
    case RedundancyCase::kCase2: return "case2";
    case RedundancyCase::kCase3: return "case3";
  }
  return "case3";
}

RedundancyCase classify_redundancy(const FnCollection& fns) {
  const Interval first = fns[0].argmin();
  bool same_point = first.lo == first.hi;
  std::optional<Interval> common = first;
  for (const auto& fn : fns.members()) {
    const Interval x = fn.argmin();
    same_point = same_point && x == first;
    if (common) common = intersect(*common, x);
  }
  if (same_point) return RedundancyCase::kCase1;
  return common ? RedundancyCase::kCase2 : RedundancyCase::kCase3;
}

GlobalOptimum optimum_set_global(const FnCollection& fns) {
  GlobalOptimum out;
  out.redundancy = classify_redundancy(fns);
  if (out.redundancy != RedundancyCase::kCase3) {
    std::optional<Interval> common = fns[0].argmin();
    for (const auto& fn : fns.members()) common = intersect(*common, fn.argmin());
    out.interval = *common;
    out.exact = true;
    return out;
  }
  out.interval = fns[0].argmin();
  for (const auto& fn : fns.members()) {
    out.interval.lo = std::min(out.interval.lo, fn.argmin().lo);
    out.interval.hi = std::max(out.interval.hi, fn.argmin().hi);
  }
  out.exact = false;
  return out;
}

}  // namespace bzopt
