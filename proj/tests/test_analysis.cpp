#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bzopt/analysis.hpp"
#include "bzopt/harness.hpp"

using namespace bzopt;

namespace {

Scenario make(DiGraph g, AgentSet faulty, std::size_t f, AdversarySpec adv, FnCollection fns,
              std::vector<double> x0, std::size_t rounds) {
  const std::size_t n = g.size();
  return Scenario{"analysis",
                  std::move(g),
                  FaultySet{faulty, f},
                  adv,
                  AssignmentMatrix::normalized(Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(n))),
                  std::move(fns),
                  StepSchedule::harmonic(1.0),
                  std::move(x0),
                  rounds,
                  0.0,
                  0,
                  SubgradRule::kMidpoint,
                  false,
                  false};
}

FnCollection zero_gradients() { return FnCollection({ScalarConvexFn::flat_bottom(-1e9, 1e9)}); }

// The constant-lie run on K5, shortened.
RunConfig k5_run(std::size_t rounds) {
  auto doc = library_config("k5-constant-lie");
  doc["rounds"] = rounds;
  return parse_run_config(doc);
}

// x(t+1) recomputed from M, with d and alpha read back from the trace.
double step_residual(const Eigen::MatrixXd& m, const Trace& tr, const std::vector<Agent>& idx, std::size_t t) {
  double worst = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    double v = -tr.step_sizes[t] * tr.gradients[t][idx[a]];
    for (std::size_t b = 0; b < idx.size(); ++b)
      v += m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * tr.states[t][idx[b]];
    worst = std::max(worst, std::abs(v - tr.states[t + 1][idx[a]]));
  }
  return worst;
}

// Drops the tail whose backward products have not collapsed yet.
std::vector<PiEstimate> converged_pis(const TransitionRecord& rec) {
  auto pis = estimate_pi_series(rec, rec.M.size() - 1);
  std::size_t k = 0;
  while (k < pis.size() && pis[k].converged()) ++k;
  pis.resize(k);
  return pis;
}

}  // namespace

TEST(BuildM, NoFaultsGivesUniformRows) {
  const auto s = make(DiGraph::complete(4), AgentSet{}, 0, AdversarySpec::constant(0.0), zero_gradients(),
                      {0.0, 1.0, 2.0, 3.0}, 3);
  const auto tr = run_scenario(s);
  for (std::size_t t = 0; t < 3; ++t) {
    const auto m = build_M(tr, s.graph, t);
    ASSERT_EQ(m.rows(), 4);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(m(i, j), 0.25);
  }
}

TEST(BuildM, KeptFaultyValueIsBracketed) {
  const auto s = make(DiGraph::complete(4), AgentSet{3}, 1, AdversarySpec::constant(3.0), zero_gradients(),
                      {0.0, 2.0, 4.0, 0.0}, 1);
  const auto tr = run_scenario(s);
  const auto m = build_M(tr, s.graph, 0);
  // Agent 0 keeps the lie 3 between 2 and 4; agent 1 keeps it between 0 and 4;
  // agent 2 keeps agent 1's honest value.
  Eigen::Matrix3d expect;
  expect << 0.5, 0.25, 0.25,
            0.125, 0.5, 0.375,
            0.0, 0.5, 0.5;
  EXPECT_LT((m - expect).cwiseAbs().maxCoeff(), 1e-15) << m;
  EXPECT_LT(step_residual(m, tr, nonfaulty_agents(tr), 0), 1e-15);
}

TEST(BuildM, DegenerateBracketTakesFullWeight) {
  const auto s = make(DiGraph::complete(4), AgentSet{3}, 1, AdversarySpec::constant(2.0), zero_gradients(),
                      {0.0, 2.0, 4.0, 0.0}, 1);
  const auto tr = run_scenario(s);
  const auto m = build_M(tr, s.graph, 0);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m(0, 2), 0.0);
  EXPECT_LT(step_residual(m, tr, nonfaulty_agents(tr), 0), 1e-15);
}

TEST(BuildM, ReproducesTheK5Run) {
  const auto cfg = k5_run(300);
  const auto tr = run_scenario(cfg.scenario);
  const auto idx = nonfaulty_agents(tr);
  EXPECT_EQ(idx, (std::vector<Agent>{0, 1, 2, 3}));
  for (std::size_t t = 0; t < 300; ++t) {
    const auto m = build_M(tr, cfg.scenario.graph, t);
    ASSERT_LT(step_residual(m, tr, idx, t), 1e-10) << "round " << t;
  }
  const auto rec = build_transition_record(tr, cfg.scenario.graph);
  ASSERT_EQ(rec.M.size(), 300U);
  for (double r : rec.residual) EXPECT_LT(r, 1e-10);
}

TEST(CheckM, PropertiesOnTheK5Run) {
  const auto cfg = k5_run(300);
  const auto tr = run_scenario(cfg.scenario);
  const auto rec = build_transition_record(tr, cfg.scenario.graph);
  EXPECT_GT(rec.beta, 0.0);
  for (std::size_t t = 0; t < rec.M.size(); ++t) {
    const auto c = check_M(rec.M[t], tr, cfg.scenario.graph, t, rec.beta);
    EXPECT_TRUE(c.stochastic()) << "round " << t;
    EXPECT_TRUE(c.diagonal_matches) << "round " << t;
    EXPECT_TRUE(c.support_on_edges) << "round " << t;
    // Every honest agent on K5 has exactly one faulty in-neighbour here.
    EXPECT_TRUE(c.beta_counts_ok()) << "round " << t;
    EXPECT_TRUE(find_reduced_witness(rec.M[t], rec.beta, cfg.scenario.graph, cfg.scenario.faulty, rec.index))
        << "round " << t;
  }
}

TEST(CheckM, WitnessAbsentBelowBeta) {
  const auto s = make(DiGraph::complete(4), AgentSet{3}, 1, AdversarySpec::constant(3.0), zero_gradients(),
                      {0.0, 2.0, 4.0, 0.0}, 1);
  const auto tr = run_scenario(s);
  const auto m = build_M(tr, s.graph, 0);
  const auto idx = nonfaulty_agents(tr);
  EXPECT_TRUE(find_reduced_witness(m, 0.125, s.graph, s.faulty, idx));
  // With beta above every off-diagonal weight of row 2 and row 0, too many
  // edges would have to be dropped.
  EXPECT_FALSE(find_reduced_witness(m, 0.6, s.graph, s.faulty, idx));
}

TEST(PhiProduct, IdentityAndNaiveProduct) {
  const auto cfg = k5_run(60);
  const auto tr = run_scenario(cfg.scenario);
  const auto rec = build_transition_record(tr, cfg.scenario.graph);
  const auto id = Eigen::MatrixXd::Identity(4, 4);
  for (std::size_t t = 0; t < 20; ++t) EXPECT_EQ(phi_product(rec, t, t + 1), id);
  for (std::size_t r : {0U, 5U, 17U}) {
    Eigen::MatrixXd naive = id;
    for (std::size_t t = r; t < r + 25; ++t) {
      naive = rec.M[t] * naive;
      const Eigen::MatrixXd phi = phi_product(rec, t, r);
      EXPECT_LT((phi - naive).cwiseAbs().maxCoeff(), 1e-14);
      EXPECT_LT((phi.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
      EXPECT_GE(phi.minCoeff(), 0.0);
    }
  }
}

TEST(PiEstimate, UniformMatricesGiveUniformPi) {
  const auto s = make(DiGraph::complete(4), AgentSet{}, 0, AdversarySpec::constant(0.0), zero_gradients(),
                      {0.0, 1.0, 2.0, 3.0}, 10);
  const auto tr = run_scenario(s);
  const auto rec = build_transition_record(tr, s.graph);
  const auto pi = estimate_pi(rec, 2, 9);
  EXPECT_TRUE(pi.converged());
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(pi.pi(j), 0.25, 1e-15);
}

TEST(PiEstimate, SeriesMatchesSingleEstimates) {
  const auto cfg = k5_run(200);
  const auto tr = run_scenario(cfg.scenario);
  const auto rec = build_transition_record(tr, cfg.scenario.graph);
  const auto series = estimate_pi_series(rec, 199);
  ASSERT_EQ(series.size(), 200U);
  for (std::size_t r : {0U, 40U, 120U}) {
    const auto single = estimate_pi(rec, r, 199);
    EXPECT_LT((single.pi - series[r].pi).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(series[r].pi.sum(), 1.0, 1e-12);
    EXPECT_TRUE(series[r].converged()) << "r = " << r << " diameter " << series[r].diameter;
  }
}

TEST(ColumnLowerBound, CompleteGraphWithoutFaults) {
  const auto s = make(DiGraph::complete(4), AgentSet{}, 0, AdversarySpec::constant(0.0), zero_gradients(),
                      {0.0, 1.0, 2.0, 3.0}, 12);
  const auto tr = run_scenario(s);
  const auto rec = build_transition_record(tr, s.graph);
  EXPECT_DOUBLE_EQ(rec.beta, 0.25);
  EXPECT_EQ(rec.tau, 1U);
  EXPECT_EQ(rec.nu, 4U);
  const auto ok = check_lemma_lb(rec, 0, 1, 0);
  EXPECT_TRUE(ok.sufficient_horizon);
  EXPECT_EQ(ok.qualifying_columns, 4U);
  EXPECT_TRUE(ok.pass());
  const auto late = check_lemma_lb(rec, 10, 1, 0);
  EXPECT_FALSE(late.sufficient_horizon);
  EXPECT_FALSE(late.pass());
}

TEST(ColumnLowerBound, RateAndPiLowerOnTheK5Run) {
  const auto cfg = k5_run(300);
  const auto tr = run_scenario(cfg.scenario);
  const auto rec = build_transition_record(tr, cfg.scenario.graph);
  const auto pis = estimate_pi_series(rec, 299);
  for (std::size_t r = 0; r < 30; ++r) {
    const auto pl = check_pi_lower(rec, pis[r], 2, 1);
    EXPECT_TRUE(pl.conclusive);
    EXPECT_TRUE(pl.pass());
    for (std::size_t t = r; t < 30; ++t) {
      const auto rate = check_rate(rec, t, r, pis[r]);
      EXPECT_TRUE(rate.pass()) << "t " << t << " r " << r << " margin " << rate.margin;
    }
  }
}

TEST(YSequence, ConstantWithoutGradients) {
  const auto s = make(DiGraph::complete(5), AgentSet{4}, 1, AdversarySpec::constant(7.0), zero_gradients(),
                      {-3.0, 2.0, 5.0, 8.0, 0.0}, 150);
  const auto tr = run_scenario(s);
  const auto rec = build_transition_record(tr, s.graph);
  const auto pis = converged_pis(rec);
  ASSERT_GT(pis.size(), 100U);
  const auto ys = y_sequence(rec, tr, pis);
  ASSERT_TRUE(ys.conclusive);
  for (double y : ys.y) EXPECT_NEAR(y, ys.y.front(), 1e-9);
  EXPECT_LT(ys.max_route_gap, 1e-9);
  EXPECT_LT(ys.recurrence_residual, 1e-9);
}

TEST(Uub, FirstRoundHasNoSum) {
  const auto cfg = k5_run(50);
  const auto tr = run_scenario(cfg.scenario);
  const auto rec = build_transition_record(tr, cfg.scenario.graph);
  const double lip = cfg.scenario.functions.lipschitz();
  const double gamma = std::exp(rec.log_gamma);
  const double expect = 4.0 * 8.0 * gamma + 2.0 * tr.step_sizes[0] * lip;
  EXPECT_NEAR(uub_bound(rec, tr, 1, lip), expect, 1e-12);
  EXPECT_THROW((void)uub_bound(rec, tr, 0, lip), std::invalid_argument);
}

TEST(Uub, BoundsHoldOnTheK5Run) {
  const auto cfg = k5_run(260);
  const auto tr = run_scenario(cfg.scenario);
  const auto rec = build_transition_record(tr, cfg.scenario.graph);
  const auto pis = converged_pis(rec);
  ASSERT_GT(pis.size(), 201U);
  const auto ys = y_sequence(rec, tr, pis);
  const double lip = cfg.scenario.functions.lipschitz();
  const double x_ref = 0.5;
  for (std::size_t t = 1; t <= 200; ++t) {
    const auto u = check_uub(rec, tr, ys, t, lip);
    EXPECT_TRUE(u.conclusive) << "t " << t;
    EXPECT_TRUE(u.pass()) << "t " << t << " gap " << u.max_gap << " bound " << u.bound;
    const auto b = check_basic_iter(rec, tr, cfg.scenario, ys, pis, t, x_ref);
    EXPECT_TRUE(b.conclusive) << "t " << t;
    EXPECT_TRUE(b.pass()) << "t " << t << " lhs " << b.lhs << " rhs " << b.rhs;
  }
}

TEST(Scope, RejectsLargeRuns) {
  const auto s = make(DiGraph::complete(7), AgentSet{6}, 1, AdversarySpec::constant(0.0), zero_gradients(),
                      std::vector<double>(7, 0.0), 2);
  const auto tr = run_scenario(s);
  EXPECT_THROW(validate_analysis_scope(tr), std::invalid_argument);
  EXPECT_THROW(build_transition_record(tr, s.graph), std::invalid_argument);
}
