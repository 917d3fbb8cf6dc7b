#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "bzopt/assignment.hpp"

using namespace bzopt;

namespace {

// Smallest m such that every m-subset of columns sums positive; n+1 otherwise.
std::size_t oracle_sparsity(const Eigen::MatrixXd& a) {
  const auto k = static_cast<std::size_t>(a.rows());
  const auto n = static_cast<std::size_t>(a.cols());
  for (std::size_t m = 1; m <= n; ++m) {
    bool every = true;
    for (std::uint32_t mask = 0; mask < (1U << n) && every; ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
      for (std::size_t r = 0; r < k && every; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c)
          if ((mask >> c) & 1U) s += a(r, c);
        every = s > 0.0;
      }
    }
    if (every) return m;
  }
  return n + 1;
}

// Gaussian elimination with partial pivoting.
std::size_t oracle_rank(Eigen::MatrixXd m) {
  std::size_t rank = 0;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index c = 0; c < m.cols() && rank < static_cast<std::size_t>(m.rows()); ++c) {
    Eigen::Index piv = static_cast<Eigen::Index>(rank);
    for (Eigen::Index r = piv; r < m.rows(); ++r)
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    if (std::abs(m(piv, c)) <= 1e-9 * scale) continue;
    m.row(piv).swap(m.row(static_cast<Eigen::Index>(rank)));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r == static_cast<Eigen::Index>(rank)) continue;
      m.row(r) -= m(r, c) / m(static_cast<Eigen::Index>(rank), c) * m.row(static_cast<Eigen::Index>(rank));
    }
    ++rank;
  }
  return rank;
}

bool oracle_capable(const Eigen::MatrixXd& a, std::size_t f) {
  const auto k = static_cast<std::size_t>(a.rows());
  const auto n = static_cast<std::size_t>(a.cols());
  if (n < 2 * f + k) return false;
  for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != 2 * f) continue;
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(n - 2 * f));
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < n; ++c)
      if (!((mask >> c) & 1U)) sub.col(j++) = a.col(static_cast<Eigen::Index>(c));
    if (oracle_rank(sub) < k) return false;
  }
  return true;
}

Eigen::MatrixXd random_stochastic(std::mt19937_64& rng, std::size_t k, std::size_t n, double zero_prob,
                                  bool allow_zero_rows) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::bernoulli_distribution zero(zero_prob);
  Eigen::MatrixXd m(k, n);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < n; ++c) m(r, c) = zero(rng) ? 0.0 : u(rng);
  std::optional<Eigen::Index> dead;
  if (allow_zero_rows && k > 1 && rng() % 4 == 0) {
    dead = static_cast<Eigen::Index>(rng() % k);
    m.row(*dead).setZero();
  }
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (m.col(c).sum() > 0.0) continue;
    Eigen::Index r = static_cast<Eigen::Index>(rng() % k);
    if (dead && r == *dead) r = (r + 1) % static_cast<Eigen::Index>(k);
    m(r, c) = 1.0;
  }
  return m;
}

}  // namespace

TEST(AssignmentMatrix, RejectsInvalidEntries) {
  EXPECT_THROW(AssignmentMatrix::from_rows({{0.5, 1.0}, {0.4, 0.0}}), AssignmentError);
  EXPECT_THROW(AssignmentMatrix::from_rows({{1.5, 1.0}, {-0.5, 0.0}}), AssignmentError);
  EXPECT_THROW(AssignmentMatrix::from_rows({{1.0, 1.0}, {0.0}}), AssignmentError);
  EXPECT_NO_THROW(AssignmentMatrix::from_rows({{0.5, 1.0}, {0.5, 0.0}}));
}

TEST(AssignmentMatrix, NamedConstructors) {
  const auto id = AssignmentMatrix::identity(3);
  EXPECT_TRUE(id.entries().isIdentity());
  const auto rep = AssignmentMatrix::repetition(2, 3);
  EXPECT_EQ(rep.k(), 2U);
  EXPECT_EQ(rep.n(), 6U);
  EXPECT_EQ(rep(0, 2), 1.0);
  EXPECT_EQ(rep(1, 2), 0.0);
  EXPECT_EQ(rep(1, 3), 1.0);
  Eigen::MatrixXd raw(2, 2);
  raw << 1, 0, 3, 2;
  const auto norm = AssignmentMatrix::normalized(raw);
  EXPECT_DOUBLE_EQ(norm(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(norm(1, 1), 1.0);
  raw.col(1).setZero();
  EXPECT_THROW(AssignmentMatrix::normalized(raw), AssignmentError);
}

TEST(Sparsity, StrictlyPositiveIsOne) {
  const auto a = AssignmentMatrix::from_rows({{0.3, 0.5, 0.9}, {0.7, 0.5, 0.1}});
  EXPECT_EQ(sparsity_by_definition(a).value, 1U);
  EXPECT_EQ(sparsity_by_row_zeros(a).value, 1U);
}

TEST(Sparsity, IdentityEqualsK) {
  for (std::size_t k = 1; k <= 5; ++k) {
    const auto a = AssignmentMatrix::identity(k);
    EXPECT_EQ(sparsity_by_definition(a).value, k);
    EXPECT_EQ(sparsity_by_row_zeros(a).value, k);
  }
}

TEST(Sparsity, AllZeroRowIsNPlusOne) {
  const auto a = AssignmentMatrix::from_rows({{1, 1, 1}, {0, 0, 0}});
  EXPECT_EQ(sparsity_by_definition(a).value, 4U);
  EXPECT_EQ(sparsity_by_row_zeros(a).value, 4U);
}

TEST(Sparsity, TwoByThreeExample) {
  const auto a = AssignmentMatrix::from_rows({{0.5, 0, 1}, {0.5, 1, 0}});
  const auto def = sparsity_by_definition(a);
  EXPECT_EQ(def.value, 2U);
  EXPECT_EQ(def.value, oracle_sparsity(a.entries()));
  ASSERT_EQ(def.witness.size(), 1U);
  EXPECT_EQ(sparsity_by_row_zeros(a).value, 2U);
  EXPECT_EQ(sparsity_by_row_zeros(a).max_row_zeros, 1U);
}

TEST(Sparsity, WitnessHasAZeroCoordinate) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = AssignmentMatrix::normalized(random_stochastic(rng, 1 + rng() % 4, 1 + rng() % 6, 0.4, false));
    const auto rep = sparsity_by_definition(a);
    if (rep.value == 1 || rep.value == a.n() + 1) continue;
    ASSERT_EQ(rep.witness.size(), rep.value - 1);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.k()));
    for (auto c : rep.witness) sum += a.entries().col(static_cast<Eigen::Index>(c));
    EXPECT_EQ(sum.minCoeff(), 0.0);
  }
}

TEST(Sparsity, DefinitionAndRowZerosAgree) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng() % 6;
    const std::size_t n = 1 + rng() % 6;
    const auto a = AssignmentMatrix::normalized(random_stochastic(rng, k, n, 0.45, true));
    const auto oracle = oracle_sparsity(a.entries());
    EXPECT_EQ(sparsity_by_definition(a).value, oracle);
    EXPECT_EQ(sparsity_by_row_zeros(a).value, oracle);
  }
}

TEST(ConstructSparsest, SingleRowNoZeros) {
  const auto a = construct_sparsest(1, 3, 1, 0);
  EXPECT_TRUE(a.entries().isApprox(Eigen::MatrixXd::Ones(1, 3)));
}

TEST(ConstructSparsest, TwoByFour) {
  int feasible = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    try {
      const auto a = construct_sparsest(2, 4, 2, seed);
      ++feasible;
      EXPECT_EQ(oracle_sparsity(a.entries()), 2U);
      EXPECT_EQ((a.entries().array() > 0).count(), 6);
    } catch (const AssignmentError&) {
      // Both rows chose the same zero column.
    }
  }
  EXPECT_GT(feasible, 0);
}

TEST(ConstructSparsest, DiagonalPatternGivesIdentity) {
  const auto a = construct_from_zero_pattern(3, 3, {{1, 2}, {0, 2}, {0, 1}});
  EXPECT_TRUE(a.entries().isIdentity());
}

TEST(ConstructSparsest, InfeasiblePatternNamesColumn) {
  try {
    (void)construct_from_zero_pattern(2, 3, {{1}, {1}});
    FAIL() << "expected an error";
  } catch (const AssignmentError& e) {
    EXPECT_NE(std::string(e.what()).find("column 1"), std::string::npos) << e.what();
  }
}

TEST(ConstructSparsest, AlwaysValidWithExactSparsity) {
  std::mt19937_64 rng(11);
  int built = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + rng() % 5;
    const std::size_t n = 1 + rng() % 6;
    const std::size_t s = 1 + rng() % n;
    try {
      const auto a = construct_sparsest(k, n, s, rng());
      ++built;
      EXPECT_EQ(oracle_sparsity(a.entries()), s);
      EXPECT_EQ(static_cast<std::size_t>((a.entries().array() > 0).count()), (n - s + 1) * k);
      for (Eigen::Index c = 0; c < a.entries().cols(); ++c) EXPECT_NEAR(a.entries().col(c).sum(), 1.0, 1e-12);
    } catch (const AssignmentError&) {
      // Some seeds leave a column with no nonzero entry.
    }
  }
  EXPECT_GT(built, 150);
}

TEST(DecodingCapability, RepetitionOfThree) {
  EXPECT_TRUE(decoding_capability(AssignmentMatrix::from_rows({{1, 1, 1}}), 1));
}

TEST(DecodingCapability, TooFewColumns) {
  EXPECT_FALSE(decoding_capability(AssignmentMatrix::from_rows({{1, 1}}), 1));
}

TEST(DecodingCapability, StackedBlocksFollowRankOracle) {
  const auto a = AssignmentMatrix::repetition(2, 3);
  EXPECT_EQ(decoding_capability(a, 1), oracle_capable(a.entries(), 1));
  EXPECT_EQ(decoding_capability(a, 2), oracle_capable(a.entries(), 2));
}

TEST(DecodingCapability, ZeroFaultsMeansFullRank) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng() % 4;
    const auto a = AssignmentMatrix::normalized(random_stochastic(rng, k, 1 + rng() % 6, 0.5, false));
    EXPECT_EQ(decoding_capability(a, 0), oracle_rank(a.entries()) == k);
    EXPECT_EQ(matrix_rank(a.entries()), oracle_rank(a.entries()));
  }
}

TEST(DecodingCapability, MatchesOracleAndIsMonotone) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + rng() % 3;
    const std::size_t n = k + rng() % 6;
    const auto a = AssignmentMatrix::normalized(random_stochastic(rng, k, n, 0.3, false));
    bool previous = true;
    for (std::size_t f = 0; f <= 3; ++f) {
      const bool cap = decoding_capability(a, f);
      EXPECT_EQ(cap, oracle_capable(a.entries(), f));
      EXPECT_TRUE(previous || !cap);
      previous = cap;
    }
  }
}
