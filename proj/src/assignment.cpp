#include "bzopt/assignment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace bzopt {

namespace {

// Calls visit(cols) for every size-m subset of 0..n-1 in lexicographic order
// until visit returns false. Returns false if stopped early.
template <typename Visit>
bool for_each_combination(std::size_t n, std::size_t m, Visit&& visit) {
  if (m > n) return true;
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    if (!visit(idx)) return false;
    if (m == 0) return true;
    std::size_t pos = m;
    while (pos > 0 && idx[pos - 1] == n - m + pos - 1) --pos;
    if (pos == 0) return true;
    ++idx[pos - 1];
    for (std::size_t i = pos; i < m; ++i) idx[i] = idx[i - 1] + 1;
  }
}

std::vector<std::size_t> row_zero_counts(const AssignmentMatrix& a) {
  std::vector<std::size_t> counts(a.k(), 0);
  for (std::size_t r = 0; r < a.k(); ++r) {
    for (std::size_t c = 0; c < a.n(); ++c) {
      if (a(r, c) == 0.0) ++counts[r];
    }
  }
  return counts;
}

}  // namespace

AssignmentMatrix::AssignmentMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.cols() == 0) {
    throw AssignmentError("assignment matrix must be at least 1x1");
  }
  for (Eigen::Index c = 0; c < entries_.cols(); ++c) {
    double sum = 0.0;
    for (Eigen::Index r = 0; r < entries_.rows(); ++r) {
      const double v = entries_(r, c);
      if (!std::isfinite(v) || v < 0.0) {
        throw AssignmentError("entry (" + std::to_string(r) + ", " + std::to_string(c) +
                              ") must be finite and nonnegative");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kColumnSumTolerance) {
      throw AssignmentError("column " + std::to_string(c) + " sums to " + std::to_string(sum) +
                            ", expected 1");
    }
  }
}

AssignmentMatrix AssignmentMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw AssignmentError("assignment matrix has no entries");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw AssignmentError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                            " entries, expected " + std::to_string(rows.front().size()));
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return AssignmentMatrix(std::move(m));
}

AssignmentMatrix AssignmentMatrix::identity(std::size_t k) {
  return AssignmentMatrix(Eigen::MatrixXd::Identity(k, k));
}

AssignmentMatrix AssignmentMatrix::repetition(std::size_t k, std::size_t copies) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k * copies);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < copies; ++c) m(j, j * copies + c) = 1.0;
  }
  return AssignmentMatrix(std::move(m));
}

AssignmentMatrix AssignmentMatrix::normalized(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd m = raw;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double sum = m.col(c).sum();
    if (!(sum > 0.0)) {
      throw AssignmentError("column " + std::to_string(c) +
                            " has no positive entry; no column-stochastic completion exists");
    }
    m.col(c) /= sum;
  }
  return AssignmentMatrix(std::move(m));
}

std::vector<double> AssignmentMatrix::column(std::size_t i) const {
  std::vector<double> out(k());
  for (std::size_t r = 0; r < k(); ++r) out[r] = entries_(r, i);
  return out;
}

std::vector<std::vector<double>> AssignmentMatrix::rows() const {
  std::vector<std::vector<double>> out(k(), std::vector<double>(n()));
  for (std::size_t r = 0; r < k(); ++r) {
    for (std::size_t c = 0; c < n(); ++c) out[r][c] = entries_(r, c);
  }
  return out;
}

SparsityReport sparsity_by_definition(const AssignmentMatrix& a) {
  const std::size_t n = a.n();
  if (n > 24) throw AssignmentError("subset enumeration supports at most 24 columns");
  SparsityReport report;
  const auto zeros = row_zero_counts(a);
  report.max_row_zeros = *std::max_element(zeros.begin(), zeros.end());

  auto has_zero_coordinate = [&](const std::vector<std::size_t>& cols) {
    for (std::size_t r = 0; r < a.k(); ++r) {
      double sum = 0.0;
      for (std::size_t c : cols) sum += a(r, c);
      if (!(sum > 0.0)) return true;
    }
    return false;
  };

  std::vector<std::size_t> previous_failure;
  for (std::size_t m = 1; m <= n; ++m) {
    std::vector<std::size_t> failing;
    const bool all_positive = for_each_combination(n, m, [&](const std::vector<std::size_t>& cols) {
      if (has_zero_coordinate(cols)) {
        failing = cols;
        return false;
      }
      return true;
    });
    if (all_positive) {
      report.value = m;
      report.witness = previous_failure;
      return report;
    }
    previous_failure = failing;
  }
  report.value = n + 1;
  return report;
}

SparsityReport sparsity_by_row_zeros(const AssignmentMatrix& a) {
  SparsityReport report;
  const auto zeros = row_zero_counts(a);
  const auto worst = std::max_element(zeros.begin(), zeros.end());
  report.max_row_zeros = *worst;
  if (report.max_row_zeros == a.n()) {
    report.value = a.n() + 1;
    return report;
  }
  report.value = report.max_row_zeros + 1;
  const auto row = static_cast<std::size_t>(worst - zeros.begin());
  for (std::size_t c = 0; c < a.n(); ++c) {
    if (a(row, c) == 0.0) report.witness.push_back(c);
  }
  return report;
}

AssignmentMatrix construct_from_zero_pattern(std::size_t k, std::size_t n,
                                             const std::vector<std::vector<std::size_t>>& zeros) {
  if (zeros.size() != k) throw AssignmentError("zero pattern must list one entry per row");
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(k, n);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c : zeros[r]) {
      if (c >= n) throw AssignmentError("zero position " + std::to_string(c) + " out of range");
      m(r, c) = 0.0;
    }
  }
  return AssignmentMatrix::normalized(m);
}

AssignmentMatrix construct_sparsest(std::size_t k, std::size_t n, std::size_t s, std::uint64_t pattern_seed) {
  if (k == 0 || n == 0) throw AssignmentError("k and n must be positive");
  if (s < 1 || s > n) throw AssignmentError("sparsity parameter must lie in 1..n");
  std::mt19937_64 rng(pattern_seed);
  std::vector<std::vector<std::size_t>> zeros(k);
  for (std::size_t r = 0; r < k; ++r) {
    std::vector<std::size_t> cols(n);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    std::shuffle(cols.begin(), cols.end(), rng);
    zeros[r].assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(s - 1));
    std::sort(zeros[r].begin(), zeros[r].end());
  }
  return construct_from_zero_pattern(k, n, zeros);
}

std::size_t matrix_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(tol);
  return static_cast<std::size_t>(lu.rank());
}

bool decoding_capability(const AssignmentMatrix& a, std::size_t f, double tol) {
  const std::size_t n = a.n();
  const std::size_t k = a.k();
  if (n < 2 * f + k) return false;
  const std::size_t keep = n - 2 * f;
  return for_each_combination(n, keep, [&](const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd sub(k, keep);
    for (std::size_t c = 0; c < keep; ++c) sub.col(static_cast<Eigen::Index>(c)) = a.entries().col(static_cast<Eigen::Index>(cols[c]));
    return matrix_rank(sub, tol) == k;
  });
}

}  // namespace bzopt
