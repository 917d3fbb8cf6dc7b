#pragma once

// Job assignment matrices: column i holds the convex weights agent i puts on
// the k input functions.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace bzopt {

class AssignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kColumnSumTolerance = 1e-12;
inline constexpr double kRankTolerance = 1e-9;

/// Nonnegative k x n matrix whose columns each sum to one.
class AssignmentMatrix {
 public:
  /// Throws AssignmentError on negative entries or column sums off by more
  /// than kColumnSumTolerance.
  explicit AssignmentMatrix(Eigen::MatrixXd entries);

  static AssignmentMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static AssignmentMatrix identity(std::size_t k);
  /// k blocks of `copies` columns; block j puts all weight on function j.
  static AssignmentMatrix repetition(std::size_t k, std::size_t copies);
  /// Column-normalizes an arbitrary nonnegative matrix. Fails naming the first
  /// all-zero column.
  static AssignmentMatrix normalized(const Eigen::MatrixXd& raw);

  [[nodiscard]] std::size_t k() const { return static_cast<std::size_t>(entries_.rows()); }
  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(entries_.cols()); }
  [[nodiscard]] double operator()(std::size_t row, std::size_t col) const { return entries_(row, col); }
  [[nodiscard]] const Eigen::MatrixXd& entries() const { return entries_; }
  [[nodiscard]] std::vector<double> column(std::size_t i) const;
  [[nodiscard]] std::vector<std::vector<double>> rows() const;

 private:
  Eigen::MatrixXd entries_;
};

struct SparsityReport {
  std::size_t value = 0;
  /// value - 1 columns whose sum has a zero coordinate (empty when value is 1
  /// or n+1).
  std::vector<std::size_t> witness;
  std::size_t max_row_zeros = 0;
};

/// Smallest m such that every m columns sum to a positive vector (n+1 if even
/// all columns fail). Brute-force subset enumeration; n <= 24.
SparsityReport sparsity_by_definition(const AssignmentMatrix& a);

/// 1 + the largest number of zeros in any row (n+1 if a row is all zero).
SparsityReport sparsity_by_row_zeros(const AssignmentMatrix& a);

/// Matrix with exactly s-1 zeros per row, placed by `zeros[row]`, every other
/// entry 1 before column normalization.
AssignmentMatrix construct_from_zero_pattern(std::size_t k, std::size_t n,
                                             const std::vector<std::vector<std::size_t>>& zeros);

/// Sparsest matrix with sparsity parameter s; zero positions drawn from a
/// seeded shuffle per row.
AssignmentMatrix construct_sparsest(std::size_t k, std::size_t n, std::size_t s, std::uint64_t pattern_seed);

/// Numerical rank via full-pivot LU with relative threshold `tol`.
std::size_t matrix_rank(const Eigen::MatrixXd& m, double tol = kRankTolerance);

/// True iff deleting any 2f columns leaves a rank-k matrix, i.e. any two
/// distinct messages d, d' give codewords dA, d'A differing in at least 2f+1
/// coordinates.
bool decoding_capability(const AssignmentMatrix& a, std::size_t f, double tol = kRankTolerance);

}  // namespace bzopt
