#pragma once

// Small dense complex linear algebra for per-antenna receiver math.
// Dimensions here are antenna counts (2..8 typically), so everything is
// plain heap-backed row-major storage without blocking or SIMD.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtdd::linalg {

using cd = std::complex<double>;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ZeroVector : public LinalgError {
 public:
  using LinalgError::LinalgError;
};
class DimensionMismatch : public LinalgError {
 public:
  using LinalgError::LinalgError;
};
class SingularGram : public LinalgError {
 public:
  using LinalgError::LinalgError;
};
class IllConditioned : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

/// Numerical thresholds shared by the orthogonalization and solver routines.
struct Tolerances {
  /// A Gram-Schmidt candidate is dropped when its residual norm falls below
  /// this fraction of its input norm.
  double dependence = 1e-10;
  /// Absolute floor below which a vector counts as zero.
  double zero_norm = 1e-300;
  /// Upper bound on the condition estimate accepted by the solvers.
  double max_condition = 1e12;
  /// Relative Frobenius deviation from Hermitian symmetry accepted by
  /// hermitian_solve.
  double hermitian = 1e-9;
};

inline constexpr Tolerances kDefaultTolerances{};

class CVec {
 public:
  CVec() = default;
  explicit CVec(std::size_t dim) : d_(dim) {}
  CVec(std::initializer_list<cd> init) : d_(init) {}
  explicit CVec(std::vector<cd> v) : d_(std::move(v)) {}

  std::size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }
  cd& operator[](std::size_t i) { return d_[i]; }
  const cd& operator[](std::size_t i) const { return d_[i]; }
  cd* data() { return d_.data(); }
  const cd* data() const { return d_.data(); }
  auto begin() { return d_.begin(); }
  auto end() { return d_.end(); }
  auto begin() const { return d_.begin(); }
  auto end() const { return d_.end(); }
  std::span<const cd> view() const { return d_; }

  CVec& operator+=(const CVec& o);
  CVec& operator-=(const CVec& o);
  CVec& operator*=(cd s);
  friend CVec operator+(CVec a, const CVec& b) { return a += b; }
  friend CVec operator-(CVec a, const CVec& b) { return a -= b; }
  friend CVec operator*(cd s, CVec a) { return a *= s; }
  friend CVec operator*(CVec a, cd s) { return a *= s; }
  bool operator==(const CVec&) const = default;

  bool all_finite() const;

 private:
  std::vector<cd> d_;
};

/// Row-major complex matrix.
class CMat {
 public:
  CMat() = default;
  CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), d_(rows * cols) {}
  CMat(std::size_t rows, std::size_t cols, std::vector<cd> entries);

  static CMat identity(std::size_t n);
  /// Stacks the given vectors as columns.
  static CMat from_columns(std::span<const CVec> columns);
  /// x y^H
  static CMat outer(const CVec& x, const CVec& y);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  cd& operator()(std::size_t r, std::size_t c) { return d_[r * cols_ + c]; }
  const cd& operator()(std::size_t r, std::size_t c) const { return d_[r * cols_ + c]; }
  const std::vector<cd>& entries() const { return d_; }

  CVec col(std::size_t c) const;
  CVec row(std::size_t r) const;
  CMat adjoint() const;
  CMat transpose() const;

  CMat& operator+=(const CMat& o);
  CMat& operator-=(const CMat& o);
  CMat& operator*=(cd s);
  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(cd s, CMat a) { return a *= s; }
  bool operator==(const CMat&) const = default;

  /// this += alpha * x y^H
  void add_outer(const CVec& x, const CVec& y, cd alpha = 1.0);
  void add_diagonal(cd value);

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cd> d_;
};

/// x^H y
cd dot(const CVec& x, const CVec& y);
double norm_sq(const CVec& x);
double norm(const CVec& x);
double frobenius_norm(const CMat& m);
CVec operator*(const CMat& m, const CVec& x);
CMat operator*(const CMat& a, const CMat& b);

/// Projection of y onto the line spanned by x: ((x^H y) / |x|^2) x.
CVec line_project(const CVec& y, const CVec& x, const Tolerances& tol = kDefaultTolerances);

/// Orthogonal (not normalized) basis from Gram-Schmidt elimination.
struct Basis {
  std::size_t ambient_dim = 0;
  std::vector<CVec> vectors;
  /// Input positions eliminated as linearly dependent on earlier ones.
  std::vector<std::size_t> dropped;

  std::size_t size() const { return vectors.size(); }
  bool empty() const { return vectors.empty(); }
  CMat as_matrix() const;
};

/// beta_1 = v_1, beta_i = v_i - sum_{t<i} proj_{beta_t}(v_i). Uses the
/// modified (running-residual) ordering with one re-orthogonalization pass;
/// the result equals the classical recursion in exact arithmetic.
Basis gram_schmidt(std::span<const CVec> vectors, const Tolerances& tol = kDefaultTolerances);

enum class TransposeForm {
  kConjugate,  ///< A (A^H A)^-1 A^H, Hermitian projector
  kLiteral,    ///< A (A^T A)^-1 A^T, only for demonstrating the non-Hermitian artifact
};

/// Orthogonal projector onto span(basis).
CMat build_projector(const Basis& basis, TransposeForm form = TransposeForm::kConjugate,
                     const Tolerances& tol = kDefaultTolerances);

/// Cholesky factor of a Hermitian positive definite matrix; lower triangular.
class Cholesky {
 public:
  /// Returns false when the matrix is not numerically positive definite.
  bool factor(const CMat& a);
  CVec solve(const CVec& b) const;
  /// Squared ratio of extreme diagonal entries of L. A cheap lower bound on
  /// the 2-norm condition number.
  double condition_estimate() const;
  std::size_t dim() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<cd> l_;
};

/// Solves A x = b for Hermitian A. Positive definite systems take the
/// Cholesky path, indefinite ones fall back to partially pivoted LU.
CVec hermitian_solve(const CMat& a, const CVec& b, const Tolerances& tol = kDefaultTolerances);

/// General square solve by LU with partial pivoting.
CVec lu_solve(const CMat& a, const CVec& b, const Tolerances& tol = kDefaultTolerances);

double hermitian_deviation(const CMat& m);

struct EigenDecomp {
  std::vector<double> values;  ///< ascending
  CMat vectors;                ///< column i belongs to values[i]
};

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
EigenDecomp hermitian_eigen(const CMat& a, int max_sweeps = 64);

}  // namespace dtdd::linalg
