#include "dtdd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dtdd::linalg {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

CVec& CVec::operator+=(const CVec& o) {
  require_same_dim(size(), o.size(), "CVec +=");
  for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
  return *this;
}

CVec& CVec::operator-=(const CVec& o) {
  require_same_dim(size(), o.size(), "CVec -=");
  for (std::size_t i = 0; i < d_.size(); ++i) d_[i] -= o.d_[i];
  return *this;
}

CVec& CVec::operator*=(cd s) {
  for (auto& x : d_) x *= s;
  return *this;
}

bool CVec::all_finite() const {
  return std::all_of(d_.begin(), d_.end(),
                     [](cd x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

CMat::CMat(std::size_t rows, std::size_t cols, std::vector<cd> entries)
    : rows_(rows), cols_(cols), d_(std::move(entries)) {
  if (d_.size() != rows_ * cols_) {
    throw DimensionMismatch("CMat: entry count does not match shape");
  }
}

CMat CMat::identity(std::size_t n) {
  CMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMat CMat::from_columns(std::span<const CVec> columns) {
  if (columns.empty()) return {};
  const std::size_t rows = columns.front().size();
  CMat m(rows, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    require_same_dim(rows, columns[c].size(), "CMat::from_columns");
    for (std::size_t r = 0; r < rows; ++r) m(r, c) = columns[c][r];
  }
  return m;
}

CMat CMat::outer(const CVec& x, const CVec& y) {
  CMat m(x.size(), y.size());
  m.add_outer(x, y);
  return m;
}

CVec CMat::col(std::size_t c) const {
  CVec v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

CVec CMat::row(std::size_t r) const {
  CVec v(cols_);
  for (std::size_t c = 0; c < cols_; ++c) v[c] = (*this)(r, c);
  return v;
}

CMat CMat::adjoint() const {
  CMat m(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) m(c, r) = std::conj((*this)(r, c));
  return m;
}

CMat CMat::transpose() const {
  CMat m(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) m(c, r) = (*this)(r, c);
  return m;
}

CMat& CMat::operator+=(const CMat& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("CMat +=");
  for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
  return *this;
}

CMat& CMat::operator-=(const CMat& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("CMat -=");
  for (std::size_t i = 0; i < d_.size(); ++i) d_[i] -= o.d_[i];
  return *this;
}

CMat& CMat::operator*=(cd s) {
  for (auto& x : d_) x *= s;
  return *this;
}

void CMat::add_outer(const CVec& x, const CVec& y, cd alpha) {
  if (x.size() != rows_ || y.size() != cols_) throw DimensionMismatch("CMat::add_outer");
  for (std::size_t r = 0; r < rows_; ++r) {
    const cd xr = alpha * x[r];
    cd* row = d_.data() + r * cols_;
    for (std::size_t c = 0; c < cols_; ++c) row[c] += xr * std::conj(y[c]);
  }
}

void CMat::add_diagonal(cd value) {
  const std::size_t n = std::min(rows_, cols_);
  for (std::size_t i = 0; i < n; ++i) (*this)(i, i) += value;
}

bool CMat::all_finite() const {
  return std::all_of(d_.begin(), d_.end(),
                     [](cd x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

cd dot(const CVec& x, const CVec& y) {
  require_same_dim(x.size(), y.size(), "dot");
  cd acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

double norm_sq(const CVec& x) {
  double acc = 0.0;
  for (const cd& v : x) acc += std::norm(v);
  return acc;
}

double norm(const CVec& x) { return std::sqrt(norm_sq(x)); }

double frobenius_norm(const CMat& m) {
  double acc = 0.0;
  for (const cd& v : m.entries()) acc += std::norm(v);
  return std::sqrt(acc);
}

CVec operator*(const CMat& m, const CVec& x) {
  require_same_dim(m.cols(), x.size(), "matvec");
  CVec y(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    cd acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += m(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

CMat operator*(const CMat& a, const CMat& b) {
  require_same_dim(a.cols(), b.rows(), "matmul");
  CMat m(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cd ark = a(r, k);
      for (std::size_t c = 0; c < b.cols(); ++c) m(r, c) += ark * b(k, c);
    }
  return m;
}

CVec line_project(const CVec& y, const CVec& x, const Tolerances& tol) {
  require_same_dim(x.size(), y.size(), "line_project");
  const double nx = norm_sq(x);
  if (!(std::sqrt(nx) > tol.zero_norm)) throw ZeroVector("line_project: projection axis is zero");
  return (dot(x, y) / nx) * x;
}

CMat Basis::as_matrix() const { return CMat::from_columns(vectors); }

Basis gram_schmidt(std::span<const CVec> vectors, const Tolerances& tol) {
  if (vectors.empty()) throw DimensionMismatch("gram_schmidt: empty input");
  Basis out;
  out.ambient_dim = vectors.front().size();
  std::vector<double> beta_norm_sq;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const CVec& v = vectors[i];
    require_same_dim(out.ambient_dim, v.size(), "gram_schmidt");
    const double input_norm = norm(v);
    CVec residual = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t t = 0; t < out.vectors.size(); ++t) {
        const CVec& b = out.vectors[t];
        residual -= (dot(b, residual) / beta_norm_sq[t]) * b;
      }
    }
    const double rn = norm(residual);
    if (input_norm <= tol.zero_norm || rn < tol.dependence * input_norm ||
        out.vectors.size() == out.ambient_dim) {
      out.dropped.push_back(i);
      continue;
    }
    beta_norm_sq.push_back(rn * rn);
    out.vectors.push_back(std::move(residual));
  }
  return out;
}

bool Cholesky::factor(const CMat& a) {
  if (!a.square()) throw DimensionMismatch("Cholesky: matrix not square");
  n_ = a.rows();
  l_.assign(n_ * n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    double diag = a(j, j).real();
    for (std::size_t k = 0; k < j; ++k) diag -= std::norm(l_[j * n_ + k]);
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    l_[j * n_ + j] = ljj;
    for (std::size_t i = j + 1; i < n_; ++i) {
      cd s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l_[i * n_ + k] * std::conj(l_[j * n_ + k]);
      l_[i * n_ + j] = s / ljj;
    }
  }
  return true;
}

CVec Cholesky::solve(const CVec& b) const {
  require_same_dim(n_, b.size(), "Cholesky::solve");
  CVec y(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    cd s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_[i * n_ + k] * y[k];
    y[i] = s / l_[i * n_ + i];
  }
  CVec x(n_);
  for (std::size_t ii = n_; ii-- > 0;) {
    cd s = y[ii];
    for (std::size_t k = ii + 1; k < n_; ++k) s -= std::conj(l_[k * n_ + ii]) * x[k];
    x[ii] = s / l_[ii * n_ + ii];
  }
  return x;
}

double Cholesky::condition_estimate() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double d = l_[i * n_ + i].real();
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (n_ == 0) return 1.0;
  return (hi / lo) * (hi / lo);
}

double hermitian_deviation(const CMat& m) {
  if (!m.square()) throw DimensionMismatch("hermitian_deviation: matrix not square");
  double dev = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) dev += std::norm(m(r, c) - std::conj(m(c, r)));
  return std::sqrt(dev);
}

CVec lu_solve(const CMat& a, const CVec& b, const Tolerances& tol) {
  if (!a.square()) throw DimensionMismatch("lu_solve: matrix not square");
  require_same_dim(a.rows(), b.size(), "lu_solve");
  const std::size_t n = a.rows();
  CMat lu = a;
  CVec x = b;
  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(lu(r, k)) > std::abs(lu(p, k))) p = r;
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(k, c), lu(p, c));
      std::swap(x[k], x[p]);
    }
    const double piv = std::abs(lu(k, k));
    max_pivot = std::max(max_pivot, piv);
    min_pivot = std::min(min_pivot, piv);
    if (!(piv > 0.0)) throw IllConditioned("lu_solve: singular matrix");
    for (std::size_t r = k + 1; r < n; ++r) {
      const cd f = lu(r, k) / lu(k, k);
      if (f == cd(0.0)) continue;
      for (std::size_t c = k; c < n; ++c) lu(r, c) -= f * lu(k, c);
      x[r] -= f * x[k];
    }
  }
  if (n > 0 && max_pivot / min_pivot > tol.max_condition) {
    throw IllConditioned("lu_solve: pivot ratio exceeds conditioning threshold");
  }
  for (std::size_t ii = n; ii-- > 0;) {
    cd s = x[ii];
    for (std::size_t c = ii + 1; c < n; ++c) s -= lu(ii, c) * x[c];
    x[ii] = s / lu(ii, ii);
  }
  return x;
}

CVec hermitian_solve(const CMat& a, const CVec& b, const Tolerances& tol) {
  if (!a.square()) throw DimensionMismatch("hermitian_solve: matrix not square");
  require_same_dim(a.rows(), b.size(), "hermitian_solve");
  const double scale = frobenius_norm(a);
  if (hermitian_deviation(a) > tol.hermitian * std::max(scale, 1e-300)) {
    throw DimensionMismatch("hermitian_solve: matrix is not Hermitian within tolerance");
  }
  Cholesky chol;
  if (chol.factor(a)) {
    if (chol.condition_estimate() > tol.max_condition) {
      throw IllConditioned("hermitian_solve: condition estimate exceeds threshold");
    }
    return chol.solve(b);
  }
  return lu_solve(a, b, tol);
}

CMat build_projector(const Basis& basis, TransposeForm form, const Tolerances& tol) {
  if (basis.empty()) throw DimensionMismatch("build_projector: empty basis");
  const CMat a = basis.as_matrix();
  const CMat at = form == TransposeForm::kConjugate ? a.adjoint() : a.transpose();
  const CMat gram = at * a;
  const std::size_t k = gram.rows();
  // X = gram^-1 * at, column by column.
  CMat x(k, at.cols());
  if (form == TransposeForm::kConjugate) {
    Cholesky chol;
    if (!chol.factor(gram) || chol.condition_estimate() > tol.max_condition) {
      throw SingularGram("build_projector: basis Gram matrix is not invertible");
    }
    for (std::size_t c = 0; c < at.cols(); ++c) {
      const CVec col = chol.solve(at.col(c));
      for (std::size_t r = 0; r < k; ++r) x(r, c) = col[r];
    }
  } else {
    try {
      for (std::size_t c = 0; c < at.cols(); ++c) {
        const CVec col = lu_solve(gram, at.col(c), tol);
        for (std::size_t r = 0; r < k; ++r) x(r, c) = col[r];
      }
    } catch (const IllConditioned& e) {
      throw SingularGram(std::string("build_projector: ") + e.what());
    }
  }
  return a * x;
}

EigenDecomp hermitian_eigen(const CMat& a_in, int max_sweeps) {
  if (!a_in.square()) throw DimensionMismatch("hermitian_eigen: matrix is not square");
  const std::size_t n = a_in.rows();
  CMat a = a_in;
  CMat v = CMat::identity(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      diag += std::norm(a(p, p));
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    }
    if (off <= 1e-32 * std::max(diag, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double b = std::abs(a(p, q));
        if (b == 0.0) continue;
        const cd phase = a(p, q) / b;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * b);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J = diag(1, conj(phase)) * [[c, s], [-s, c]]
        const cd j_pp = c;
        const cd j_pq = s;
        const cd j_qp = -s * std::conj(phase);
        const cd j_qq = c * std::conj(phase);
        for (std::size_t k = 0; k < n; ++k) {  // A <- A J
          const cd akp = a(k, p);
          const cd akq = a(k, q);
          a(k, p) = akp * j_pp + akq * j_qp;
          a(k, q) = akp * j_pq + akq * j_qq;
        }
        for (std::size_t k = 0; k < n; ++k) {  // A <- J^H A
          const cd apk = a(p, k);
          const cd aqk = a(q, k);
          a(p, k) = std::conj(j_pp) * apk + std::conj(j_qp) * aqk;
          a(q, k) = std::conj(j_pq) * apk + std::conj(j_qq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const cd vkp = v(k, p);
          const cd vkq = v(k, q);
          v(k, p) = vkp * j_pp + vkq * j_qp;
          v(k, q) = vkp * j_pq + vkq * j_qq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
  EigenDecomp out;
  out.vectors = CMat(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values.push_back(a(order[i], order[i]).real());
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, i) = v(k, order[i]);
  }
  return out;
}

}  // namespace dtdd::linalg
