#include "fastpower/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fastpower/errors.hpp"

namespace fastpower {

Vec::Vec(std::size_t n, double fill) : n_(n) {
  if (n > kMaxOrder) throw std::invalid_argument("Vec: order exceeds kMaxOrder");
  std::fill_n(v_.begin(), n, fill);
}

Vec::Vec(std::initializer_list<double> values) : Vec(std::span<const double>(values.begin(), values.size())) {}

Vec::Vec(std::span<const double> values) : n_(values.size()) {
  if (n_ > kMaxOrder) throw std::invalid_argument("Vec: order exceeds kMaxOrder");
  std::copy(values.begin(), values.end(), v_.begin());
}

bool Vec::all_finite() const noexcept {
  return std::all_of(begin(), end(), [](double x) { return std::isfinite(x); });
}

double Vec::norm() const noexcept { return std::sqrt(dot(*this)); }

double Vec::dot(const Vec& other) const noexcept {
  assert(other.n_ == n_);
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += v_[i] * other.v_[i];
  return s;
}

Vec& Vec::operator+=(const Vec& other) noexcept {
  for (std::size_t i = 0; i < n_; ++i) v_[i] += other.v_[i];
  return *this;
}

Vec& Vec::operator-=(const Vec& other) noexcept {
  for (std::size_t i = 0; i < n_; ++i) v_[i] -= other.v_[i];
  return *this;
}

Vec& Vec::operator*=(double s) noexcept {
  for (std::size_t i = 0; i < n_; ++i) v_[i] *= s;
  return *this;
}

Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
Vec operator*(double s, Vec a) noexcept { return a *= s; }

Matrix::Matrix(std::size_t order, double fill) : n_(order) {
  if (order > kMaxOrder) throw std::invalid_argument("Matrix: order exceeds kMaxOrder");
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) = fill;
}

Matrix Matrix::identity(std::size_t order) {
  Matrix m(order);
  for (std::size_t i = 0; i < order; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const noexcept {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (!std::isfinite((*this)(i, j))) return false;
  return true;
}

bool Matrix::is_symmetric(double rel_tol) const noexcept {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      double a = (*this)(i, j), b = (*this)(j, i);
      if (std::abs(a - b) > rel_tol * std::max({1.0, std::abs(a), std::abs(b)})) return false;
    }
  return true;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) *= s;
  return *this;
}

Matrix& Matrix::operator+=(const Matrix& other) noexcept {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) += other(i, j);
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) noexcept {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) -= other(i, j);
  return *this;
}

Matrix operator*(double s, Matrix m) noexcept { return m *= s; }
Matrix operator-(Matrix a, const Matrix& b) noexcept { return a -= b; }

Vec operator*(const Matrix& m, const Vec& v) noexcept {
  Vec out(m.order());
  for (std::size_t i = 0; i < m.order(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.order(); ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

Matrix operator*(const Matrix& a, const Matrix& b) noexcept {
  Matrix out(a.order());
  for (std::size_t i = 0; i < a.order(); ++i)
    for (std::size_t j = 0; j < a.order(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.order(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Matrix transpose(const Matrix& m) noexcept {
  Matrix out(m.order());
  for (std::size_t i = 0; i < m.order(); ++i)
    for (std::size_t j = 0; j < m.order(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix cholesky_lower(const Matrix& a) {
  const std::size_t n = a.order();
  Matrix l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw FactorizationError("matrix is not positive definite at pivot " + std::to_string(j), j);
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

namespace {

Vec forward_substitute(const Matrix& l, const Vec& b) {
  Vec y(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  return y;
}

Vec backward_substitute_transposed(const Matrix& l, const Vec& y) {
  const std::size_t n = y.size();
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

}  // namespace

Vec solve_spd(const Matrix& a, const Vec& b) {
  const Matrix l = cholesky_lower(a);
  return backward_substitute_transposed(l, forward_substitute(l, b));
}

Matrix inverse_spd(const Matrix& a) {
  const std::size_t n = a.order();
  const Matrix l = cholesky_lower(a);
  Matrix inv(n);
  for (std::size_t c = 0; c < n; ++c) {
    Vec e(n);
    e[c] = 1.0;
    const Vec x = backward_substitute_transposed(l, forward_substitute(l, e));
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = x[r];
  }
  // Symmetrize away rounding noise.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) inv(i, j) = inv(j, i) = 0.5 * (inv(i, j) + inv(j, i));
  return inv;
}

double inv_quad_form(const Matrix& a, const Vec& b) {
  const Vec y = forward_substitute(cholesky_lower(a), b);
  return y.dot(y);
}

Vec solve_general(const Matrix& a, const Vec& b) {
  const std::size_t n = a.order();
  Matrix m = a;
  Vec x = b;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
    if (m(piv, col) == 0.0 || !std::isfinite(m(piv, col)))
      throw FactorizationError("singular matrix at column " + std::to_string(col), col);
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m(col, c), m(piv, c));
      std::swap(x[col], x[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m(r, col) / m(col, col);
      for (std::size_t c = col; c < n; ++c) m(r, c) -= f * m(col, c);
      x[r] -= f * x[col];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t c = ii + 1; c < n; ++c) s -= m(ii, c) * x[c];
    x[ii] = s / m(ii, ii);
  }
  return x;
}

}  // namespace fastpower
