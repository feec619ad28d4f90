#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace fastpower {

// Parameter dimensions in this library are tiny (d <= 2 for the shipped models),
// so vectors and matrices use fixed inline storage.
inline constexpr std::size_t kMaxOrder = 4;

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0);
  Vec(std::initializer_list<double> values);
  explicit Vec(std::span<const double> values);

  std::size_t size() const noexcept { return n_; }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  double* begin() noexcept { return v_.data(); }
  double* end() noexcept { return v_.data() + n_; }
  const double* begin() const noexcept { return v_.data(); }
  const double* end() const noexcept { return v_.data() + n_; }
  std::span<const double> span() const noexcept { return {v_.data(), n_}; }

  bool all_finite() const noexcept;
  double norm() const noexcept;
  double dot(const Vec& other) const noexcept;

  Vec& operator+=(const Vec& other) noexcept;
  Vec& operator-=(const Vec& other) noexcept;
  Vec& operator*=(double s) noexcept;

 private:
  std::array<double, kMaxOrder> v_{};
  std::size_t n_ = 0;
};

Vec operator+(Vec a, const Vec& b) noexcept;
Vec operator-(Vec a, const Vec& b) noexcept;
Vec operator*(double s, Vec a) noexcept;

/** Dense square matrix of small order, row-major. */
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t order, double fill = 0.0);
  static Matrix identity(std::size_t order);

  std::size_t order() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * kMaxOrder + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * kMaxOrder + j]; }

  bool all_finite() const noexcept;
  bool is_symmetric(double rel_tol = 1e-10) const noexcept;
  Matrix& operator*=(double s) noexcept;
  Matrix& operator+=(const Matrix& other) noexcept;
  Matrix& operator-=(const Matrix& other) noexcept;

 private:
  std::array<double, kMaxOrder * kMaxOrder> a_{};
  std::size_t n_ = 0;
};

Matrix operator*(double s, Matrix m) noexcept;
Matrix operator-(Matrix a, const Matrix& b) noexcept;
Vec operator*(const Matrix& m, const Vec& v) noexcept;
Matrix operator*(const Matrix& a, const Matrix& b) noexcept;
Matrix transpose(const Matrix& m) noexcept;

/** Lower Cholesky factor L with L L^T = a. Throws FactorizationError on a non-positive pivot. */
Matrix cholesky_lower(const Matrix& a);

/** Solve a x = b for symmetric positive definite a. */
Vec solve_spd(const Matrix& a, const Vec& b);

/** Inverse of a symmetric positive definite matrix. */
Matrix inverse_spd(const Matrix& a);

/** b^T a^{-1} b for symmetric positive definite a. */
double inv_quad_form(const Matrix& a, const Vec& b);

/** General square solve with partial pivoting. */
Vec solve_general(const Matrix& a, const Vec& b);

}  // namespace fastpower
