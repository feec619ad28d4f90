#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace fastpower {

/** Invalid user input; `field` is a dotted path such as "interval.lower". */
class InvalidDesign : public std::invalid_argument {
 public:
  InvalidDesign(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/** The design cannot reach the target power for any n (e.g. theta_0 outside the interval). */
class UnattainableDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StreamExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& message, std::size_t pivot)
      : std::runtime_error(message), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& message, double best)
      : std::runtime_error(message), best_(best) {}
  double best() const noexcept { return best_; }

 private:
  double best_;
};

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class GridTruncation : public std::runtime_error {
 public:
  GridTruncation(const std::string& message, double boundary_mass)
      : std::runtime_error(message), boundary_mass_(boundary_mass) {}
  double boundary_mass() const noexcept { return boundary_mass_; }

 private:
  double boundary_mass_;
};

class Cancelled : public std::runtime_error {
 public:
  Cancelled() : std::runtime_error("cancelled") {}
};

}  // namespace fastpower
