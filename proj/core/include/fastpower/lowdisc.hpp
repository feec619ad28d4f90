#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <vector>

namespace fastpower {

/** Joe-Kuo style direction numbers: one row per dimension (dimension 1 is implicit). */
class DirectionTable {
 public:
  static constexpr int kBits = 32;
  using Directions = std::array<std::uint32_t, kBits>;

  /** Parses rows "d s a m_1 .. m_s"; lines starting with '#' are ignored. */
  static DirectionTable parse(std::istream& in);
  /** The table compiled into the library (dimensions up to 64). */
  static const DirectionTable& builtin();

  std::size_t max_dimension() const noexcept { return 1 + rows_.size(); }
  /** Direction integers v_1..v_32 (scaled by 2^32) for a 0-based dimension index. */
  Directions directions(std::size_t dim_index) const;

 private:
  struct Row {
    unsigned degree = 0;
    std::uint32_t poly = 0;
    std::vector<std::uint32_t> m;
  };
  std::vector<Row> rows_;
};

/**
 * Randomized (digitally shifted) Sobol' sequence in Gray-code order, starting
 * at the (shifted) origin so that every block of 2^k points is a full net.
 * Coordinates are clamped to [2^-32, 1 - 2^-32] so they are safe to feed to a
 * normal quantile.
 */
class SobolStream {
 public:
  static constexpr std::size_t kMaxDimension = 64;
  static constexpr std::uint64_t kMaxPoints = std::uint64_t{1} << 31;

  SobolStream(std::size_t dimension, std::uint64_t seed);
  static SobolStream unrandomized(std::size_t dimension);

  std::size_t dimension() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t index() const noexcept { return index_; }
  std::uint32_t shift(std::size_t dim_index) const { return shift_.at(dim_index); }

  /** Writes the next point into out (size == dimension()). */
  void next(std::span<double> out);
  std::vector<double> next();
  /** Repositions the cursor so the next point emitted has the given index. */
  void skip_to(std::uint64_t index);

 private:
  SobolStream(std::size_t dimension, std::uint64_t seed, bool randomize);

  std::size_t dim_;
  std::uint64_t seed_;
  std::uint64_t index_ = 0;
  std::vector<DirectionTable::Directions> v_;
  std::vector<std::uint32_t> state_;
  std::vector<std::uint32_t> shift_;
};

/** An immutable block of m points in [0,1]^d, stored row-major. */
class PointSet {
 public:
  PointSet(std::size_t dimension, std::vector<double> coords);
  std::size_t dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::span<const double> point(std::size_t r) const { return {coords_.data() + r * dim_, dim_}; }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

PointSet sobol_points(std::size_t dimension, std::size_t m, std::uint64_t seed);
/** Plain pseudo-random uniforms from mt19937_64, for comparison studies. */
PointSet prng_points(std::size_t dimension, std::size_t m, std::uint64_t seed);

}  // namespace fastpower
