#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "fastpower/errors.hpp"
#include "fastpower/lowdisc.hpp"

using namespace fastpower;

namespace {

constexpr double kTwo32 = 4294967296.0;

// Direction numbers for a primitive polynomial from the standard recurrence
// m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}.
std::vector<std::uint32_t> recurrence_directions(unsigned s, std::uint32_t a, std::vector<std::uint32_t> m) {
  for (unsigned k = s; k < 32; ++k) {
    std::uint32_t mk = (m[k - s] << s) ^ m[k - s];
    for (unsigned i = 1; i < s; ++i)
      if ((a >> (s - 1 - i)) & 1u) mk ^= m[k - i] << i;
    m.push_back(mk);
  }
  std::vector<std::uint32_t> v(32);
  for (unsigned k = 0; k < 32; ++k) v[k] = m[k] << (31 - k);
  return v;
}

// Natural-order Sobol point i: XOR of the directions selected by the bits of i.
double natural_point(const std::vector<std::uint32_t>& v, std::uint64_t i) {
  std::uint32_t x = 0;
  for (int b = 0; i >> b; ++b)
    if ((i >> b) & 1u) x ^= v[b];
  return x / kTwo32;
}

std::vector<std::uint32_t> first_dimension() {
  std::vector<std::uint32_t> v(32);
  for (int k = 0; k < 32; ++k) v[k] = std::uint32_t{1} << (31 - k);
  return v;
}

}  // namespace

TEST(Sobol, FirstPointsOfTheFirstDimension) {
  SobolStream s = SobolStream::unrandomized(1);
  EXPECT_EQ(s.next()[0], 1.0 / kTwo32);  // the origin, clamped
  EXPECT_EQ(s.next()[0], 0.5);
  EXPECT_EQ(s.next()[0], 0.75);
  EXPECT_EQ(s.next()[0], 0.25);
  EXPECT_EQ(s.index(), 4u);
}

TEST(Sobol, DimensionLimits) {
  EXPECT_THROW(SobolStream(0, 1), std::invalid_argument);
  EXPECT_THROW(SobolStream(65, 1), std::invalid_argument);
  EXPECT_NO_THROW(SobolStream(64, 1));
  EXPECT_GE(DirectionTable::builtin().max_dimension(), 64u);
}

TEST(Sobol, BlocksMatchNaturalOrderConstruction) {
  // Gray-code order visits the same points as natural order within each block of 2^k.
  const auto v1 = first_dimension();
  const auto v2 = recurrence_directions(1, 0, {1});
  const auto v3 = recurrence_directions(2, 1, {1, 3});
  const auto v4 = recurrence_directions(3, 1, {1, 3, 1});
  SobolStream s = SobolStream::unrandomized(4);
  for (int k = 1; k <= 12; ++k) {
    s.skip_to(1);  // the origin is clamped, so compare the rest of the block
    std::multiset<std::vector<double>> got, want;
    const std::uint64_t count = std::uint64_t{1} << k;
    for (std::uint64_t i = 1; i < count; ++i) got.insert(s.next());
    for (std::uint64_t i = 1; i < count; ++i)
      want.insert({natural_point(v1, i), natural_point(v2, i), natural_point(v3, i), natural_point(v4, i)});
    ASSERT_EQ(got, want) << "block 2^" << k;
  }
}

TEST(Sobol, FirstTwoDimensionsFormANetEvenWhenShifted) {
  // The first 2^k points put exactly one point in every elementary box of area 2^-k.
  for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
    SobolStream s = seed == 0 ? SobolStream::unrandomized(2) : SobolStream(2, seed);
    const int k = 10;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pts;
    for (int i = 0; i < (1 << k); ++i) {
      const auto p = s.next();
      pts.emplace_back(static_cast<std::uint32_t>(std::floor(p[0] * kTwo32)),
                       static_cast<std::uint32_t>(std::floor(p[1] * kTwo32)));
    }
    for (int k1 = 0; k1 <= k; ++k1) {
      const int k2 = k - k1;
      std::vector<int> boxes(std::size_t{1} << k, 0);
      for (auto [x, y] : pts) {
        const std::uint64_t bx = k1 == 0 ? 0 : x >> (32 - k1);
        const std::uint64_t by = k2 == 0 ? 0 : y >> (32 - k2);
        boxes[(bx << k2) | by]++;
      }
      for (int c : boxes) ASSERT_EQ(c, 1) << "seed " << seed << " k1 " << k1;
    }
  }
}

TEST(Sobol, EveryDimensionStratifiesOneDimensionalIntervals) {
  const std::size_t d = SobolStream::kMaxDimension;
  SobolStream s(d, 77);
  const int k = 10;
  std::vector<std::vector<int>> bins(d, std::vector<int>(1 << k, 0));
  for (int i = 0; i < (1 << k); ++i) {
    const auto p = s.next();
    for (std::size_t j = 0; j < d; ++j) bins[j][static_cast<std::size_t>(p[j] * (1 << k))]++;
  }
  for (std::size_t j = 0; j < d; ++j)
    for (int c : bins[j]) ASSERT_EQ(c, 1) << "dimension " << j;
}

TEST(Sobol, SeedDeterminism) {
  SobolStream a(6, 42), b(6, 42), c(6, 43);
  bool differs = false;
  for (int i = 0; i < 500; ++i) {
    const auto pa = a.next(), pb = b.next(), pc = c.next();
    ASSERT_EQ(pa, pb);
    if (pa != pc) differs = true;
  }
  EXPECT_TRUE(differs);
}

TEST(Sobol, CoordinatesAreClampedAwayFromTheEnds) {
  std::mt19937_64 seeds(3);
  for (int t = 0; t < 50; ++t) {
    SobolStream s(8, seeds());
    for (int i = 0; i < 2000; ++i)
      for (double x : s.next()) {
        ASSERT_GE(x, 1.0 / kTwo32);
        ASSERT_LE(x, 1.0 - 1.0 / kTwo32);
      }
  }
}

TEST(Sobol, MeanIsCloseToOneHalf) {
  const PointSet ps = sobol_points(4, 4096, 9);
  for (std::size_t j = 0; j < 4; ++j) {
    double sum = 0;
    for (std::size_t r = 0; r < ps.size(); ++r) sum += ps.point(r)[j];
    EXPECT_NEAR(sum / ps.size(), 0.5, 0.02);
  }
}

TEST(Sobol, SkipToMatchesSequentialGeneration) {
  SobolStream a(5, 8), b(5, 8);
  for (std::uint64_t target : {0ull, 1ull, 7ull, 100ull, 1023ull, 5000ull}) {
    a.skip_to(0);
    for (std::uint64_t i = 0; i < target; ++i) a.next();
    b.skip_to(target);
    ASSERT_EQ(a.next(), b.next()) << target;
  }
}

TEST(Sobol, ExhaustionIsReported) {
  SobolStream s(2, 1);
  s.skip_to(SobolStream::kMaxPoints - 1);
  EXPECT_NO_THROW(s.next());
  EXPECT_THROW(s.next(), StreamExhausted);
  EXPECT_THROW(s.skip_to(SobolStream::kMaxPoints + 1), StreamExhausted);
}

TEST(Sobol, PointSetsAreStreamPrefixes) {
  const PointSet ps = sobol_points(3, 100, 5);
  SobolStream s(3, 5);
  for (std::size_t r = 0; r < ps.size(); ++r) {
    const auto p = s.next();
    for (std::size_t j = 0; j < 3; ++j) ASSERT_EQ(ps.point(r)[j], p[j]);
  }
}

TEST(DirectionTable, ParsesRowsAndRejectsBadOnes) {
  std::istringstream ok("# d s a m\n2 1 0 1\n3 2 1 1 3\n");
  const auto t = DirectionTable::parse(ok);
  EXPECT_EQ(t.max_dimension(), 3u);
  const auto v = t.directions(2);
  const auto ref = recurrence_directions(2, 1, {1, 3});
  for (int k = 0; k < 32; ++k) EXPECT_EQ(v[k], ref[k]);
  std::istringstream even_m("2 1 0 2\n");
  EXPECT_THROW(DirectionTable::parse(even_m), std::runtime_error);
  std::istringstream gap("3 2 1 1 3\n");
  EXPECT_THROW(DirectionTable::parse(gap), std::runtime_error);
}

TEST(PseudoRandom, DeterministicAndInRange) {
  const PointSet a = prng_points(3, 1000, 4), b = prng_points(3, 1000, 4);
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t j = 0; j < 3; ++j) {
      ASSERT_EQ(a.point(r)[j], b.point(r)[j]);
      ASSERT_GT(a.point(r)[j], 0.0);
      ASSERT_LT(a.point(r)[j], 1.0);
    }
}
