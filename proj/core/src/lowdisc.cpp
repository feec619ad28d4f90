#include "fastpower/lowdisc.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fastpower/errors.hpp"

namespace fastpower {

namespace {
#include "sobol_table.inc"

constexpr double kTwoPow32 = 4294967296.0;
constexpr double kLowClamp = 1.0 / kTwoPow32;
constexpr double kHighClamp = 1.0 - 1.0 / kTwoPow32;
}  // namespace

DirectionTable DirectionTable::parse(std::istream& in) {
  DirectionTable table;
  std::string line;
  std::size_t expected = 2;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    std::size_t d = 0;
    Row r;
    if (!(row >> d >> r.degree >> r.poly)) throw std::runtime_error("direction table: malformed row: " + line);
    if (d != expected) throw std::runtime_error("direction table: dimensions must be consecutive from 2");
    if (r.degree == 0 || r.degree > kBits) throw std::runtime_error("direction table: bad degree");
    r.m.resize(r.degree);
    for (auto& mi : r.m)
      if (!(row >> mi)) throw std::runtime_error("direction table: missing m value: " + line);
    for (unsigned i = 0; i < r.degree; ++i)
      if (r.m[i] % 2 == 0 || r.m[i] >= (std::uint32_t{1} << (i + 1)))
        throw std::runtime_error("direction table: invalid m value in dimension " + std::to_string(d));
    table.rows_.push_back(std::move(r));
    ++expected;
  }
  return table;
}

const DirectionTable& DirectionTable::builtin() {
  static const DirectionTable table = [] {
    std::istringstream in(kSobolTableText);
    return parse(in);
  }();
  return table;
}

DirectionTable::Directions DirectionTable::directions(std::size_t dim_index) const {
  Directions v{};
  if (dim_index == 0) {
    for (int i = 0; i < kBits; ++i) v[i] = std::uint32_t{1} << (kBits - 1 - i);
    return v;
  }
  if (dim_index >= max_dimension()) throw std::out_of_range("direction table: dimension not available");
  const Row& r = rows_[dim_index - 1];
  const unsigned s = r.degree;
  for (unsigned i = 0; i < std::min<unsigned>(s, kBits); ++i) v[i] = r.m[i] << (kBits - 1 - i);
  for (unsigned i = s; i < static_cast<unsigned>(kBits); ++i) {
    std::uint32_t x = v[i - s] ^ (v[i - s] >> s);
    for (unsigned k = 1; k < s; ++k)
      if ((r.poly >> (s - 1 - k)) & 1u) x ^= v[i - k];
    v[i] = x;
  }
  return v;
}

SobolStream::SobolStream(std::size_t dimension, std::uint64_t seed) : SobolStream(dimension, seed, true) {}

SobolStream SobolStream::unrandomized(std::size_t dimension) { return SobolStream(dimension, 0, false); }

SobolStream::SobolStream(std::size_t dimension, std::uint64_t seed, bool randomize)
    : dim_(dimension), seed_(seed), state_(dimension, 0), shift_(dimension, 0) {
  if (dimension == 0) throw std::invalid_argument("SobolStream: dimension must be positive");
  const auto& table = DirectionTable::builtin();
  if (dimension > kMaxDimension || dimension > table.max_dimension())
    throw std::invalid_argument("SobolStream: dimension exceeds the supported maximum of 64");
  v_.reserve(dimension);
  for (std::size_t k = 0; k < dimension; ++k) v_.push_back(table.directions(k));
  if (randomize) {
    std::mt19937_64 rng(seed);
    for (auto& s : shift_) s = static_cast<std::uint32_t>(rng() >> 32);
  }
}

void SobolStream::next(std::span<double> out) {
  if (out.size() != dim_) throw std::invalid_argument("SobolStream::next: output size mismatch");
  if (index_ >= kMaxPoints) throw StreamExhausted("SobolStream: more than 2^31 points requested");
  // Gray-code order: point i differs from point i - 1 in direction ctz(i).
  // Point 0 is the origin, which the shift moves to a uniform random point.
  if (index_ > 0) {
    const int c = std::countr_zero(index_);
    for (std::size_t k = 0; k < dim_; ++k) state_[k] ^= v_[k][c];
  }
  for (std::size_t k = 0; k < dim_; ++k) {
    const double x = static_cast<double>(state_[k] ^ shift_[k]) / kTwoPow32;
    out[k] = std::clamp(x, kLowClamp, kHighClamp);
  }
  ++index_;
}

void SobolStream::skip_to(std::uint64_t index) {
  if (index > kMaxPoints) throw StreamExhausted("SobolStream: index beyond 2^31");
  // The state holds the last emitted point, so next() emits point `index`.
  const std::uint64_t prev = index == 0 ? 0 : index - 1;
  const std::uint64_t gray = prev ^ (prev >> 1);
  for (std::size_t k = 0; k < dim_; ++k) {
    std::uint32_t x = 0;
    for (int b = 0; b < DirectionTable::kBits; ++b)
      if ((gray >> b) & 1u) x ^= v_[k][b];
    state_[k] = x;
  }
  index_ = index;
}

std::vector<double> SobolStream::next() {
  std::vector<double> p(dim_);
  next(p);
  return p;
}

PointSet::PointSet(std::size_t dimension, std::vector<double> coords) : dim_(dimension), coords_(std::move(coords)) {
  if (dimension == 0 || coords_.size() % dimension != 0)
    throw std::invalid_argument("PointSet: coordinate count must be a multiple of the dimension");
}

PointSet sobol_points(std::size_t dimension, std::size_t m, std::uint64_t seed) {
  SobolStream s(dimension, seed);
  std::vector<double> coords(dimension * m);
  for (std::size_t r = 0; r < m; ++r) s.next(std::span<double>(coords.data() + r * dimension, dimension));
  return PointSet(dimension, std::move(coords));
}

PointSet prng_points(std::size_t dimension, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> coords(dimension * m);
  for (auto& x : coords) {
    // 53-bit uniform strictly inside (0, 1).
    x = (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0;
  }
  return PointSet(dimension, std::move(coords));
}

}  // namespace fastpower
