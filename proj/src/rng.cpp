#include "transferlab/rng.hpp"

#include <cmath>

#include "transferlab/errors.hpp"

namespace transferlab {

namespace {

// splitmix64 finalizer (Steele, Lea, Flood 2014); public domain constants.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::span<const std::uint64_t> key) {
  std::uint64_t s = mix64(root);
  for (std::uint64_t k : key) s = mix64(s ^ mix64(k));
  return s;
}

}  // namespace

RngStream::RngStream(std::uint64_t root_seed, std::span<const std::uint64_t> stream_key)
    : derived_seed_(derive_seed(root_seed, stream_key)), engine_(derived_seed_) {}

RngStream::RngStream(std::uint64_t root_seed, std::initializer_list<std::uint64_t> stream_key)
    : RngStream(root_seed, std::span<const std::uint64_t>(stream_key.begin(), stream_key.size())) {}

RngStream RngStream::child(std::uint64_t key_element) const {
  const std::uint64_t key[1] = {key_element};
  return RngStream(derived_seed_, std::span<const std::uint64_t>(key, 1));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::next_double() {
  // 53 high bits give a uniform dyadic rational in [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_double() - 1.0;
    v = 2.0 * next_double() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * m;
  has_cached_normal_ = true;
  return u * m;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArguments("next_below: bound must be positive");
  const std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

Vec RngStream::unit_vector(std::size_t dim) {
  if (dim == 0) throw InvalidArguments("unit_vector: dim must be positive");
  Vec v(dim);
  for (;;) {
    for (double& x : v) x = next_normal();
    const double norm = l2_norm(v);
    if (norm > 0.0 && std::isfinite(norm)) {
      for (double& x : v) x /= norm;
      return v;
    }
  }
}

}  // namespace transferlab
