#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "transferlab/common.hpp"

namespace transferlab {

// Deterministic keyed random stream.
//
// The same (root_seed, key) pair always yields the identical sequence on any
// platform: the engine is std::mt19937_64 (whose output is fixed by the
// standard) and all distributions below are implemented here rather than with
// std::*_distribution, whose results are implementation-defined.
//
// Distinct keys derive statistically independent streams via a splitmix64
// mixing chain over the root seed. Streams are single-owner; parallel work
// takes its own key instead of sharing a stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t root_seed,
                     std::span<const std::uint64_t> stream_key = {});
  RngStream(std::uint64_t root_seed, std::initializer_list<std::uint64_t> stream_key);

  // New stream keyed off this stream's identity plus one more key element.
  // Independent of how much of this stream has been consumed.
  RngStream child(std::uint64_t key_element) const;

  // The fully mixed 64-bit identity of this stream.
  std::uint64_t derived_seed() const { return derived_seed_; }

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double next_double();

  // Standard normal (Marsaglia polar method).
  double next_normal();

  // Uniform integer on [0, bound); unbiased via rejection.
  std::uint64_t next_below(std::uint64_t bound);

  // Uniform direction on the unit sphere in `dim` dimensions.
  Vec unit_vector(std::size_t dim);

  // Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[next_below(i)]);
    }
  }

 private:
  std::uint64_t derived_seed_;
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace transferlab
