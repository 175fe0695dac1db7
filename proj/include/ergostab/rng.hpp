#pragma once

#include <cstdint>

namespace ergostab {

/// Counter-based random stream.
///
/// Every draw is a pure function of (master_seed, stream_id, counter): the
/// stream key is derived from the seed and stream id, and the n-th output is a
/// SplitMix64 finalizer applied to key + n * golden_gamma. Two streams never
/// share state, so ensembles can be evaluated in any order on any number of
/// workers and still reproduce bit for bit.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id,
            std::uint64_t counter = 0) noexcept;

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept;

  /// Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept;

  bool bernoulli(double p) noexcept;

  /// Independent child stream keyed by this stream's identity and `child_id`.
  /// The parent's counter is not advanced.
  RngStream derive(std::uint64_t child_id) const noexcept;

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_;
  std::uint64_t key_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace ergostab
