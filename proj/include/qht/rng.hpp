#pragma once

#include <array>
#include <cstdint>

namespace qht::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32-10 block function (Salmon et al., Random123).
Counter philox4x32_10(Counter counter, Key key);

/// Deterministic sub-seed for replication `index` of a run.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Random stream for one record. The Philox key is the 64-bit seed; the
/// counter is (index_lo, index_hi, block, domain), so streams for distinct
/// (seed, index, domain) never overlap and records can be generated in any
/// order or on any number of threads with identical results.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index, std::uint32_t domain);

  /// Uniform double in the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller).
  double normal();

 private:
  void refill();

  Key key_;
  Counter counter_;
  Counter block_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qht::rng
