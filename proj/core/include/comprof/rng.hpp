#pragma once

#include <array>
#include <cstdint>

namespace comprof {

/// Counter-based generator (Philox4x32-10).
///
/// A generator is fully identified by (seed, stream, counter, index), so
/// independent streams for parallel workers are obtained with split() and a
/// stream position can be persisted and restored exactly.
class Rng {
 public:
  using result_type = std::uint64_t;

  struct State {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;
    std::uint32_t index = 2;
  };

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Derived generator on an independent stream; does not advance *this.
  Rng split(std::uint64_t stream) const;

  State state() const;
  static Rng from_state(const State& state);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  std::uint32_t index_ = 2;
};

}  // namespace comprof
