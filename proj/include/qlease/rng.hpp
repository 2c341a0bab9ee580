#ifndef QLEASE_RNG_HPP
#define QLEASE_RNG_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace qlease {

// Counter-based generator (Philox4x32 with 10 rounds). The 64-bit seed is
// the key; the stream id occupies the upper half of the counter, so every
// (seed, stream) pair is an independent, reproducible substream.
class Rng {
 public:
  using result_type = std::uint64_t;
  static constexpr const char* kAlgorithm = "philox4x32-10";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  std::uint32_t next_u32();

  // Uniform integer in [0, bound); bound must be positive.
  std::uint64_t uniform_below(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  bool bernoulli(double p) { return uniform01() < p; }

  // 128-bit value, used as recorded randomness for obfuscation calls.
  std::array<std::uint8_t, 16> bytes16();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Substream derived from this generator's seed; does not advance *this.
  Rng substream(std::uint64_t id) const;

  using Block = std::array<std::uint32_t, 4>;
  static Block philox4x32_10(Block counter, std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_counter_ = 0;
  Block buffer_{};
  std::size_t used_ = 4;
};

}  // namespace qlease

#endif  // QLEASE_RNG_HPP
