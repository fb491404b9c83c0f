#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace bimh {

// Named substreams derived from a root seed. Every random quantity in a run is
// drawn from a stream keyed by (tag, a, b), so results do not depend on the
// order in which workers execute.
enum class StreamTag : std::uint64_t {
  Proposal = 1,
  Uniform = 2,
  Permutation = 3,
  Transition = 4,
  Start = 5,
  Warmup = 6,
  Replication = 7,
  Chain = 8,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t root, StreamTag tag,
                                           std::uint64_t a = 0,
                                           std::uint64_t b = 0) noexcept {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ (b * 0xd1b54a32d192ed03ULL));
}

// A UniformRandomBitGenerator with a fixed-precision uniform on [0, 1).
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  result_type operator()() { return engine_(); }

  // 53 random mantissa bits, never returns 1.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return std::normal_distribution<double>{}(*this); }

  double cauchy() { return std::cauchy_distribution<double>{}(*this); }

 private:
  std::mt19937_64 engine_;
};

inline RngStream substream(std::uint64_t root, StreamTag tag, std::uint64_t a = 0,
                           std::uint64_t b = 0) {
  return RngStream(derive_seed(root, tag, a, b));
}

}  // namespace bimh
