#pragma once

#include <cstdint>
#include <limits>

namespace polymer {

inline constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream key for a tuple of integers; the key fully determines a stream.
inline constexpr std::uint64_t stream_key(std::uint64_t seed) noexcept {
  return splitmix_finalize(seed + 0x9E3779B97F4A7C15ULL);
}

template <class... Rest>
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, Rest... rest) noexcept {
  return stream_key(splitmix_finalize(seed ^ splitmix_finalize(a + 0x632BE59BD9B4E019ULL)), rest...);
}

/// Counter-based generator: output j of the stream is a pure function of
/// (key, j), so streams can be created anywhere in any order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return splitmix_finalize(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on (0,1), never 0 or 1.
  double uniform() noexcept { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace polymer
