#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace dualstop {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a hash of a stream label, used to key independent streams.
constexpr std::uint64_t stream_tag(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, path, index), so draws are independent of evaluation order.
class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, std::string_view stream)
      : key_(mix64(seed ^ mix64(stream_tag(stream)))) {}

  std::uint64_t bits(std::uint64_t path, std::uint64_t index) const {
    return mix64(mix64(key_ + path) ^ (index * 0xd1b54a32d192ed03ULL));
  }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t path, std::uint64_t index) const {
    return (static_cast<double>(bits(path, index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via inverse CDF of uniform(path, index).
  double normal(std::uint64_t path, std::uint64_t index) const;

 private:
  std::uint64_t key_;
};

/// Derives a child seed for an independent simulation (e.g. test samples).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return mix64(seed ^ stream_tag(label));
}

/// Small sequential generator for test sweeps and random trees.
class SequentialRng {
 public:
  explicit SequentialRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return mix64(state_++ * 0x9e3779b97f4a7c15ULL); }
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  std::uint64_t state_;
};

}  // namespace dualstop
