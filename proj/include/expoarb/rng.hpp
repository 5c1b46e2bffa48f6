#pragma once

#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace expoarb {

/// Domain tags separate the independent noise sources attached to one path.
enum class StreamDomain : std::uint64_t {
  kPrice = 0x50,
  kOrthogonal = 0x4f,
  kExtension = 0x45,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ keyed by (master seed, stream id, domain). The state of a
/// stream depends only on its key, never on how many other streams were
/// drawn before it.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t master_seed, std::uint64_t stream_id,
            StreamDomain domain = StreamDomain::kPrice) {
    std::uint64_t key = master_seed;
    std::uint64_t mixed = splitmix64(key) ^ (stream_id * 0xd1b54a32d192ed03ULL);
    mixed ^= static_cast<std::uint64_t>(domain) * 0x8cb92ba72f3d8dd7ULL;
    for (auto& word : state_) word = splitmix64(mixed);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

/// Standard normal draws on a StreamRng.
class NormalStream {
 public:
  NormalStream(std::uint64_t master_seed, std::uint64_t stream_id, StreamDomain domain)
      : rng_(master_seed, stream_id, domain) {}

  double operator()() { return dist_(rng_); }

 private:
  StreamRng rng_;
  boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace expoarb
