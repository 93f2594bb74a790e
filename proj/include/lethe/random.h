#ifndef LETHE_RANDOM_H_
#define LETHE_RANDOM_H_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace lethe {

// SplitMix64 finalizer; used to expand seeds and mix stream keys.
constexpr uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// xoshiro256** generator. Satisfies UniformRandomBitGenerator so it plugs
// into <random> distributions.
//
// Streams are split by hashing a global seed together with an ordered list
// of keys (for example {purpose tag, post index}):
//   h_0 = SplitMix64(seed), h_{i+1} = SplitMix64(h_i ^ key_i),
// and the four state words are SplitMix64(h + j * golden) for j = 1..4.
// Two streams with different key lists are statistically independent and
// the result does not depend on the order in which streams are created.
class RandomStream {
 public:
  using result_type = uint64_t;

  explicit RandomStream(uint64_t seed = 0) { Reseed(seed); }

  static RandomStream Derive(uint64_t seed, std::initializer_list<uint64_t> keys) {
    uint64_t h = SplitMix64(seed);
    for (uint64_t k : keys) h = SplitMix64(h ^ k);
    return RandomStream(h);
  }

  void Reseed(uint64_t seed) {
    for (int j = 0; j < 4; ++j) {
      state_[j] = SplitMix64(seed + (j + 1) * 0x9e3779b97f4a7c15ULL);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<uint64_t>::max(); }

  result_type operator()() {
    const uint64_t result = Rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = Rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1]; safe to take the log of.
  double UniformPositive() {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  const std::array<uint64_t, 4>& state() const { return state_; }
  void set_state(const std::array<uint64_t, 4>& s) { state_ = s; }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  static constexpr uint64_t Rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<uint64_t, 4> state_{};
};

}  // namespace lethe

#endif  // LETHE_RANDOM_H_
