#ifndef ZOMAX_RNG_HPP
#define ZOMAX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace zomax {

namespace detail {

// 64-bit finaliser (splitmix64 / murmur3-style avalanche).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// A single random stream. Produced by Rng::stream(); cheap to copy.
// Uniform draws are splitmix64 outputs mapped to (0,1]; normal draws use
// Box-Muller so the byte sequence is identical on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0,1]; never returns 0 so log() below is safe.
  double next_uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal draw.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Seeded root generator. All randomness is drawn through sub-streams keyed by
// (iteration, oracle-call, sample-index), so two solver variants given the
// same seed consume identical direction vectors sample-for-sample. Output
// noise lives on a separate lane keyed by the same triple, and diagnostics
// on a third lane, so recording settings never perturb the algorithm path.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  RngStream stream(std::uint64_t iteration, std::uint64_t call,
                   std::uint64_t sample) const {
    return RngStream(key(kDirectionLane, iteration, call, sample));
  }

  RngStream noise_stream(std::uint64_t iteration, std::uint64_t call,
                         std::uint64_t sample) const {
    return RngStream(key(kNoiseLane, iteration, call, sample));
  }

  RngStream diagnostic_stream(std::uint64_t iteration,
                              std::uint64_t sample) const {
    return RngStream(key(kDiagnosticLane, iteration, 0, sample));
  }

  // Free-standing stream for Monte-Carlo estimators outside a solver loop.
  RngStream generic_stream(std::uint64_t tag) const {
    return RngStream(key(kGenericLane, tag, 0, 0));
  }

 private:
  static constexpr std::uint64_t kDirectionLane = 0x5a11ed0000000001ULL;
  static constexpr std::uint64_t kNoiseLane = 0x5a11ed0000000002ULL;
  static constexpr std::uint64_t kDiagnosticLane = 0x5a11ed0000000003ULL;
  static constexpr std::uint64_t kGenericLane = 0x5a11ed0000000004ULL;

  std::uint64_t key(std::uint64_t lane, std::uint64_t a, std::uint64_t b,
                    std::uint64_t c) const {
    std::uint64_t h = detail::mix64(seed_ ^ lane);
    h = detail::mix64(h ^ a);
    h = detail::mix64(h ^ b);
    h = detail::mix64(h ^ c);
    return h;
  }

  std::uint64_t seed_;
};

}  // namespace zomax

#endif  // ZOMAX_RNG_HPP
