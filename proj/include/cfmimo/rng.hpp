#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace cfmimo {

using Rng = std::mt19937_64;

/// Stream domains, so that deployment and per-realization draws never overlap.
enum class StreamTag : std::uint64_t {
  kLayout = 1,
  kShadowing = 2,
  kRealization = 3,
  kOracle = 4,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Independent engine for (seed, tag, index). Results depend only on these
/// three values, never on which thread asks or in which order.
inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  const std::uint64_t a = detail::splitmix64(seed);
  const std::uint64_t b = detail::splitmix64(a ^ static_cast<std::uint64_t>(tag));
  const std::uint64_t c = detail::splitmix64(b ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

/// Circularly-symmetric complex Gaussian with E|x|^2 = variance: real and
/// imaginary parts are each N(0, variance / 2). Boost's ziggurat sampler is
/// several times faster than the polar method of std::normal_distribution,
/// which matters at 10^5 realizations of thousands of channel entries.
class ComplexNormal {
 public:
  explicit ComplexNormal(double variance = 1.0) : normal_(0.0, std::sqrt(0.5 * variance)) {}

  std::complex<double> operator()(Rng& rng) {
    const double re = normal_(rng);
    const double im = normal_(rng);
    return {re, im};
  }

 private:
  boost::random::normal_distribution<double> normal_;
};

}  // namespace cfmimo
