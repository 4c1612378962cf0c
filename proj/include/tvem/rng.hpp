#ifndef TVEM_RNG_HPP
#define TVEM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "tvem/error.hpp"

namespace tvem {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 wrapper with explicit samplers so draws are a pure function of
// the engine stream (no distribution-internal caching).
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  // Independent stream derived from (seed, a, b); used to give every
  // datapoint its own reproducible stream regardless of execution order.
  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return Rng(splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(~b)));
  }

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) fail(ErrorCode::InvalidInput, "Rng::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // uniform in [0, 1)
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller, first component only
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  long poisson(double lambda) {
    if (!(lambda >= 0.0)) fail(ErrorCode::InvalidInput, "poisson rate < 0");
    long total = 0;
    while (lambda > 30.0) {  // split large rates to keep Knuth's loop short
      total += poisson_knuth(lambda / 2.0);
      lambda /= 2.0;
    }
    return total + poisson_knuth(lambda);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::string save_state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void restore_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (!is) fail(ErrorCode::InvalidInput, "bad RNG state string");
  }

private:
  long poisson_knuth(double lambda) {
    const double limit = std::exp(-lambda);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::mt19937_64 eng_;
};

}  // namespace tvem

#endif
