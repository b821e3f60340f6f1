#ifndef ADAPTQP_RNG_HPP
#define ADAPTQP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

namespace adaptqp {

/// Seeded random stream with portable distributions.
///
/// The standard-library distributions are implementation defined, so every
/// draw here is derived from raw mt19937_64 output. Two builds with the
/// same seed produce the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per pair, cache the other).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Standard Cauchy via inverse CDF.
  double cauchy() { return std::tan(M_PI * (uniform() - 0.5)); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  int int_range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  std::uint64_t raw() { return gen_(); }

  /// Exact stream save/restore (training-state checkpoints).
  void save(std::ostream& out) const {
    std::ostringstream ss;
    ss << gen_;
    const std::string state = ss.str();
    const std::uint32_t len = static_cast<std::uint32_t>(state.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(state.data(), len);
    const std::uint8_t spare_flag = have_spare_ ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&spare_flag), 1);
    out.write(reinterpret_cast<const char*>(&spare_), sizeof(spare_));
  }

  void load(std::istream& in) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string state(len, '\0');
    in.read(state.data(), len);
    std::istringstream ss(state);
    ss >> gen_;
    std::uint8_t spare_flag = 0;
    in.read(reinterpret_cast<char*>(&spare_flag), 1);
    have_spare_ = spare_flag != 0;
    in.read(reinterpret_cast<char*>(&spare_), sizeof(spare_));
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace adaptqp

#endif
