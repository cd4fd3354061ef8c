#include "flowbench/rng.hpp"

#include <cmath>

#include "flowbench/errors.hpp"

namespace flowbench {

namespace {

inline std::uint64_t rotl64(std::uint64_t x, int r) {
  return (x << r) | (x >> (64 - r));
}

// Threefry-2x64 rotation schedule (repeats every 8 rounds).
constexpr int kRotations[8] = {16, 42, 12, 31, 16, 32, 24, 21};
constexpr std::uint64_t kKeyParity = 0x1BD11BDAA9FC1A22ull;

// Tag mixed into the key when deriving child streams in Rng::split.
constexpr std::uint64_t kSplitTag = 0xBE38143A3C0E5D2Aull;

}  // namespace

std::array<std::uint64_t, 2> threefry2x64(const std::array<std::uint64_t, 2>& counter,
                                          const std::array<std::uint64_t, 2>& key) {
  const std::uint64_t ks[3] = {key[0], key[1], kKeyParity ^ key[0] ^ key[1]};
  std::uint64_t x0 = counter[0] + ks[0];
  std::uint64_t x1 = counter[1] + ks[1];
  for (int round = 0; round < 20; ++round) {
    x0 += x1;
    x1 = rotl64(x1, kRotations[round % 8]);
    x1 ^= x0;
    if (round % 4 == 3) {
      const std::uint64_t s = static_cast<std::uint64_t>(round / 4) + 1;
      x0 += ks[s % 3];
      x1 += ks[(s + 1) % 3];
      x1 += s;
    }
  }
  return {x0, x1};
}

// Rational approximation of the normal quantile (AS241-style, double
// precision). Accurate to better than 1e-15 over (0, 1).
double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(errk::input, "inverse_normal_cdf: p outside (0,1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) *
                 r +
             4.5921953931549871457e4) *
                r +
            1.3731693765509461125e4) *
               r +
           1.9715909503065514427e3) *
              r +
          1.3314166789178437745e2) *
             r +
         3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) *
                 r +
             2.1213794301586595867e4) *
                r +
            5.3941960214247511077e3) *
               r +
           6.8718700749205790830e2) *
              r +
          4.2313330701600911252e1) *
             r +
         1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
    x = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
    x = num / den;
  }
  return q < 0.0 ? -x : x;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

std::uint64_t Rng::next_u64() {
  if (block_pos_ == 2) {
    block_ = threefry2x64({counter_, 0}, key_);
    ++counter_;
    block_pos_ = 0;
  }
  return block_[block_pos_++];
}

double Rng::next_uniform() {
  const std::uint64_t x = next_u64() >> 11;  // 53 random bits
  return (static_cast<double>(x) + 0.5) * 0x1.0p-53;
}

double Rng::next_gaussian() { return inverse_normal_cdf(next_uniform()); }

Rng Rng::split(std::uint64_t substream) const {
  const auto derived = threefry2x64({key_[1], substream}, {key_[0], kSplitTag});
  return Rng(key_[0], derived[0]);
}

}  // namespace flowbench
