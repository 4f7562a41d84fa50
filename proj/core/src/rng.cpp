#include "selfcare/rng.hpp"

#include <cmath>
#include <numbers>

namespace selfcare {

double NormalSource::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double NormalSource::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace selfcare
