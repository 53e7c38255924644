#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>

namespace olu::testing {

using Wide = boost::multiprecision::cpp_dec_float_50;

/// alpha sqrt(2 ln(1.25 / delta)) / epsilon in 50 decimal digits.
inline double sigma_oracle(double alpha, double epsilon, double delta) {
  const Wide a(alpha), e(epsilon), d(delta);
  const Wide r = a * boost::multiprecision::sqrt(2 * boost::multiprecision::log(Wide("1.25") / d)) / e;
  return r.convert_to<double>();
}

}  // namespace olu::testing
