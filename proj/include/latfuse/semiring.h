#ifndef LATFUSE_SEMIRING_H_
#define LATFUSE_SEMIRING_H_

#include <algorithm>
#include <cmath>
#include <limits>

namespace latfuse {

// Path-weight aggregation rule. Weights are natural-log values throughout;
// times is ordinary addition with identity 0.0, zero is -inf.
enum class Semiring { kTropical, kLog };

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();
inline constexpr double kLogOne = 0.0;

// Stable log(exp(a) + exp(b)); -inf is absorbing on both sides.
inline double LogAdd(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double SemiringPlus(Semiring s, double a, double b) {
  return s == Semiring::kTropical ? std::max(a, b) : LogAdd(a, b);
}

}  // namespace latfuse

#endif  // LATFUSE_SEMIRING_H_
