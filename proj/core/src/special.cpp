#include "tms/special.hpp"

#include <cmath>
#include <limits>

namespace tms {

double digamma(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  // Recurrence terms are summed smallest first.
  double terms[10];
  int count = 0;
  while (x < 10.0) {
    terms[count++] = 1.0 / x;
    x += 1.0;
  }
  double shift = 0.0;
  while (count > 0) shift -= terms[--count];
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli tail: B_2k / (2k x^2k) for k = 1..6
  const double tail =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
  return shift + std::log(x) - 0.5 * inv - tail;
}

double trigamma(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // 1/x + 1/(2x^2) + sum_k B_2k / x^(2k+1)
  const double series =
      inv * (1.0 + inv * (0.5 + inv * (1.0 / 6.0 -
                                       inv2 * (1.0 / 30.0 -
                                               inv2 * (1.0 / 42.0 -
                                                       inv2 * (1.0 / 30.0 -
                                                               inv2 * (5.0 / 66.0 -
                                                                       inv2 * (691.0 / 2730.0 -
                                                                               inv2 * (7.0 / 6.0)))))))));
  return shift + series;
}

double digamma_difference(double x, double y) {
  const double gap = x - y;
  if (gap >= 1.0 && gap <= 64.0 && gap == std::floor(gap) && y > 0.0 && x - gap == y) {
    double sum = 0.0;
    for (int k = static_cast<int>(gap) - 1; k >= 0; --k) sum += 1.0 / (y + k);
    return sum;
  }
  return digamma(x) - digamma(y);
}

}  // namespace tms
