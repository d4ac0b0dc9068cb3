#include <gtest/gtest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <numbers>

#include "tms/rng.hpp"
#include "tms/special.hpp"

namespace {

void expect_close(double got, double want, double rel, double abs_floor, double x) {
  EXPECT_LE(std::abs(got - want), rel * std::abs(want) + abs_floor) << "x = " << x;
}

}  // namespace

TEST(Digamma, MatchesBoostOnLogGrid) {
  for (int i = 0; i <= 2000; ++i) {
    const double x = 1e-3 * std::pow(1e5, i / 2000.0);
    expect_close(tms::digamma(x), boost::math::digamma(x), 1e-10, 1e-13, x);
  }
}

TEST(Digamma, MatchesBoostAtRandomPoints) {
  tms::Rng rng(7);
  for (int i = 0; i < 5000; ++i) {
    const double x = rng.uniform(1e-3, 100.0);
    expect_close(tms::digamma(x), boost::math::digamma(x), 1e-10, 1e-13, x);
  }
}

TEST(Digamma, NearPositiveRoot) {
  // psi has its only positive zero at x0 ~ 1.4616; relative error is
  // meaningless there, so compare absolutely.
  for (double x = 1.45; x < 1.47; x += 1e-4) {
    EXPECT_NEAR(tms::digamma(x), boost::math::digamma(x), 1e-14) << x;
  }
}

TEST(Digamma, KnownValues) {
  // A few ulps of the O(1) intermediate terms that cancel.
  constexpr double euler_gamma = 0.57721566490153286061, tol = 2e-15;
  EXPECT_NEAR(tms::digamma(1.0), -euler_gamma, tol);
  EXPECT_NEAR(tms::digamma(0.5), -euler_gamma - 2.0 * std::numbers::ln2, tol);
  EXPECT_NEAR(tms::digamma(2.0), 1.0 - euler_gamma, tol);
}

TEST(Digamma, RecurrenceHolds) {
  tms::Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(0.01, 50.0);
    EXPECT_NEAR(tms::digamma(x + 1.0), tms::digamma(x) + 1.0 / x, 1e-12 * (1.0 + 1.0 / x)) << x;
  }
}

TEST(DigammaDifference, WholeGapsUseTheRecurrence) {
  EXPECT_EQ(tms::digamma_difference(2.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(tms::digamma_difference(4.0, 3.0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(tms::digamma_difference(5.5, 2.5), 1.0 / 2.5 + 1.0 / 3.5 + 1.0 / 4.5);
}

TEST(DigammaDifference, MatchesBoostElsewhere) {
  tms::Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const double y = rng.uniform(0.01, 40.0), x = y + rng.uniform(0.0, 40.0);
    const double want = boost::math::digamma(x) - boost::math::digamma(y);
    EXPECT_NEAR(tms::digamma_difference(x, y), want, 1e-12 * (1.0 + std::abs(want))) << x << " " << y;
  }
}

TEST(Digamma, NonPositiveIsNaN) {
  EXPECT_TRUE(std::isnan(tms::digamma(0.0)));
  EXPECT_TRUE(std::isnan(tms::digamma(-1.5)));
  EXPECT_TRUE(std::isnan(tms::trigamma(0.0)));
  EXPECT_TRUE(std::isnan(tms::trigamma(-3.0)));
}

TEST(Trigamma, MatchesBoost) {
  for (int i = 0; i <= 2000; ++i) {
    const double x = 1e-3 * std::pow(1e5, i / 2000.0);
    expect_close(tms::trigamma(x), boost::math::trigamma(x), 1e-10, 0.0, x);
  }
  EXPECT_NEAR(tms::trigamma(1.0), std::numbers::pi * std::numbers::pi / 6.0, 1e-14);
}

TEST(Trigamma, IsDerivativeOfDigamma) {
  for (double x : {0.05, 0.3, 1.0, 2.5, 7.0, 40.0}) {
    const double h = 1e-5 * x;
    const double fd = (tms::digamma(x + h) - tms::digamma(x - h)) / (2.0 * h);
    EXPECT_NEAR(tms::trigamma(x), fd, 1e-6 * tms::trigamma(x)) << x;
  }
}
