#include <cmath>
#include <limits>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include <streamforge/bessel.hpp>

using namespace streamforge;

TEST(BesselK, HalfOrderClosedForm)
{
  // K_{1/2}(x) = sqrt(pi / (2x)) e^{-x}
  for (double x : {1e-6, 0.01, 0.3, 1.0, 1.9999, 2.0, 2.0001, 7.5, 40.0, 300.0}) {
    const double exact = std::sqrt(M_PI / (2.0 * x)) * std::exp(-x);
    EXPECT_NEAR(bessel_k(0.5, x), exact, 1e-13 * exact) << x;
  }
  EXPECT_NEAR(bessel_k(0.5, 1.0), 0.4610685044478944, 1e-15);
}

TEST(BesselK, ThreeHalvesClosedForm)
{
  // K_{3/2}(x) = sqrt(pi / (2x)) e^{-x} (1 + 1/x)
  for (double x : {0.05, 1.0, 3.0, 25.0}) {
    const double exact = std::sqrt(M_PI / (2.0 * x)) * std::exp(-x) * (1.0 + 1.0 / x);
    EXPECT_NEAR(bessel_k(1.5, x), exact, 1e-13 * exact) << x;
  }
}

TEST(BesselK, OrderOneAtOne)
{
  EXPECT_NEAR(bessel_k(1.0, 1.0), 0.6019072301972346, 1e-15);
}

TEST(BesselK, AgreesWithBoost)
{
  double worst = 0.0;
  for (double nu = 0.0; nu <= 10.0; nu += 0.125)
    for (double lx = -6.0; lx <= std::log10(50.0); lx += 0.05) {
      const double x = std::pow(10.0, lx);
      const double ref = boost::math::cyl_bessel_k(nu, x);
      if (!std::isfinite(ref))
        continue;
      const double rel = std::fabs(bessel_k(nu, x) - ref) / ref;
      worst = std::max(worst, rel);
    }
  EXPECT_LT(worst, 1e-12);
}

TEST(BesselK, RecurrenceIdentity)
{
  // K_{nu+1}(x) = K_{nu-1}(x) + (2 nu / x) K_nu(x)
  for (double nu : {0.7, 1.0, 2.3, 4.5, 8.0})
    for (double x : {0.01, 0.5, 2.0, 9.0, 33.0}) {
      const double lhs = bessel_k(nu + 1.0, x);
      const double rhs = bessel_k(nu - 1.0, x) + 2.0 * nu / x * bessel_k(nu, x);
      EXPECT_NEAR(lhs, rhs, 1e-9 * std::fabs(lhs)) << nu << " " << x;
    }
}

TEST(BesselK, ScaledVariant)
{
  for (double nu : {0.0, 0.5, 3.2})
    for (double x : {0.1, 1.5, 20.0, 600.0}) {
      const double scaled = bessel_k_scaled(nu, x);
      EXPECT_NEAR(scaled, boost::math::cyl_bessel_k(nu, x) * std::exp(x), 1e-12 * scaled)
          << nu << " " << x;
      EXPECT_TRUE(std::isfinite(scaled));
    }
}

TEST(BesselK, NegativeOrderIsSymmetric)
{
  EXPECT_DOUBLE_EQ(bessel_k(-2.5, 1.3), bessel_k(2.5, 1.3));
}

TEST(BesselK, DomainErrors)
{
  for (double x : {0.0, -1.0, std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::infinity()}) {
    try {
      bessel_k(1.0, x);
      FAIL() << x;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_argument);
    }
  }
  EXPECT_THROW(bessel_k(std::numeric_limits<double>::quiet_NaN(), 1.0), Error);
}
