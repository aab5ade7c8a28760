#ifndef STREAMFORGE_BESSEL_HPP
#define STREAMFORGE_BESSEL_HPP

// Modified Bessel function of the second kind, K_nu(x), for real order.
//
// The order is split as nu = mu + n with |mu| <= 1/2. K_mu and K_(mu+1) come
// from Temme's series for x <= 2 and from Steed's continued fraction (CF2)
// for x > 2; upward recurrence, which is stable for K, then reaches nu.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "error.hpp"

namespace streamforge {

namespace detail {

/// Taylor coefficients of 1/Gamma(1 + z) around z = 0.
inline constexpr std::array<double, 26> reciprocal_gamma_coeffs{
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
};

struct TemmeGammas {
  double gam1;   // (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
  double gam2;   // (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
  double gampl;  // 1/Gamma(1+mu)
  double gammi;  // 1/Gamma(1-mu)
};

/// Valid for |mu| <= 1/2; the odd/even split keeps gam1 accurate near mu = 0.
inline TemmeGammas temme_gammas(double mu)
{
  // even_sum = sum b_2m mu^2m, odd_sum = sum b_(2m+1) mu^2m, so that
  // 1/Gamma(1 +- mu) = even_sum +- mu * odd_sum.
  double even_sum = 0.0;
  double odd_sum = 0.0;
  const double mu2 = mu * mu;
  double p = 1.0;
  for (std::size_t k = 0; k + 1 < reciprocal_gamma_coeffs.size(); k += 2) {
    even_sum += reciprocal_gamma_coeffs[k] * p;
    odd_sum += reciprocal_gamma_coeffs[k + 1] * p;
    p *= mu2;
  }
  TemmeGammas g;
  g.gam1 = -odd_sum;
  g.gam2 = even_sum;
  g.gampl = even_sum + mu * odd_sum;
  g.gammi = even_sum - mu * odd_sum;
  return g;
}

struct BesselPair {
  double k_mu;
  double k_mu1;
};

inline constexpr int bessel_max_iterations = 100000;
inline constexpr double bessel_eps = std::numeric_limits<double>::epsilon();

/// K_mu(x), K_(mu+1)(x) by Temme's series; x <= 2.
inline BesselPair temme_series(double mu, double x)
{
  const double x2 = 0.5 * x;
  const double pimu = std::numbers::pi * mu;
  const double fact = std::fabs(pimu) < bessel_eps ? 1.0 : pimu / std::sin(pimu);
  double d = -std::log(x2);
  double e = mu * d;
  const double fact2 = std::fabs(e) < bessel_eps ? 1.0 : std::sinh(e) / e;
  const TemmeGammas g = temme_gammas(mu);

  double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
  double sum = ff;
  e = std::exp(e);
  double p = 0.5 * e / g.gampl;
  double q = 0.5 / (e * g.gammi);
  double c = 1.0;
  d = x2 * x2;
  double sum1 = p;
  const double mu2 = mu * mu;
  for (int i = 1;; ++i) {
    if (i > bessel_max_iterations)
      throw Error(Errc::invalid_argument, "bessel_k series failed to converge");
    const double di = i;
    ff = (di * ff + p + q) / (di * di - mu2);
    c *= d / di;
    p /= di - mu;
    q /= di + mu;
    const double del = c * ff;
    sum += del;
    sum1 += c * (p - di * ff);
    if (std::fabs(del) < std::fabs(sum) * bessel_eps)
      break;
  }
  return {sum, sum1 * 2.0 / x};
}

/// e^x K_mu(x), e^x K_(mu+1)(x) by Steed's CF2; x > 2.
inline BesselPair steed_cf2_scaled(double mu, double x)
{
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2;; ++i) {
    if (i > bessel_max_iterations)
      throw Error(Errc::invalid_argument, "bessel_k continued fraction failed to converge");
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::fabs(dels / s) < bessel_eps)
      break;
  }
  h *= a1;
  const double k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
  return {k_mu, k_mu * (mu + x + 0.5 - h) / x};
}

inline void validate_bessel_args(double nu, double x)
{
  if (!std::isfinite(nu))
    throw Error(Errc::invalid_argument, "bessel_k order must be finite");
  if (!(x > 0.0) || !std::isfinite(x))
    throw Error(Errc::invalid_argument, "bessel_k argument must be positive and finite");
}

/// Returns K_nu(x) scaled by e^x when x > 2 (flag set), unscaled otherwise.
inline double bessel_k_impl(double nu, double x, bool& scaled)
{
  nu = std::fabs(nu);
  const int n = static_cast<int>(nu + 0.5);
  const double mu = nu - n;
  BesselPair kp;
  if (x <= 2.0) {
    kp = temme_series(mu, x);
    scaled = false;
  } else {
    kp = steed_cf2_scaled(mu, x);
    scaled = true;
  }
  double k_lo = kp.k_mu;
  double k_hi = kp.k_mu1;
  for (int i = 1; i <= n; ++i) {
    const double next = (mu + i) * (2.0 / x) * k_hi + k_lo;
    k_lo = k_hi;
    k_hi = next;
  }
  return k_lo;
}

} // namespace detail

/// K_nu(x) for x > 0. Negative orders use K_(-nu) = K_nu.
inline double bessel_k(double nu, double x)
{
  detail::validate_bessel_args(nu, x);
  bool scaled = false;
  const double k = detail::bessel_k_impl(nu, x, scaled);
  return scaled ? k * std::exp(-x) : k;
}

/// e^x K_nu(x); finite where K_nu itself underflows.
inline double bessel_k_scaled(double nu, double x)
{
  detail::validate_bessel_args(nu, x);
  bool scaled = false;
  const double k = detail::bessel_k_impl(nu, x, scaled);
  return scaled ? k : k * std::exp(x);
}

} // namespace streamforge

#endif // STREAMFORGE_BESSEL_HPP
