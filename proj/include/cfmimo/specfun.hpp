#pragma once

// Special functions and adaptive quadrature used by the closed-form SINR,
// rate and outage expressions. Everything here is pure and reentrant.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "cfmimo/errors.hpp"

namespace cfmimo {

struct QuadratureSpec {
  double relative_tolerance = 1e-10;
  double absolute_tolerance = 1e-14;
  int max_subdivisions = 4000;

  void check() const {
    if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0)) {
      throw DomainError("QuadratureSpec: tolerances must be positive");
    }
    if (max_subdivisions < 1) {
      throw DomainError("QuadratureSpec: max_subdivisions must be >= 1");
    }
  }
};

/// Termination rule for hypergeometric-type series: stop once |term| has been
/// below relative_tolerance * |partial sum| for three consecutive terms.
struct SeriesOptions {
  double relative_tolerance = 1e-16;
  std::size_t max_terms = 1'000'000;
};

/// Result of a summed series. abs_sum is the sum of term magnitudes, which
/// bounds the rounding error of value at roughly eps * abs_sum.
struct SeriesSum {
  double value = 0.0;
  double abs_sum = 0.0;
  std::size_t terms = 0;
  double last_term = 0.0;
};

/// log|Gamma(x)| together with the sign of Gamma(x).
struct SignedLog {
  double log_abs = 0.0;
  int sign = 1;
};

namespace detail {

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && std::floor(x) == x; }

// sin(pi x) with argument reduction so that large |x| keeps full accuracy.
inline double sin_pi(double x) {
  const double r = x - 2.0 * std::round(0.5 * x);  // r in [-1, 1]
  if (r == 0.0 || std::fabs(r) == 1.0) return 0.0;
  return std::sin(std::numbers::pi * r);
}

// Lanczos approximation, g = 607/128, 15 terms.
inline double ln_gamma_lanczos(double x) {
  static constexpr double g = 607.0 / 128.0;
  static constexpr std::array<double, 15> coef = {
      0.99999999999999709182,     57.156235665862923517,     -59.597960355475491248,
      14.136097974741747174,      -0.49191381609762019978,   .33994649984811888699e-4,
      .46523628927048575665e-4,   -.98374475304879564677e-4, .15808870322491248884e-3,
      -.21026444172410488319e-3,  .21743961811521264320e-3,  -.16431810653676389022e-3,
      .84418223983852743293e-4,   -.26190838401581408670e-4, .36899182659531622704e-5};
  const double xm1 = x - 1.0;
  double sum = coef[0];
  for (std::size_t i = 1; i < coef.size(); ++i) sum += coef[i] / (xm1 + static_cast<double>(i));
  const double t = xm1 + g + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (xm1 + 0.5) * std::log(t) - t + std::log(sum);
}

}  // namespace detail

/// Natural log of Gamma(x) for x > 0.
inline double ln_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("ln_gamma: requires x > 0, got " + std::to_string(x));
  if (std::isinf(x)) return x;
  if (x == 1.0 || x == 2.0) return 0.0;
  if (x < 0.5) {
    // Reflection keeps the Lanczos sum in its accurate range.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           detail::ln_gamma_lanczos(1.0 - x);
  }
  return detail::ln_gamma_lanczos(x);
}

/// log|Gamma(x)| and sign for any x that is not a nonpositive integer.
inline SignedLog ln_gamma_signed(double x) {
  if (detail::is_nonpositive_integer(x)) {
    throw DomainError("ln_gamma_signed: pole at nonpositive integer " + std::to_string(x));
  }
  if (x > 0.0) return {ln_gamma(x), 1};
  const double s = detail::sin_pi(x);
  return {std::log(std::numbers::pi) - std::log(std::fabs(s)) - ln_gamma(1.0 - x),
          s > 0.0 ? 1 : -1};
}

namespace detail {

inline double incgamma_prefactor(double a, double z) {
  return std::exp(a * std::log(z) - z - ln_gamma(a));
}

// P(a, z) by the power series; valid and fast for z < a + 1.
inline double incgamma_series(double a, double z) {
  constexpr std::size_t kMaxIter = 1'000'000;
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (std::size_t n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= z / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-17) return sum * incgamma_prefactor(a, z);
  }
  throw ConvergenceError("reg_lower_incomplete_gamma: series did not converge", kMaxIter, del);
}

// Q(a, z) by the Legendre continued fraction (modified Lentz); for z >= a + 1.
inline double incgamma_continued_fraction(double a, double z) {
  constexpr std::size_t kMaxIter = 1'000'000;
  constexpr double tiny = 1e-300;
  double b = z + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (std::size_t i = 1; i < kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) return incgamma_prefactor(a, z) * h;
  }
  throw ConvergenceError("reg_upper_incomplete_gamma: continued fraction did not converge",
                         kMaxIter, h);
}

inline void check_incgamma_args(const char* name, double a, double z) {
  if (!(a > 0.0)) throw DomainError(std::string(name) + ": requires a > 0");
  if (!(z >= 0.0)) throw DomainError(std::string(name) + ": requires z >= 0");
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, z) = gamma(a, z) / Gamma(a).
inline double reg_lower_incomplete_gamma(double a, double z) {
  detail::check_incgamma_args("reg_lower_incomplete_gamma", a, z);
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return 1.0;
  if (z < a + 1.0) return std::min(1.0, detail::incgamma_series(a, z));
  return std::clamp(1.0 - detail::incgamma_continued_fraction(a, z), 0.0, 1.0);
}

/// Regularized upper incomplete gamma Q(a, z) = 1 - P(a, z), without cancellation.
inline double reg_upper_incomplete_gamma(double a, double z) {
  detail::check_incgamma_args("reg_upper_incomplete_gamma", a, z);
  if (z == 0.0) return 1.0;
  if (std::isinf(z)) return 0.0;
  if (z < a + 1.0) return std::clamp(1.0 - detail::incgamma_series(a, z), 0.0, 1.0);
  return std::min(1.0, detail::incgamma_continued_fraction(a, z));
}

/// Sums the pFq series term by term with the three-consecutive-terms rule.
/// Lower parameters must not be nonpositive integers. Convergence requires
/// p <= q, or p == q + 1 with |z| < 1, unless an upper parameter terminates
/// the series.
inline SeriesSum hypergeometric_series(std::span<const double> upper,
                                       std::span<const double> lower, double z,
                                       const SeriesOptions& options = {}) {
  for (double b : lower) {
    if (detail::is_nonpositive_integer(b)) {
      throw DomainError("hypergeometric series: lower parameter " + std::to_string(b) +
                        " is a nonpositive integer");
    }
  }
  const bool terminates = std::any_of(upper.begin(), upper.end(), detail::is_nonpositive_integer);
  if (!terminates && z != 0.0) {
    if (upper.size() > lower.size() + 1) {
      throw DomainError("hypergeometric series: p > q + 1 diverges for z != 0");
    }
    if (upper.size() == lower.size() + 1 && !(std::fabs(z) < 1.0)) {
      throw DomainError("hypergeometric series: p == q + 1 requires |z| < 1, got z = " +
                        std::to_string(z));
    }
  }

  SeriesSum out;
  out.value = 1.0;
  out.abs_sum = 1.0;
  out.terms = 1;
  out.last_term = 1.0;
  if (z == 0.0) return out;

  double term = 1.0;
  int small_run = 0;
  for (std::size_t n = 0; n < options.max_terms; ++n) {
    const double dn = static_cast<double>(n);
    double ratio = z / (dn + 1.0);
    for (double a : upper) ratio *= (a + dn);
    for (double b : lower) ratio /= (b + dn);
    term *= ratio;
    out.value += term;
    out.abs_sum += std::fabs(term);
    out.terms = n + 2;
    out.last_term = term;
    if (!std::isfinite(out.value)) {
      throw ConvergenceError("hypergeometric series overflowed", out.terms, term);
    }
    if (std::fabs(term) <= options.relative_tolerance * std::fabs(out.value)) {
      if (++small_run >= 3) return out;
    } else {
      small_run = 0;
    }
  }
  throw ConvergenceError("hypergeometric series did not converge", out.terms, out.last_term);
}

/// Generalized hypergeometric function pFq(upper; lower; z) by direct summation.
inline double generalized_pfq(std::span<const double> upper, std::span<const double> lower,
                              double z, const SeriesOptions& options = {}) {
  return hypergeometric_series(upper, lower, z, options).value;
}

inline double generalized_pfq(std::initializer_list<double> upper,
                              std::initializer_list<double> lower, double z,
                              const SeriesOptions& options = {}) {
  return generalized_pfq(std::span<const double>(upper.begin(), upper.size()),
                         std::span<const double>(lower.begin(), lower.size()), z, options);
}

/// Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.
///
/// For z < 0 the Pfaff transformation
///   2F1(a, b; c; z) = (1 - z)^(-a) 2F1(a, c - b; c; z / (z - 1))
/// maps the argument into [0, 1). Because 2F1 is symmetric in (a, b) the
/// transformation may be taken on either numerator parameter; the variant
/// whose transformed series has nonnegative parameters (no cancellation) is
/// preferred.
inline double gauss_2f1(double a, double b, double c, double z, const SeriesOptions& options = {}) {
  if (detail::is_nonpositive_integer(c)) {
    throw DomainError("gauss_2f1: c = " + std::to_string(c) + " is a nonpositive integer");
  }
  if (!(z < 1.0)) throw DomainError("gauss_2f1: requires z < 1, got " + std::to_string(z));
  if (z == 0.0) return 1.0;
  if (z > 0.0) {
    const std::array<double, 2> up{a, b};
    const std::array<double, 1> lo{c};
    return hypergeometric_series(up, lo, z, options).value;
  }
  const double w = z / (z - 1.0);
  const auto negatives = [](double p, double q) { return int(p < 0.0) + int(q < 0.0); };
  double lead = a;
  double other = c - b;
  if (negatives(b, c - a) < negatives(a, c - b)) {
    lead = b;
    other = c - a;
  }
  const std::array<double, 2> up{lead, other};
  const std::array<double, 1> lo{c};
  return std::pow(1.0 - z, -lead) * hypergeometric_series(up, lo, w, options).value;
}

namespace detail {

struct GkSegment {
  double lo, hi, value, error;
  bool operator<(const GkSegment& other) const { return error < other.error; }
};

// 7-point Gauss / 15-point Kronrod pair on [lo, hi].
template <class F>
GkSegment gauss_kronrod_15(const F& f, double lo, double hi) {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = fc * wgk[7];
  double gauss = fc * wg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += wgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += wg[j / 2] * (f1 + f2);
  }
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod)) {
    throw DomainError("quadrature: integrand not finite on [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  return {lo, hi, kronrod, std::fabs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
template <class F>
double integrate(const F& f, double a, double b, const QuadratureSpec& spec = {}) {
  spec.check();
  if (a == b) return 0.0;
  std::priority_queue<detail::GkSegment> heap;
  auto first = detail::gauss_kronrod_15(f, a, b);
  double total = first.value;
  double error = first.error;
  heap.push(first);
  int subdivisions = 1;
  while (error > std::max(spec.absolute_tolerance, spec.relative_tolerance * std::fabs(total))) {
    if (subdivisions >= spec.max_subdivisions) {
      throw ToleranceError("integrate: tolerance not met", total, error);
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const auto left = detail::gauss_kronrod_15(f, worst.lo, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    heap.pop();
  }
  return total;
}

/// Integral of f over (0, inf) through x = scale * t / (1 - t), t in [0, 1).
/// scale should be a typical magnitude of x where f carries its mass. The
/// upper half t in [1/2, 1) is integrated in u = 1 - t, so nodes can reach
/// x ~ 1e300 and heavy power-law tails are not cut off at t's resolution.
template <class F>
double integrate_semi_infinite(const F& f, const QuadratureSpec& spec = {}, double scale = 1.0) {
  if (!(scale > 0.0)) throw DomainError("integrate_semi_infinite: scale must be positive");
  const auto lower = [&](double t) {
    const double one_minus = 1.0 - t;
    const double fx = f(scale * t / one_minus);
    if (fx == 0.0) return 0.0;
    return fx * scale / (one_minus * one_minus);
  };
  const auto upper = [&](double u) {
    const double x = scale * (1.0 - u) / u;
    if (!std::isfinite(x)) return 0.0;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    return fx * scale / (u * u);
  };
  return integrate(lower, 0.0, 0.5, spec) + integrate(upper, 0.0, 0.5, spec);
}

}  // namespace cfmimo
