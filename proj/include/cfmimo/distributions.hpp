#pragma once

// Gamma moment matching and the resulting SINR laws: a ratio of independent
// Gammas under MRT, a deterministic numerator over a Gamma under FZF. Rates,
// lower bounds and outage follow from these laws.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "cfmimo/config.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/geometry.hpp"
#include "cfmimo/moments.hpp"
#include "cfmimo/specfun.hpp"

namespace cfmimo {

struct GammaParams {
  double shape = 1.0;
  double scale = 1.0;

  double mean() const { return shape * scale; }
  double variance() const { return shape * scale * scale; }
};

/// Gamma with the given mean and second raw moment.
inline GammaParams gamma_match(const MomentPair& m) {
  const double var = m.m2 - m.m1 * m.m1;
  if (!(m.m1 > 0.0)) throw DegenerateError("gamma_match: first moment must be positive");
  if (!(var > 0.0)) {
    throw DegenerateError("gamma_match: nonpositive variance (m1 = " + std::to_string(m.m1) +
                          ", m2 = " + std::to_string(m.m2) + ")");
  }
  return {m.m1 * m.m1 / var, var / m.m1};
}

inline double gamma_pdf(const GammaParams& g, double x) {
  if (!(x > 0.0) || std::isinf(x)) return 0.0;
  return std::exp((g.shape - 1.0) * std::log(x) - x / g.scale - ln_gamma(g.shape) -
                  g.shape * std::log(g.scale));
}

inline double gamma_cdf(const GammaParams& g, double x) {
  return x <= 0.0 ? 0.0 : reg_lower_incomplete_gamma(g.shape, x / g.scale);
}

/// Analytic SINR law of one user. Under MRT, ds_params is the law of DS
/// itself (its scale already carries rho_d). Under FZF, DS is ds_value.
struct SinrDistributionModel {
  Scheme scheme = Scheme::kMrt;
  GammaParams ds_params;
  double ds_value = 0.0;
  GammaParams in_params;

  /// A representative SINR: E{DS} / E{IN}.
  double typical_sinr() const {
    const double ds = scheme == Scheme::kMrt ? ds_params.mean() : ds_value;
    return ds / in_params.mean();
  }
};

inline SinrDistributionModel mrt_model(const LargeScaleModel& lsm, int k, int N, double rho_d,
                                       NoiseModel noise = NoiseModel::kSampledPower) {
  SinrDistributionModel model;
  model.scheme = Scheme::kMrt;
  model.ds_params = gamma_match(ds_moments_mrt(lsm, k, N, rho_d));
  model.in_params = gamma_match(in_moments_mrt(lsm, k, N, rho_d, noise));
  return model;
}

inline SinrDistributionModel fzf_model(const LargeScaleModel& lsm, int k, int N, double rho_d,
                                       NoiseModel noise = NoiseModel::kSampledPower) {
  SinrDistributionModel model;
  model.scheme = Scheme::kFzf;
  model.ds_value = ds_fzf(lsm, k, N, rho_d);
  if (!(model.ds_value > 0.0)) throw DegenerateError("fzf_model: DS is zero");
  model.in_params = gamma_match(in_moments_fzf(lsm, k, N, rho_d, noise));
  return model;
}

inline SinrDistributionModel make_model(Scheme scheme, const LargeScaleModel& lsm, int k, int N,
                                        double rho_d, NoiseModel noise = NoiseModel::kSampledPower) {
  return scheme == Scheme::kMrt ? mrt_model(lsm, k, N, rho_d, noise)
                                : fzf_model(lsm, k, N, rho_d, noise);
}

namespace detail {

inline void require_scheme(const SinrDistributionModel& m, Scheme s, const char* who) {
  if (m.scheme != s) throw ContractError(std::string(who) + ": model has the other scheme");
}

// I_t(a, b) with t = y / (1 + y), from
//   I_t(a, b) = Gamma(a + b) / (a Gamma(a) Gamma(b)) y^a 2F1(a, a + b; a + 1; -y).
// Valid for t <= a / (a + b), where the transformed series converges fast.
inline double beta_prime_cdf_lower(double a, double b, double y) {
  const double log_pref = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * std::log(y) - std::log(a);
  return std::exp(log_pref) * gauss_2f1(a, a + b, a + 1.0, -y);
}

// P{X <= y} for X ~ BetaPrime(a, b).
inline double beta_prime_cdf(double a, double b, double y) {
  if (y <= 0.0) return 0.0;
  if (std::isinf(y)) return 1.0;
  const double t = y / (1.0 + y);
  if (t <= a / (a + b)) return std::clamp(beta_prime_cdf_lower(a, b, y), 0.0, 1.0);
  // 1 - I_t(a, b) = I_{1-t}(b, a); 1/X ~ BetaPrime(b, a).
  return std::clamp(1.0 - beta_prime_cdf_lower(b, a, 1.0 / y), 0.0, 1.0);
}

}  // namespace detail

/// Density of DS / IN with DS ~ Gamma(j1, theta1), IN ~ Gamma(j2, theta2),
/// independent:
///   Gamma(j1 + j2) x^(j1 - 1) (1/theta2 + x/theta1)^(-j1 - j2)
///     / (Gamma(j1) Gamma(j2) theta1^j1 theta2^j2).
inline double sinr_pdf_mrt(const SinrDistributionModel& model, double x) {
  detail::require_scheme(model, Scheme::kMrt, "sinr_pdf_mrt");
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 0.0;
  const double a = model.ds_params.shape;
  const double t1 = model.ds_params.scale;
  const double b = model.in_params.shape;
  const double t2 = model.in_params.scale;
  const double log_pdf = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * std::log(x) -
                         (a + b) * std::log(1.0 / t2 + x / t1) - a * std::log(t1) -
                         b * std::log(t2);
  return std::exp(log_pdf);
}

/// CDF of the MRT law. theta2 x / theta1 is beta-prime distributed, so the
/// value is a regularized incomplete beta, evaluated through 2F1 on the side
/// of the distribution where it does not cancel.
inline double sinr_cdf_mrt(const SinrDistributionModel& model, double x) {
  detail::require_scheme(model, Scheme::kMrt, "sinr_cdf_mrt");
  if (!(x > 0.0)) return 0.0;
  const double y = model.in_params.scale * x / model.ds_params.scale;
  return detail::beta_prime_cdf(model.ds_params.shape, model.in_params.shape, y);
}

/// Density of DS / IN with DS fixed and IN ~ Gamma(j2, theta2).
inline double sinr_pdf_fzf(const SinrDistributionModel& model, double x) {
  detail::require_scheme(model, Scheme::kFzf, "sinr_pdf_fzf");
  if (!(x > 0.0) || std::isinf(x)) return 0.0;
  const double b = model.in_params.shape;
  const double u = model.ds_value / (x * model.in_params.scale);
  return std::exp(b * std::log(u) - u - ln_gamma(b) - std::log(x));
}

/// P{DS / IN <= x} = P{IN >= DS / x}, the Gamma survival at DS / x.
inline double sinr_cdf_fzf(const SinrDistributionModel& model, double x) {
  detail::require_scheme(model, Scheme::kFzf, "sinr_cdf_fzf");
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return reg_upper_incomplete_gamma(model.in_params.shape,
                                    model.ds_value / (x * model.in_params.scale));
}

inline double sinr_pdf(const SinrDistributionModel& model, double x) {
  return model.scheme == Scheme::kMrt ? sinr_pdf_mrt(model, x) : sinr_pdf_fzf(model, x);
}

inline double sinr_cdf(const SinrDistributionModel& model, double x) {
  return model.scheme == Scheme::kMrt ? sinr_cdf_mrt(model, x) : sinr_cdf_fzf(model, x);
}

/// Inverse CDF by bisection in log x.
inline double sinr_quantile(const SinrDistributionModel& model, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("sinr_quantile: p must be in (0, 1)");
  double lo = model.typical_sinr();
  double hi = lo;
  for (int i = 0; i < 4000 && sinr_cdf(model, lo) > p; ++i) lo *= 0.5;
  for (int i = 0; i < 4000 && sinr_cdf(model, hi) < p; ++i) hi *= 2.0;
  if (!(sinr_cdf(model, lo) <= p && sinr_cdf(model, hi) >= p)) {
    throw ConvergenceError("sinr_quantile: could not bracket p", 4000, p);
  }
  for (int i = 0; i < 200 && hi / lo > 1.0 + 4e-16; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (sinr_cdf(model, mid) < p) lo = mid;
    else hi = mid;
  }
  return std::sqrt(lo * hi);
}

/// Closed-form rates are used only when j2 is at least this far from an
/// integer, since the csc(j2 pi) form has removable poles there.
inline constexpr double kPoleGuard = 1e-3;

/// Closed-form results whose estimated rounding error (relative) exceeds this
/// are rejected in favor of quadrature.
inline constexpr double kCancellationGuard = 1e-9;

namespace detail {

inline double distance_to_integer(double x) { return std::fabs(x - std::round(x)); }

}  // namespace detail

/// E{log2(1 + SINR)} under the MRT law in closed form. With s = theta1 / theta2,
///   R ln 2 = pi csc(j2 pi) Gamma(j1 + j2) s^j2 / (j2 Gamma(j1) Gamma(j2))
///              2F1(j2, j1 + j2; 1 + j2; s)
///          + s j1 / (j2 - 1) 3F2(1, 1, 1 + j1; 2, 2 - j2; s).
/// Returns nullopt outside its validity range (s >= 1, j2 near an integer)
/// or when the two terms cancel too strongly to trust.
inline std::optional<double> rate_closed_mrt(const SinrDistributionModel& model) {
  detail::require_scheme(model, Scheme::kMrt, "rate_closed_mrt");
  const double j1 = model.ds_params.shape;
  const double j2 = model.in_params.shape;
  const double s = model.ds_params.scale / model.in_params.scale;
  if (!(s < 1.0) || detail::distance_to_integer(j2) <= kPoleGuard) return std::nullopt;
  try {
    const std::array<double, 2> up1{j2, j1 + j2};
    const std::array<double, 1> lo1{1.0 + j2};
    const SeriesSum f21 = hypergeometric_series(up1, lo1, s);
    const std::array<double, 3> up2{1.0, 1.0, 1.0 + j1};
    const std::array<double, 2> lo2{2.0, 2.0 - j2};
    const SeriesSum f32 = hypergeometric_series(up2, lo2, s);

    const double log_first = std::log(std::numbers::pi) - std::log(std::fabs(detail::sin_pi(j2))) +
                             ln_gamma(j1 + j2) + j2 * std::log(s) - std::log(j2) - ln_gamma(j1) -
                             ln_gamma(j2);
    const double sign_first = detail::sin_pi(j2) > 0.0 ? 1.0 : -1.0;
    const double first = sign_first * std::exp(log_first);
    const double second_coef = s * j1 / (j2 - 1.0);
    const double total = first * f21.value + second_coef * f32.value;
    const double magnitude = std::fabs(first) * f21.abs_sum + std::fabs(second_coef) * f32.abs_sum;
    if (!std::isfinite(total) || !std::isfinite(magnitude)) return std::nullopt;
    if (magnitude * 64.0 * std::numeric_limits<double>::epsilon() >
        kCancellationGuard * std::fabs(total)) {
      return std::nullopt;
    }
    return total / std::numbers::ln2;
  } catch (const ConvergenceError&) {
    return std::nullopt;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

/// E{log2(1 + SINR)} under the FZF law in closed form. With u = DS / theta2,
///   R ln 2 = pi csc(j2 pi) / Gamma(j2) u^j2 sum_n u^n / (n! (j2 + n))
///          + u / (j2 - 1) 2F2(1, 1; 2, 2 - j2; u).
/// The first sum is (1/j2) 1F1(j2; j2 + 1; u). Both terms grow like e^u and
/// cancel, so the guard rejects large u.
inline std::optional<double> rate_closed_fzf(const SinrDistributionModel& model) {
  detail::require_scheme(model, Scheme::kFzf, "rate_closed_fzf");
  const double j2 = model.in_params.shape;
  const double u = model.ds_value / model.in_params.scale;
  if (detail::distance_to_integer(j2) <= kPoleGuard) return std::nullopt;
  try {
    const std::array<double, 1> up1{j2};
    const std::array<double, 1> lo1{j2 + 1.0};
    const SeriesSum f11 = hypergeometric_series(up1, lo1, u);
    const std::array<double, 2> up2{1.0, 1.0};
    const std::array<double, 2> lo2{2.0, 2.0 - j2};
    const SeriesSum f22 = hypergeometric_series(up2, lo2, u);

    const double log_first = std::log(std::numbers::pi) - std::log(std::fabs(detail::sin_pi(j2))) -
                             ln_gamma(j2) + j2 * std::log(u) - std::log(j2);
    const double sign_first = detail::sin_pi(j2) > 0.0 ? 1.0 : -1.0;
    const double first = sign_first * std::exp(log_first);
    const double second_coef = u / (j2 - 1.0);
    const double total = first * f11.value + second_coef * f22.value;
    const double magnitude = std::fabs(first) * f11.abs_sum + std::fabs(second_coef) * f22.abs_sum;
    if (!std::isfinite(total) || !std::isfinite(magnitude)) return std::nullopt;
    if (magnitude * 64.0 * std::numeric_limits<double>::epsilon() >
        kCancellationGuard * std::fabs(total)) {
      return std::nullopt;
    }
    return total / std::numbers::ln2;
  } catch (const ConvergenceError&) {
    return std::nullopt;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

inline std::optional<double> rate_closed(const SinrDistributionModel& model) {
  return model.scheme == Scheme::kMrt ? rate_closed_mrt(model) : rate_closed_fzf(model);
}

/// Integral of log2(1 + x) against the model density over (0, inf).
inline double rate_quadrature(const SinrDistributionModel& model, const QuadratureSpec& spec = {}) {
  const auto integrand = [&](double x) { return std::log2(1.0 + x) * sinr_pdf(model, x); };
  return integrate_semi_infinite(integrand, spec, model.typical_sinr());
}

struct RateResult {
  double value = 0.0;
  bool closed_form = false;  // false: the quadrature fallback was used
};

inline RateResult achievable_rate(const SinrDistributionModel& model,
                                  const QuadratureSpec& spec = {}) {
  if (const auto closed = rate_closed(model)) return {*closed, true};
  return {rate_quadrature(model, spec), false};
}

/// Variance term of the FZF bound. kErrorOnly uses beta_mk - c_mk: under FZF
/// every known-channel gain is deterministic, so only the estimation error
/// contributes beamforming uncertainty. kStated keeps beta_mk, which also
/// counts the known part and is valid but several bits looser.
enum class FzfBoundVariance { kStated, kErrorOnly };

/// Use-and-then-forget lower bound on the rate:
///   log2(1 + G rho (sum_m sqrt(eta_mk c_mk))^2
///        / (G rho sum_{k1 in P_k \ k} (sum_m sqrt(eta_mk1 c_mk))^2
///           + rho sum_m sum_k1 eta_mk1 v_mk + 1))
/// with G = N, v = beta under MRT and G = N - l_p, v = beta - c under FZF.
inline double rate_lower_bound(const LargeScaleModel& lsm, int k, int N, double rho_d,
                               Scheme scheme,
                               FzfBoundVariance fzf_variance = FzfBoundVariance::kErrorOnly) {
  check_user(lsm, k, "rate_lower_bound");
  const double gain = scheme == Scheme::kMrt ? N : static_cast<double>(N - lsm.l_p);
  if (gain <= 0.0) return 0.0;
  const int M = lsm.num_aps();
  double coherent = 0.0;
  for (int m = 0; m < M; ++m) coherent += std::sqrt(lsm.eta(m, k) * lsm.c(m, k));
  double copilot = 0.0;
  for (int k1 : lsm.copilot_sets[k]) {
    if (k1 == k) continue;
    double s = 0.0;
    for (int m = 0; m < M; ++m) s += std::sqrt(lsm.eta(m, k1) * lsm.c(m, k));
    copilot += s * s;
  }
  const bool error_only = scheme == Scheme::kFzf && fzf_variance == FzfBoundVariance::kErrorOnly;
  double leakage = 0.0;
  for (int m = 0; m < M; ++m) {
    const double v = error_only ? std::max(0.0, lsm.beta(m, k) - lsm.c(m, k)) : lsm.beta(m, k);
    leakage += lsm.eta.row(m).sum() * v;
  }
  const double sinr =
      gain * rho_d * coherent * coherent / (gain * rho_d * copilot + rho_d * leakage + 1.0);
  return std::log2(1.0 + sinr);
}

/// P{log2(1 + SINR) <= r} = F(2^r - 1).
inline double outage(const SinrDistributionModel& model, double rate_threshold) {
  if (!(rate_threshold >= 0.0)) throw DomainError("outage: rate threshold must be >= 0");
  if (std::isinf(rate_threshold)) return 1.0;
  return sinr_cdf(model, std::exp2(rate_threshold) - 1.0);
}

}  // namespace cfmimo
