#pragma once

// Closed-form first and second moments of the DS and IN components.
//
// Notation: for user k and AP m,
//   xi_mk   = sqrt(eta_mk)  h_hat_mk^H b_mk        (real, positive under MRT)
//   xi_mkk1 = sqrt(eta_mk1) h_hat_mk^H b_mk1
//   psi_mkk1 = sqrt(eta_mk1) h_err_mk^H b_mk1
// U1_k = |sum_m xi_mk|^2, U2_kk1 = |sum_m xi_mkk1|^2, U3_kk1 = |sum_m psi_mkk1|^2.
// Terms from different APs are independent.

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "cfmimo/config.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/geometry.hpp"

namespace cfmimo {

struct MomentPair {
  double m1 = 0.0;
  double m2 = 0.0;

  double variance() const { return m2 - m1 * m1; }
};

/// Raw moments E{x}, E{x^2}, E{x^3}, E{x^4}.
using RawMoments4 = std::array<double, 4>;

/// xi = sqrt(eta / (N c)) ||h_hat||^2 with h_hat ~ CN(0, c I_N), i.e.
/// sqrt(eta c / N) times a Gamma(N, 1) variable.
inline RawMoments4 xi_moments_mrt(double eta, double c, int N) {
  if (!(eta >= 0.0) || !(c >= 0.0)) throw DomainError("xi_moments_mrt: eta, c must be >= 0");
  if (N < 1) throw DomainError("xi_moments_mrt: N must be >= 1");
  const double n = N;
  const double ec = eta * c;
  return {std::sqrt(n * ec), (n + 1.0) * ec, (n + 1.0) * (n + 2.0) / std::sqrt(n) * std::pow(ec, 1.5),
          (n + 1.0) * (n + 2.0) * (n + 3.0) / n * ec * ec};
}

/// (E{S^2}, E{S^4}) for S = sum of independent real terms with the given raw
/// moments. Partial sums are folded in one term at a time through the
/// binomial expansion of E{(S + x)^n}; every term is nonnegative for
/// nonnegative variables, so there is no cancellation. O(M).
inline MomentPair real_sum_square_moments(std::span<const RawMoments4> terms) {
  std::array<double, 5> s{1.0, 0.0, 0.0, 0.0, 0.0};
  for (const auto& t : terms) {
    const std::array<double, 5> mu{1.0, t[0], t[1], t[2], t[3]};
    std::array<double, 5> next{};
    next[0] = 1.0;
    next[1] = s[1] + mu[1];
    next[2] = s[2] + 2.0 * s[1] * mu[1] + mu[2];
    next[3] = s[3] + 3.0 * s[2] * mu[1] + 3.0 * s[1] * mu[2] + mu[3];
    next[4] = s[4] + 4.0 * s[3] * mu[1] + 6.0 * s[2] * mu[2] + 4.0 * s[1] * mu[3] + mu[4];
    s = next;
  }
  return {s[2], s[4]};
}

/// Same quantity by literal expansion of E{(sum_a x_a)^4} over all index
/// quadruples. O(M^4); kept as a reference for the fast form.
inline MomentPair real_sum_square_moments_naive(std::span<const RawMoments4> terms) {
  const std::size_t M = terms.size();
  const auto moment = [&](std::size_t m, int power) { return power == 0 ? 1.0 : terms[m][power - 1]; };
  double second = 0.0;
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = 0; b < M; ++b) second += a == b ? moment(a, 2) : moment(a, 1) * moment(b, 1);
  }
  double fourth = 0.0;
  std::vector<int> count(M, 0);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = 0; b < M; ++b) {
      for (std::size_t c = 0; c < M; ++c) {
        for (std::size_t d = 0; d < M; ++d) {
          ++count[a];
          ++count[b];
          ++count[c];
          ++count[d];
          double prod = 1.0;
          for (std::size_t i : {a, b, c, d}) {
            if (count[i] > 0) {
              prod *= moment(i, count[i]);
              count[i] = 0;
            }
          }
          fourth += prod;
        }
      }
    }
  }
  return {second, fourth};
}

/// (E{|S|^2}, E{|S|^4}) for S = sum of independent zero-mean circular complex
/// terms with E|x_m|^2 = e2[m] and E|x_m|^4 = e4[m]:
///   E|S|^4 = sum e4 + 2 sum_{m != m1} e2[m] e2[m1].
inline MomentPair complex_sum_square_moments(std::span<const double> e2,
                                             std::span<const double> e4) {
  if (e2.size() != e4.size()) throw DomainError("complex_sum_square_moments: size mismatch");
  double s = 0.0, s_sq = 0.0, q = 0.0;
  for (std::size_t m = 0; m < e2.size(); ++m) {
    s += e2[m];
    s_sq += e2[m] * e2[m];
    q += e4[m];
  }
  return {s, q + 2.0 * (s * s - s_sq)};
}

inline void check_user(const LargeScaleModel& lsm, int k, const char* who) {
  if (k < 0 || k >= lsm.num_users()) {
    throw DomainError(std::string(who) + ": user index " + std::to_string(k) + " out of range");
  }
}

/// (E{U1_k}, E{(U1_k)^2}) under MRT.
inline MomentPair u1_moments_mrt(const LargeScaleModel& lsm, int k, int N) {
  check_user(lsm, k, "u1_moments_mrt");
  std::vector<RawMoments4> xi(lsm.num_aps());
  for (int m = 0; m < lsm.num_aps(); ++m) xi[m] = xi_moments_mrt(lsm.eta(m, k), lsm.c(m, k), N);
  return real_sum_square_moments(xi);
}

/// Co-pilot U2 under MRT. Parallel estimates make xi_mkk1 real with the law
/// of xi_mk after replacing eta_mk by eta_mk1.
inline MomentPair u2_moments_same_pilot(const LargeScaleModel& lsm, int k, int k1, int N) {
  check_user(lsm, k, "u2_moments_same_pilot");
  check_user(lsm, k1, "u2_moments_same_pilot");
  if (!lsm.shares_pilot(k, k1)) {
    throw ContractError("u2_moments_same_pilot: users " + std::to_string(k) + " and " +
                        std::to_string(k1) + " use different pilots");
  }
  std::vector<RawMoments4> xi(lsm.num_aps());
  for (int m = 0; m < lsm.num_aps(); ++m) xi[m] = xi_moments_mrt(lsm.eta(m, k1), lsm.c(m, k), N);
  return real_sum_square_moments(xi);
}

/// U2 for users on different pilots under MRT: xi_mkk1 is zero-mean complex
/// with E|xi|^2 = eta_mk1 c_mk and E|xi|^4 = 2 (N + 1) / N (eta_mk1 c_mk)^2.
inline MomentPair u2_moments_diff_pilot(const LargeScaleModel& lsm, int k, int k1, int N) {
  check_user(lsm, k, "u2_moments_diff_pilot");
  check_user(lsm, k1, "u2_moments_diff_pilot");
  if (N < 1) throw DomainError("u2_moments_diff_pilot: N must be >= 1");
  if (lsm.shares_pilot(k, k1)) {
    throw ContractError("u2_moments_diff_pilot: users " + std::to_string(k) + " and " +
                        std::to_string(k1) + " share a pilot");
  }
  const int M = lsm.num_aps();
  const double factor = 2.0 * (N + 1.0) / N;
  std::vector<double> e2(M), e4(M);
  for (int m = 0; m < M; ++m) {
    e2[m] = lsm.eta(m, k1) * lsm.c(m, k);
    e4[m] = factor * e2[m] * e2[m];
  }
  return complex_sum_square_moments(e2, e4);
}

inline MomentPair u2_moments_mrt(const LargeScaleModel& lsm, int k, int k1, int N) {
  return lsm.shares_pilot(k, k1) ? u2_moments_same_pilot(lsm, k, k1, N)
                                 : u2_moments_diff_pilot(lsm, k, k1, N);
}

/// U3 (estimation-error leakage): psi_mkk1 is zero-mean complex with
/// E|psi|^2 = eta_mk1 (beta_mk - c_mk) and
/// E|psi|^4 = 2 (N + 1) / N (eta_mk1 (beta_mk - c_mk))^2.
///
/// Under MRT the fourth-moment factor is exact. Under FZF the same form is
/// used, although the exact factor is 2 (N - l_p) / (N - l_p - 1) from the
/// inverse-Wishart norm of the precoder, which is unbounded at N = l_p + 1;
/// see fzf_error_fourth_moment_factor.
inline MomentPair u3_moments(const LargeScaleModel& lsm, int k, int k1, int N, Scheme scheme) {
  check_user(lsm, k, "u3_moments");
  check_user(lsm, k1, "u3_moments");
  if (N < 1) throw DomainError("u3_moments: N must be >= 1");
  if (scheme == Scheme::kFzf && N < lsm.l_p + 1) throw DomainError("u3_moments: FZF needs N >= l_p + 1");
  const int M = lsm.num_aps();
  const double factor = 2.0 * (N + 1.0) / N;
  std::vector<double> e2(M), e4(M);
  for (int m = 0; m < M; ++m) {
    e2[m] = lsm.eta(m, k1) * std::max(0.0, lsm.beta(m, k) - lsm.c(m, k));
    e4[m] = factor * e2[m] * e2[m];
  }
  return complex_sum_square_moments(e2, e4);
}

/// E|psi|^4 / (E|psi|^2)^2 under FZF with exact precoder statistics. Infinite
/// when N - l_p < 2.
inline double fzf_error_fourth_moment_factor(int N, int l_p) {
  const int dof = N - l_p;
  if (dof < 1) throw DomainError("fzf_error_fourth_moment_factor: need N >= l_p + 1");
  if (dof < 2) return std::numeric_limits<double>::infinity();
  return 2.0 * dof / (dof - 1.0);
}

/// E{z^2} for the noise term entering IN.
inline double noise_second_moment(NoiseModel model) {
  return model == NoiseModel::kSampledPower ? 2.0 : 1.0;
}

/// (E{DS}, E{DS^2}) under MRT.
inline MomentPair ds_moments_mrt(const LargeScaleModel& lsm, int k, int N, double rho_d) {
  const MomentPair u1 = u1_moments_mrt(lsm, k, N);
  return {rho_d * u1.m1, rho_d * rho_d * u1.m2};
}

namespace detail {

struct TermSums {
  double mean = 0.0;        // sum of E{U}
  double mean_sq = 0.0;     // sum of E{U}^2
  double second = 0.0;      // sum of E{U^2}

  void add(const MomentPair& p) {
    mean += p.m1;
    mean_sq += p.m1 * p.m1;
    second += p.m2;
  }
  // sum_{a != b} E{U_a} E{U_b}
  double cross() const { return mean * mean - mean_sq; }
};

inline TermSums u3_sums(const LargeScaleModel& lsm, int k, int N, Scheme scheme) {
  TermSums s;
  for (int k1 = 0; k1 < lsm.num_users(); ++k1) s.add(u3_moments(lsm, k, k1, N, scheme));
  return s;
}

}  // namespace detail

/// (E{IN_k}, E{IN_k^2}) under MRT, treating the U2 and U3 terms of distinct
/// user pairs as uncorrelated. The noise contributes E{z} = 1 and
/// E{z^2} = noise_second_moment(noise) outside the rho_d^2 bracket.
inline MomentPair in_moments_mrt(const LargeScaleModel& lsm, int k, int N, double rho_d,
                                 NoiseModel noise = NoiseModel::kSampledPower) {
  check_user(lsm, k, "in_moments_mrt");
  detail::TermSums a;
  for (int k1 = 0; k1 < lsm.num_users(); ++k1) {
    if (k1 != k) a.add(u2_moments_mrt(lsm, k, k1, N));
  }
  const detail::TermSums b = detail::u3_sums(lsm, k, N, Scheme::kMrt);
  MomentPair out;
  out.m1 = rho_d * (a.mean + b.mean) + 1.0;
  out.m2 = rho_d * rho_d * (a.second + a.cross() + b.second + b.cross() + 2.0 * a.mean * b.mean) +
           2.0 * rho_d * (a.mean + b.mean) + noise_second_moment(noise);
  return out;
}

/// DS under FZF: rho_d (sum_m sqrt(eta_mk (N - l_p) c_mk))^2, the same for
/// every realization.
inline double ds_fzf(const LargeScaleModel& lsm, int k, int N, double rho_d) {
  check_user(lsm, k, "ds_fzf");
  if (N < lsm.l_p + 1) throw DomainError("ds_fzf: need N >= l_p + 1");
  double s = 0.0;
  for (int m = 0; m < lsm.num_aps(); ++m) {
    s += std::sqrt(lsm.eta(m, k) * (N - lsm.l_p) * lsm.c(m, k));
  }
  return rho_d * s * s;
}

/// Deterministic co-pilot interference rho_d sum_{k1 != k} (sum_m sqrt(eta_mk1) alpha_mkk1)^2.
inline double u2_fzf(const LargeScaleModel& lsm, int k, int N, double rho_d) {
  check_user(lsm, k, "u2_fzf");
  if (N < lsm.l_p + 1) throw DomainError("u2_fzf: need N >= l_p + 1");
  double total = 0.0;
  for (int k1 : lsm.copilot_sets[k]) {
    if (k1 == k) continue;
    double s = 0.0;
    for (int m = 0; m < lsm.num_aps(); ++m) {
      s += std::sqrt(lsm.eta(m, k1) * (N - lsm.l_p) * lsm.c(m, k));
    }
    total += s * s;
  }
  return rho_d * total;
}

/// (E{IN_k}, E{IN_k^2}) under FZF. With rho_d = 0 and the default noise
/// model this is (1, 2).
inline MomentPair in_moments_fzf(const LargeScaleModel& lsm, int k, int N, double rho_d,
                                 NoiseModel noise = NoiseModel::kSampledPower) {
  check_user(lsm, k, "in_moments_fzf");
  const double u2 = u2_fzf(lsm, k, N, rho_d);
  const detail::TermSums b = detail::u3_sums(lsm, k, N, Scheme::kFzf);
  MomentPair out;
  out.m1 = u2 + rho_d * b.mean + 1.0;
  out.m2 = rho_d * rho_d * b.second + 2.0 * rho_d * (u2 + 1.0) * b.mean +
           rho_d * rho_d * b.cross() + u2 * u2 + 2.0 * u2 + noise_second_moment(noise);
  return out;
}

inline MomentPair in_moments(Scheme scheme, const LargeScaleModel& lsm, int k, int N,
                             double rho_d, NoiseModel noise = NoiseModel::kSampledPower) {
  return scheme == Scheme::kMrt ? in_moments_mrt(lsm, k, N, rho_d, noise)
                                : in_moments_fzf(lsm, k, N, rho_d, noise);
}

}  // namespace cfmimo
