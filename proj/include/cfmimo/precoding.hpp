#pragma once

// Heuristic power control and the two precoders (maximum ratio, full-pilot ZF).

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/geometry.hpp"

namespace cfmimo {

struct PrecoderSet {
  Scheme scheme = Scheme::kMrt;
  std::vector<Eigen::MatrixXcd> vectors;  // per AP, N x K, column k is b_mk
};

/// eta_mk = c_mk / sum_k c_mk.
inline Eigen::MatrixXd power_allocation_heuristic(const LargeScaleModel& lsm) {
  Eigen::MatrixXd eta(lsm.c.rows(), lsm.c.cols());
  for (Eigen::Index m = 0; m < lsm.c.rows(); ++m) {
    const double total = lsm.c.row(m).sum();
    if (!(total > 0.0)) {
      throw DegenerateError("power_allocation_heuristic: AP " + std::to_string(m) +
                            " has zero estimation power toward every user");
    }
    eta.row(m) = lsm.c.row(m) / total;
  }
  return eta;
}

/// b_mk = h_hat_mk / sqrt(N c_mk). The normalizer is statistical, so
/// E||b||^2 = 1 while individual draws vary.
inline PrecoderSet mrt_precoders(const ChannelRealization& real, const LargeScaleModel& lsm) {
  PrecoderSet out;
  out.scheme = Scheme::kMrt;
  const int M = static_cast<int>(real.est_h.size());
  out.vectors.resize(M);
  for (int m = 0; m < M; ++m) {
    const auto& est = real.est_h[m];
    const double N = static_cast<double>(est.rows());
    out.vectors[m].resize(est.rows(), est.cols());
    for (Eigen::Index k = 0; k < est.cols(); ++k) {
      const double c = lsm.c(m, k);
      if (!(c > 0.0)) {
        throw DegenerateError("mrt_precoders: c = 0 on link (" + std::to_string(m) + ", " +
                              std::to_string(k) + ")");
      }
      out.vectors[m].col(k) = est.col(k) / std::sqrt(N * c);
    }
  }
  return out;
}

/// Gram matrices with reciprocal condition below this are rejected.
inline constexpr double kFzfMinRcond = 1e-12;

/// b_mk = Hbar_m (Hbar_m^H Hbar_m)^{-1} e_{i_k} sqrt((N - l_p) c_mk) / kappa_mk.
/// One Cholesky factorization per AP serves all K users.
inline PrecoderSet fzf_precoders(const ChannelRealization& real, const LargeScaleModel& lsm) {
  PrecoderSet out;
  out.scheme = Scheme::kFzf;
  const int M = static_cast<int>(real.hbar_full.size());
  const int K = lsm.num_users();
  out.vectors.resize(M);
  for (int m = 0; m < M; ++m) {
    const auto& hbar = real.hbar_full[m];
    const Eigen::Index N = hbar.rows();
    const Eigen::Index lp = hbar.cols();
    if (N < lp + 1) throw DomainError("fzf_precoders: need N >= l_p + 1");
    const Eigen::MatrixXcd gram = hbar.adjoint() * hbar;
    const Eigen::LLT<Eigen::MatrixXcd> llt(gram);
    if (llt.info() != Eigen::Success || llt.rcond() < kFzfMinRcond) {
      throw DegenerateError("fzf_precoders: Gram matrix at AP " + std::to_string(m) +
                            " is numerically singular");
    }
    const Eigen::MatrixXcd pinv = hbar * llt.solve(Eigen::MatrixXcd::Identity(lp, lp));
    out.vectors[m].resize(N, K);
    const double dof = static_cast<double>(N - lp);
    for (int k = 0; k < K; ++k) {
      const double kappa = lsm.kappa(m, k);
      if (!(kappa > 0.0)) {
        throw DegenerateError("fzf_precoders: kappa = 0 on link (" + std::to_string(m) + ", " +
                              std::to_string(k) + ")");
      }
      out.vectors[m].col(k) = pinv.col(lsm.pilot_index[k]) * (std::sqrt(dof * lsm.c(m, k)) / kappa);
    }
  }
  return out;
}

inline PrecoderSet make_precoders(Scheme scheme, const ChannelRealization& real,
                                  const LargeScaleModel& lsm) {
  return scheme == Scheme::kMrt ? mrt_precoders(real, lsm) : fzf_precoders(real, lsm);
}

/// h_hat_mk^H b_mk1 under FZF, exact for every realization.
inline double fzf_alpha(const LargeScaleModel& lsm, int k, int k1, int m, int N) {
  if (N < lsm.l_p + 1) throw DomainError("fzf_alpha: need N >= l_p + 1");
  if (!lsm.shares_pilot(k, k1)) return 0.0;
  return std::sqrt(static_cast<double>(N - lsm.l_p) * lsm.c(m, k));
}

/// Per-AP transmit power rho_d * sum_k eta_mk ||b_mk||^2 of one realization.
/// Reported as a diagnostic; no per-AP cap is enforced.
inline Eigen::VectorXd ap_transmit_power(const PrecoderSet& prec, const LargeScaleModel& lsm,
                                         double rho_d) {
  Eigen::VectorXd power(static_cast<Eigen::Index>(prec.vectors.size()));
  for (std::size_t m = 0; m < prec.vectors.size(); ++m) {
    const Eigen::Index mi = static_cast<Eigen::Index>(m);
    power(mi) = rho_d * (prec.vectors[m].colwise().squaredNorm().transpose().array() *
                         lsm.eta.row(mi).transpose().array())
                            .sum();
  }
  return power;
}

}  // namespace cfmimo
