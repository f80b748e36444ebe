#pragma once

// Pilot assignment with its MMSE coefficients, plus per-realization channel
// draws and their pilot-phase estimates.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/errors.hpp"
#include "cfmimo/geometry.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

/// Orthogonal pilot book. Columns have squared norm l_p (not unit norm):
/// book = sqrt(l_p) * (unitary DFT), i.e. entries exp(-2 pi i r c / l_p).
struct PilotSet {
  int length = 0;
  Eigen::MatrixXcd book;

  static PilotSet dft(int l_p) {
    if (l_p < 1) throw DomainError("PilotSet::dft: l_p must be >= 1");
    PilotSet set;
    set.length = l_p;
    set.book.resize(l_p, l_p);
    for (int r = 0; r < l_p; ++r) {
      for (int c = 0; c < l_p; ++c) {
        const double angle = -2.0 * std::numbers::pi * r * c / l_p;
        set.book(r, c) = std::polar(1.0, angle);
      }
    }
    return set;
  }

  auto column(int i) const { return book.col(i); }
};

struct PilotAssignment {
  std::vector<int> pilot_index;
  std::vector<std::vector<int>> copilot_sets;
  int l_p = 1;
};

/// Sequential assignment i_k = k mod l_p.
inline PilotAssignment assign_pilots(int K, int l_p) {
  if (K < 1) throw DomainError("assign_pilots: K must be >= 1");
  if (l_p < 1 || l_p > K) throw DomainError("assign_pilots: need 1 <= l_p <= K");
  PilotAssignment out;
  out.l_p = l_p;
  out.pilot_index.resize(K);
  for (int k = 0; k < K; ++k) out.pilot_index[k] = k % l_p;
  out.copilot_sets.resize(K);
  for (int k = 0; k < K; ++k) {
    for (int k1 = 0; k1 < K; ++k1) {
      if (out.pilot_index[k1] == out.pilot_index[k]) out.copilot_sets[k].push_back(k1);
    }
  }
  return out;
}

/// MMSE weights for noise-normalized gains. eta is left zero; fill it with a
/// power-allocation rule before use.
inline LargeScaleModel make_large_scale_model(const Eigen::MatrixXd& beta,
                                              const PilotAssignment& pilots, double rho_p) {
  if (beta.cols() != static_cast<Eigen::Index>(pilots.pilot_index.size())) {
    throw DomainError("make_large_scale_model: beta has wrong number of user columns");
  }
  if ((beta.array() < 0.0).any()) throw DomainError("make_large_scale_model: beta must be >= 0");
  if (!(rho_p >= 0.0)) throw DomainError("make_large_scale_model: rho_p must be >= 0");
  const Eigen::Index M = beta.rows();
  const Eigen::Index K = beta.cols();
  LargeScaleModel lsm;
  lsm.beta = beta;
  lsm.kappa.resize(M, K);
  lsm.c.resize(M, K);
  lsm.eta = Eigen::MatrixXd::Zero(M, K);
  lsm.pilot_index = pilots.pilot_index;
  lsm.copilot_sets = pilots.copilot_sets;
  lsm.l_p = pilots.l_p;
  lsm.rho_p = rho_p;
  const double lp = pilots.l_p;
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index k = 0; k < K; ++k) {
      double shared = 0.0;
      for (int k1 : pilots.copilot_sets[k]) shared += beta(m, k1);
      const double denom = lp * rho_p * shared + 1.0;
      lsm.kappa(m, k) = std::sqrt(rho_p) * beta(m, k) / denom;
      lsm.c(m, k) = lp * rho_p * beta(m, k) * beta(m, k) / denom;
    }
  }
  return lsm;
}

/// One small-scale draw. Every vector holds one matrix per AP.
struct ChannelRealization {
  std::vector<Eigen::MatrixXcd> true_h;     // N x K
  std::vector<Eigen::MatrixXcd> pilot_rx;   // N x l_p
  std::vector<Eigen::MatrixXcd> est_h;      // N x K
  std::vector<Eigen::MatrixXcd> err_h;      // N x K, true_h - est_h
  std::vector<Eigen::MatrixXcd> hbar_full;  // N x l_p, pilot_rx * book

  int num_aps() const { return static_cast<int>(true_h.size()); }
  int antennas() const { return true_h.empty() ? 0 : static_cast<int>(true_h.front().rows()); }
};

/// h_mk = sqrt(beta_mk) g_mk with g_mk ~ CN(0, I_N).
inline std::vector<Eigen::MatrixXcd> draw_true_channels(const LargeScaleModel& lsm, int N,
                                                        Rng& rng) {
  if (N < 1) throw DomainError("draw_true_channels: N must be >= 1");
  const int M = lsm.num_aps();
  const int K = lsm.num_users();
  ComplexNormal unit(1.0);
  std::vector<Eigen::MatrixXcd> h(M, Eigen::MatrixXcd(N, K));
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) {
      const double amp = std::sqrt(lsm.beta(m, k));
      for (int n = 0; n < N; ++n) h[m](n, k) = amp * unit(rng);
    }
  }
  return h;
}

/// Y_m = sqrt(rho_p) sum_k h_mk phi_{i_k}^H + Z_m. With add_noise == false
/// the Z term is omitted, which tests use to check the noiseless algebra.
inline std::vector<Eigen::MatrixXcd> pilot_phase(const LargeScaleModel& lsm,
                                                 const std::vector<Eigen::MatrixXcd>& true_h,
                                                 const PilotSet& pilots, double rho_p, Rng& rng,
                                                 bool add_noise = true) {
  const int M = static_cast<int>(true_h.size());
  const int K = lsm.num_users();
  if (pilots.length != lsm.l_p) throw DomainError("pilot_phase: pilot book length != l_p");
  // Pilot matrix P (K x l_p) with row k = phi_{i_k}^H, so Y_m = sqrt(rho_p) H_m P + Z_m.
  Eigen::MatrixXcd P(K, pilots.length);
  for (int k = 0; k < K; ++k) P.row(k) = pilots.column(lsm.pilot_index[k]).adjoint();
  const double amp = std::sqrt(rho_p);
  ComplexNormal unit(1.0);
  std::vector<Eigen::MatrixXcd> y(M);
  for (int m = 0; m < M; ++m) {
    if (true_h[m].cols() != K) throw DomainError("pilot_phase: channel has wrong user count");
    y[m] = amp * (true_h[m] * P);
    if (add_noise) {
      for (Eigen::Index c = 0; c < y[m].cols(); ++c) {
        for (Eigen::Index r = 0; r < y[m].rows(); ++r) y[m](r, c) += unit(rng);
      }
    }
  }
  return y;
}

/// Fills est_h, err_h and hbar_full from true_h and pilot_rx.
inline void mmse_estimate(const LargeScaleModel& lsm, const PilotSet& pilots,
                          ChannelRealization& real) {
  const int M = static_cast<int>(real.pilot_rx.size());
  const int K = lsm.num_users();
  real.est_h.resize(M);
  real.err_h.resize(M);
  real.hbar_full.resize(M);
  for (int m = 0; m < M; ++m) {
    real.hbar_full[m] = real.pilot_rx[m] * pilots.book;
    const auto& hbar = real.hbar_full[m];
    real.est_h[m].resize(hbar.rows(), K);
    for (int k = 0; k < K; ++k) {
      real.est_h[m].col(k) = lsm.kappa(m, k) * hbar.col(lsm.pilot_index[k]);
    }
    if (m < static_cast<int>(real.true_h.size())) real.err_h[m] = real.true_h[m] - real.est_h[m];
  }
}

inline ChannelRealization draw_realization(const LargeScaleModel& lsm, const PilotSet& pilots,
                                           int N, Rng& rng) {
  ChannelRealization real;
  real.true_h = draw_true_channels(lsm, N, rng);
  real.pilot_rx = pilot_phase(lsm, real.true_h, pilots, lsm.rho_p, rng);
  mmse_estimate(lsm, pilots, real);
  return real;
}

}  // namespace cfmimo
