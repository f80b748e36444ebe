#pragma once

// AP/user placement and the per-link large-scale coefficients (three-slope
// path loss with log-normal shadowing) shared by simulator and analysis.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Layout {
  std::vector<Point> ap_positions;
  std::vector<Point> user_positions;
  double width_m = 0.0;
  double height_m = 0.0;

  int num_aps() const { return static_cast<int>(ap_positions.size()); }
  int num_users() const { return static_cast<int>(user_positions.size()); }
};

/// Large-scale description of one deployment.
///
/// beta, c and kappa are noise-normalized: the pilot/downlink noise variance
/// is 1 and the transmit powers rho_p, rho_d are in mW. Entry (m, k) refers
/// to AP m and user k.
struct LargeScaleModel {
  Eigen::MatrixXd beta;   // M x K, E|h|^2 per antenna
  Eigen::MatrixXd kappa;  // M x K, MMSE correlation weight
  Eigen::MatrixXd c;      // M x K, E|h_hat|^2 per antenna
  Eigen::MatrixXd eta;    // M x K, power-control coefficients
  std::vector<int> pilot_index;               // length K, in [0, l_p)
  std::vector<std::vector<int>> copilot_sets; // users sharing user k's pilot, k included
  int l_p = 1;
  double rho_p = 0.0;

  int num_aps() const { return static_cast<int>(beta.rows()); }
  int num_users() const { return static_cast<int>(beta.cols()); }
  bool shares_pilot(int k, int k1) const { return pilot_index[k] == pilot_index[k1]; }
};

/// Three-slope path loss (distance in meters, result in dB, negative = loss).
/// Beyond d1 the COST-231 Hata slope of 35 dB/decade applies; between d0 and
/// d1 the slope is 20 dB/decade; below d0 the value is held at its d0 level.
struct PathLossModel {
  double d0_m = 10.0;
  double d1_m = 50.0;
  double loss_db = 140.7;  // 1.9 GHz, AP height 15 m, user height 1.65 m
};

inline double path_loss_db(double distance_m, const PathLossModel& model = {}) {
  const double d1_km = model.d1_m / 1000.0;
  const double d_km = std::max(distance_m, model.d0_m) / 1000.0;
  if (distance_m > model.d1_m) return -model.loss_db - 35.0 * std::log10(d_km);
  return -model.loss_db - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d_km);
}

/// Independent uniform positions over the configured rectangle. APs are drawn
/// first, then users, from the same stream.
inline Layout place_uniform(const SystemConfig& config, Rng& rng) {
  if (config.M < 1 || config.K < 1) throw DomainError("place_uniform: need M, K >= 1");
  std::uniform_real_distribution<double> ux(0.0, config.area_m.first);
  std::uniform_real_distribution<double> uy(0.0, config.area_m.second);
  Layout layout;
  layout.width_m = config.area_m.first;
  layout.height_m = config.area_m.second;
  layout.ap_positions.reserve(config.M);
  layout.user_positions.reserve(config.K);
  for (int m = 0; m < config.M; ++m) layout.ap_positions.push_back({ux(rng), uy(rng)});
  for (int k = 0; k < config.K; ++k) layout.user_positions.push_back({ux(rng), uy(rng)});
  return layout;
}

/// Path loss plus Gaussian shadowing in dB, shadowing only beyond d1.
inline Eigen::MatrixXd large_scale_db(const Layout& layout, double shadow_sigma_db, Rng& rng,
                                      const PathLossModel& model = {}) {
  if (!(shadow_sigma_db >= 0.0)) throw DomainError("large_scale_db: sigma must be >= 0");
  const int M = layout.num_aps();
  const int K = layout.num_users();
  Eigen::MatrixXd out(M, K);
  std::normal_distribution<double> shadow(0.0, 1.0);
  // User-major order: adding users leaves the draws of existing users as they
  // were. A draw is consumed for every link, shadowed or not.
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) {
      const double d = distance(layout.ap_positions[m], layout.user_positions[k]);
      const double z = shadow(rng);
      out(m, k) = path_loss_db(d, model) + (d > model.d1_m ? shadow_sigma_db * z : 0.0);
    }
  }
  return out;
}

inline double noise_power_dbm(double noise_density_dbm_hz, double bandwidth_hz,
                              double noise_figure_db) {
  if (!(bandwidth_hz > 0.0)) throw DomainError("noise_power_dbm: bandwidth must be positive");
  return noise_density_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

/// Linear gains divided by the total noise power (dBm), so that downstream
/// noise variance is exactly 1 when transmit powers are expressed in mW.
inline Eigen::MatrixXd to_linear_normalized(const Eigen::MatrixXd& beta_db, double noise_dbm) {
  return ((beta_db.array() - noise_dbm) / 10.0).unaryExpr([](double v) {
    return std::pow(10.0, v);
  });
}

inline Eigen::MatrixXd to_linear_normalized(const Eigen::MatrixXd& beta_db,
                                            double noise_density_dbm_hz, double bandwidth_hz,
                                            double noise_figure_db) {
  return to_linear_normalized(beta_db,
                              noise_power_dbm(noise_density_dbm_hz, bandwidth_hz, noise_figure_db));
}

}  // namespace cfmimo
