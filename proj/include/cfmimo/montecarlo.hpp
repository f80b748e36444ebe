#pragma once

// Per-realization SINR evaluation in seeded parallel batches, with the
// empirical statistics used to check the analytic engine.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/geometry.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

/// Per-user outcome of one realization.
struct SinrRealization {
  Eigen::VectorXd ds;    // rho_d U1
  Eigen::VectorXd in_;   // rho_d (sum_{k1 != k} U2 + sum_k1 U3) + noise
  Eigen::VectorXd sinr;
  Eigen::MatrixXcd signal_gain;  // (k, k1): sum_m sqrt(eta_mk1) h_hat_mk^H b_mk1
  Eigen::MatrixXcd error_gain;   // (k, k1): sum_m sqrt(eta_mk1) h_err_mk^H b_mk1
};

/// noise holds the per-user additive noise power (1 for the unit-power model,
/// |z_k|^2 draws for the sampled model). Empty means all ones.
inline SinrRealization realize_sinr(const ChannelRealization& real, const PrecoderSet& prec,
                                    const LargeScaleModel& lsm, double rho_d,
                                    std::span<const double> noise = {}) {
  const int M = static_cast<int>(prec.vectors.size());
  const int K = lsm.num_users();
  if (static_cast<int>(real.est_h.size()) != M || static_cast<int>(real.err_h.size()) != M) {
    throw DomainError("realize_sinr: realization and precoders disagree on AP count");
  }
  if (!noise.empty() && static_cast<int>(noise.size()) != K) {
    throw DomainError("realize_sinr: noise vector must have one entry per user");
  }
  SinrRealization out;
  // Stack the per-AP blocks so each gain matrix is one K x (M N) x K product.
  const Eigen::Index N = M > 0 ? prec.vectors[0].rows() : 0;
  Eigen::MatrixXcd est(M * N, K), err(M * N, K), weighted(M * N, K);
  for (int m = 0; m < M; ++m) {
    est.middleRows(m * N, N) = real.est_h[m];
    err.middleRows(m * N, N) = real.err_h[m];
    weighted.middleRows(m * N, N) = prec.vectors[m] * lsm.eta.row(m).cwiseSqrt().asDiagonal();
  }
  out.signal_gain.noalias() = est.adjoint() * weighted;
  out.error_gain.noalias() = err.adjoint() * weighted;
  const Eigen::MatrixXd u2 = out.signal_gain.cwiseAbs2();
  const Eigen::MatrixXd u3 = out.error_gain.cwiseAbs2();
  out.ds.resize(K);
  out.in_.resize(K);
  out.sinr.resize(K);
  for (int k = 0; k < K; ++k) {
    const double u1 = u2(k, k);
    const double interference = u2.row(k).sum() - u1 + u3.row(k).sum();
    out.ds(k) = rho_d * u1;
    out.in_(k) = rho_d * interference + (noise.empty() ? 1.0 : noise[k]);
    out.sinr(k) = out.ds(k) / out.in_(k);
  }
  return out;
}

/// Largest |Im| / |.| of the co-pilot signal gains, which are real and
/// positive in exact arithmetic because co-pilot estimates are parallel.
inline double copilot_imaginary_residual(const SinrRealization& s, const LargeScaleModel& lsm) {
  double worst = 0.0;
  for (int k = 0; k < lsm.num_users(); ++k) {
    for (int k1 : lsm.copilot_sets[k]) {
      const auto g = s.signal_gain(k, k1);
      if (std::abs(g) > 0.0) worst = std::max(worst, std::fabs(g.imag()) / std::abs(g));
    }
  }
  return worst;
}

struct BatchSpec {
  Scheme scheme = Scheme::kMrt;
  int N = 2;
  int realizations = 1000;
  std::uint64_t seed = 1;
  double rho_d = 1.0;
  NoiseModel noise_model = NoiseModel::kUnitPower;
  unsigned threads = 0;  // 0 selects std::thread::hardware_concurrency()
};

inline BatchSpec batch_spec_from(const SystemConfig& cfg, unsigned threads = 0) {
  return BatchSpec{cfg.scheme, cfg.N, cfg.realizations, cfg.seed, cfg.rho_d(), cfg.noise_model,
                   threads};
}

/// Samples for every user, indexed [k][r]. Realization r always uses stream
/// (seed, kRealization, r); the result is independent of thread count.
struct SinrSamples {
  Scheme scheme = Scheme::kMrt;
  int realizations = 0;
  std::vector<std::vector<double>> ds;
  std::vector<std::vector<double>> in_;
  std::vector<std::vector<double>> sinr;
  double max_copilot_imaginary_residual = 0.0;
  Eigen::VectorXd mean_ap_power;  // per-AP diagnostic, averaged over realizations
};

inline SinrSamples run_batch(const LargeScaleModel& lsm, const BatchSpec& spec) {
  if (spec.realizations < 1) throw DomainError("run_batch: need at least one realization");
  const int K = lsm.num_users();
  const int M = lsm.num_aps();
  const int R = spec.realizations;
  const PilotSet pilots = PilotSet::dft(lsm.l_p);

  SinrSamples out;
  out.scheme = spec.scheme;
  out.realizations = R;
  out.ds.assign(K, std::vector<double>(R));
  out.in_.assign(K, std::vector<double>(R));
  out.sinr.assign(K, std::vector<double>(R));

  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  // Work is cut into fixed blocks whose reductions are combined in block
  // order, so every output, including the floating-point averages, is the
  // same for any thread count.
  constexpr int kBlock = 64;
  const int blocks = (R + kBlock - 1) / kBlock;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(blocks));
  std::vector<double> residual(blocks, 0.0);
  std::vector<Eigen::VectorXd> power(blocks, Eigen::VectorXd::Zero(M));

  auto run_block = [&](int b) {
    std::vector<double> noise(K, 1.0);
    const int end = std::min(R, (b + 1) * kBlock);
    for (int r = b * kBlock; r < end; ++r) {
      Rng rng = make_stream(spec.seed, StreamTag::kRealization, static_cast<std::uint64_t>(r));
      const ChannelRealization real = draw_realization(lsm, pilots, spec.N, rng);
      const PrecoderSet prec = make_precoders(spec.scheme, real, lsm);
      if (spec.noise_model == NoiseModel::kSampledPower) {
        ComplexNormal z(1.0);
        for (auto& v : noise) v = std::norm(z(rng));
      }
      const SinrRealization s = realize_sinr(real, prec, lsm, spec.rho_d, noise);
      for (int k = 0; k < K; ++k) {
        out.ds[k][r] = s.ds(k);
        out.in_[k][r] = s.in_(k);
        out.sinr[k][r] = s.sinr(k);
      }
      residual[b] = std::max(residual[b], copilot_imaginary_residual(s, lsm));
      power[b] += ap_transmit_power(prec, lsm, spec.rho_d);
    }
  };

  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int b = static_cast<int>(t); b < blocks; b += static_cast<int>(threads)) run_block(b);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.max_copilot_imaginary_residual = *std::max_element(residual.begin(), residual.end());
  out.mean_ap_power = Eigen::VectorXd::Zero(M);
  for (const auto& p : power) out.mean_ap_power += p;
  out.mean_ap_power /= static_cast<double>(R);
  return out;
}

/// Right-continuous empirical CDF.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> samples) : values_(std::move(samples)) {
    if (values_.empty()) throw DomainError("Ecdf: empty sample");
    for (double v : values_) {
      if (std::isnan(v)) throw DomainError("Ecdf: NaN sample");
    }
    std::sort(values_.begin(), values_.end());
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& sorted() const { return values_; }

  /// Fraction of samples <= x.
  double operator()(double x) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
  }

  /// Fraction of samples < x.
  double left_limit(double x) const {
    const auto it = std::lower_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
  }

  /// Empirical p-quantile (inverse of the step function).
  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("Ecdf::quantile: p outside [0, 1]");
    const double n = static_cast<double>(values_.size());
    const auto idx = static_cast<std::size_t>(std::clamp(std::ceil(p * n) - 1.0, 0.0, n - 1.0));
    return values_[idx];
  }

 private:
  std::vector<double> values_;
};

/// sup_x |ECDF(x) - cdf(x)|. Each distinct sample value is checked on both
/// sides of its step, with cdf's left limit taken one ulp below.
inline double ks_distance(const Ecdf& e, const std::function<double(double)>& cdf) {
  const auto& v = e.sorted();
  const double n = static_cast<double>(v.size());
  double worst = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double x = v[i];
    const double below = static_cast<double>(i) / n;
    const double at = static_cast<double>(j) / n;
    const double f_left = cdf(std::nextafter(x, -std::numeric_limits<double>::infinity()));
    const double f_at = cdf(x);
    worst = std::max({worst, std::fabs(below - f_left), std::fabs(at - f_at)});
    i = j;
  }
  return worst;
}

struct SampleMoments {
  double mean = 0.0;
  double mean_se = 0.0;
  double second = 0.0;
  double second_se = 0.0;
};

/// First and second raw moments with standard errors of the sample means.
inline SampleMoments sample_moments(std::span<const double> x) {
  if (x.empty()) throw DomainError("sample_moments: empty sample");
  const double n = static_cast<double>(x.size());
  // Shifted accumulation keeps the variances accurate for large means.
  const double shift = x[0];
  const double shift2 = x[0] * x[0];
  double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
  for (double v : x) {
    const double d1 = v - shift;
    const double d2 = v * v - shift2;
    s1 += d1;
    q1 += d1 * d1;
    s2 += d2;
    q2 += d2 * d2;
  }
  SampleMoments out;
  out.mean = shift + s1 / n;
  out.second = shift2 + s2 / n;
  const double denom = x.size() > 1 ? n - 1.0 : 1.0;
  const double var1 = std::max(0.0, (q1 - s1 * s1 / n) / denom);
  const double var2 = std::max(0.0, (q2 - s2 * s2 / n) / denom);
  out.mean_se = std::sqrt(var1 / n);
  out.second_se = std::sqrt(var2 / n);
  return out;
}

struct EstimateWithError {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Mean of log2(1 + sinr) with its standard error.
inline EstimateWithError empirical_rate(std::span<const double> sinr) {
  if (sinr.empty()) throw DomainError("empirical_rate: empty sample");
  std::vector<double> r(sinr.size());
  std::transform(sinr.begin(), sinr.end(), r.begin(), [](double g) { return std::log2(1.0 + g); });
  const auto m = sample_moments(r);
  return {m.mean, m.mean_se};
}

/// Fraction of samples with log2(1 + sinr) <= r; the boundary is an outage.
inline double empirical_outage(std::span<const double> sinr, double rate_threshold) {
  if (sinr.empty()) throw DomainError("empirical_outage: empty sample");
  const auto hits = std::count_if(sinr.begin(), sinr.end(), [&](double g) {
    return std::log2(1.0 + g) <= rate_threshold;
  });
  return static_cast<double>(hits) / static_cast<double>(sinr.size());
}

}  // namespace cfmimo
