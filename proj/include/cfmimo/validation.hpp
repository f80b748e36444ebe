#pragma once

// Acceptance suite: each criterion returns a pass/fail verdict together with
// the measured values it was judged on. Failures are data, not exceptions.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <boost/random/exponential_distribution.hpp>

#include "cfmimo/distributions.hpp"
#include "cfmimo/experiment.hpp"
#include "cfmimo/moments.hpp"
#include "cfmimo/montecarlo.hpp"
#include "cfmimo/specfun.hpp"

namespace cfmimo {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  Json measured;
  std::string detail;
  double runtime_seconds = 0.0;

  Json to_json() const {
    Json j;
    j["id"] = id;
    j["name"] = name;
    j["passed"] = passed;
    j["measured"] = measured;
    j["detail"] = detail;
    j["runtime_seconds"] = runtime_seconds;
    return j;
  }
};

struct ValidationOptions {
  SystemConfig mrt = reference_mrt_config();
  SystemConfig fzf = reference_fzf_config();
  int moment_realizations = 100'000;
  int distribution_realizations = 10'000;
  long long oracle_draws = 10'000'000;
  int exactness_realizations = 100;
  int determinism_realizations = 1'024;
  unsigned threads = 0;

  /// Both schemes on the geometry of cfg. The scheme cfg does not use gets
  /// N = 2 (MRT) or N = l_p + 1 (FZF). Sample sizes scale with
  /// cfg.realizations; the defaults correspond to 10^4.
  static ValidationOptions for_scenario(const SystemConfig& cfg, unsigned threads = 0) {
    cfg.validate();
    ValidationOptions o;
    o.mrt = cfg;
    o.mrt.scheme = Scheme::kMrt;
    if (cfg.scheme != Scheme::kMrt) o.mrt.N = 2;
    o.fzf = cfg;
    o.fzf.scheme = Scheme::kFzf;
    if (cfg.scheme != Scheme::kFzf) o.fzf.N = cfg.l_p + 1;
    const int R = cfg.realizations;
    o.moment_realizations = 10 * R;
    o.distribution_realizations = R;
    o.oracle_draws = 1000LL * R;
    o.exactness_realizations = std::min(100, R);
    o.determinism_realizations = std::min(1'024, R);
    o.threads = threads;
    return o;
  }
};

/// KS threshold for the distribution criterion, loosened for small K.
inline double ks_threshold(Scheme scheme, int K) {
  if (K <= 10) return scheme == Scheme::kMrt ? 0.08 : 0.05;
  return scheme == Scheme::kMrt ? 0.05 : 0.03;
}

namespace detail {

struct SimulatedScenario {
  SystemConfig cfg;
  Deployment dep;
  SinrSamples samples;
};

// Simulations shared between criteria, keyed by their configuration.
class SimulationCache {
 public:
  explicit SimulationCache(unsigned threads) : threads_(threads) {}

  const SimulatedScenario& get(const SystemConfig& cfg) {
    const std::string key = config_to_json(cfg).dump();
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      auto sim = std::make_unique<SimulatedScenario>();
      sim->cfg = cfg;
      sim->dep = make_deployment(cfg);
      sim->samples = run_batch(sim->dep.lsm, batch_spec_from(cfg, threads_));
      it = cache_.emplace(key, std::move(sim)).first;
    }
    return *it->second;
  }

 private:
  unsigned threads_;
  std::map<std::string, std::unique_ptr<SimulatedScenario>> cache_;
};

inline SystemConfig with_realizations(SystemConfig cfg, int R) {
  cfg.realizations = R;
  return cfg;
}

inline SystemConfig with_users(SystemConfig cfg, int K) {
  cfg.K = K;
  cfg.l_p = std::min(cfg.l_p, K);
  cfg.focus_user.reset();
  return cfg;
}

inline Json z_entry(double analytic, double sample, double se) {
  Json j;
  j["analytic"] = analytic;
  j["sample"] = sample;
  j["standard_error"] = se;
  j["z"] = se > 0.0 ? (sample - analytic) / se : (sample == analytic ? 0.0 : HUGE_VAL);
  return j;
}

inline bool within_z(const Json& e, double limit) { return std::fabs(e["z"].get<double>()) <= limit; }

template <class F>
CriterionResult timed(int id, std::string name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1. Moments of DS and IN against a long simulation of one deployment.

inline CriterionResult check_moments(const ValidationOptions& opt, detail::SimulationCache& cache) {
  return detail::timed(1, "MRT DS and IN moments vs simulation", [&](CriterionResult& r) {
    const SystemConfig cfg = detail::with_realizations(opt.mrt, opt.moment_realizations);
    const auto& sim = cache.get(cfg);
    const int k = sim.dep.focus_user;
    const double rho = cfg.rho_d();
    const auto ds = sample_moments(sim.samples.ds[k]);
    const auto in = sample_moments(sim.samples.in_[k]);
    const MomentPair ds_a = ds_moments_mrt(sim.dep.lsm, k, cfg.N, rho);
    const MomentPair in_a = in_moments_mrt(sim.dep.lsm, k, cfg.N, rho, cfg.noise_model);
    r.measured["focus_user"] = k;
    r.measured["realizations"] = cfg.realizations;
    r.measured["ds_m1"] = detail::z_entry(ds_a.m1, ds.mean, ds.mean_se);
    r.measured["ds_m2"] = detail::z_entry(ds_a.m2, ds.second, ds.second_se);
    r.measured["in_m1"] = detail::z_entry(in_a.m1, in.mean, in.mean_se);
    r.measured["in_m2"] = detail::z_entry(in_a.m2, in.second, in.second_se);
    r.passed = true;
    for (const char* key : {"ds_m1", "ds_m2", "in_m1", "in_m2"}) {
      r.passed = r.passed && detail::within_z(r.measured[key], 3.0);
    }
    r.detail = "each |z| <= 3";
  });
}

// ---------------------------------------------------------------------------
// 2. Closed-form moment operations against direct sampling of the per-AP
//    terms on small instances.

namespace detail {

// Running sums of x^1 .. x^8, enough for the first four raw moments and the
// standard errors of each.
struct PowerSums {
  std::array<double, 8> s{};
  long long n = 0;

  void add(double x) {
    double p = 1.0;
    for (double& v : s) {
      p *= x;
      v += p;
    }
    ++n;
  }
  double moment(int p) const { return s[p - 1] / static_cast<double>(n); }
  double moment_se(int p) const {
    const double mean = moment(p);
    const double var = std::max(0.0, moment(2 * p) - mean * mean);
    return std::sqrt(var / static_cast<double>(n));
  }
};

// Synthetic large-scale model with gains drawn once from a fixed stream.
inline LargeScaleModel oracle_model(int M, int K, int l_p, std::uint64_t seed) {
  Rng rng = make_stream(seed, StreamTag::kOracle, static_cast<std::uint64_t>(M * 100 + K * 10 + l_p));
  std::uniform_real_distribution<double> gain(0.3, 3.0);
  Eigen::MatrixXd beta(M, K);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) beta(m, k) = gain(rng);
  }
  LargeScaleModel lsm = make_large_scale_model(beta, assign_pilots(K, l_p), 1.0);
  lsm.eta = power_allocation_heuristic(lsm);
  return lsm;
}

struct OracleOutcome {
  Json checks = Json::array();
  int failures = 0;
  double worst_z = 0.0;
  Json informational = Json::array();
};

inline void oracle_check(OracleOutcome& out, const std::string& what, double analytic,
                         double sample, double se, double limit) {
  Json e = z_entry(analytic, sample, se);
  const double z = std::fabs(e["z"].get<double>());
  out.worst_z = std::max(out.worst_z, z);
  if (z > limit) {
    ++out.failures;
    e["what"] = what;
    out.checks.push_back(std::move(e));
  }
}

// One instance: per draw, every xi / psi / noise term is sampled afresh
// from its exact law, independently of all others:
//   co-pilot xi     = sqrt(eta c / N) G,            G ~ Gamma(N, 1)
//   other-pilot xi  = sqrt(eta c G / N) w,          w ~ CN(0, 1)
//   psi (MRT)       = sqrt(eta (beta - c) G / N) w
//   psi (FZF exact) = sqrt(eta (beta - c) d / X) w, X ~ Gamma(d + 1, 1), d = N - l_p
//   noise           = |z|^2,                        z ~ CN(0, 1)
inline void oracle_instance(int M, int K, int N, int l_p, long long draws, std::uint64_t seed,
                            OracleOutcome& out) {
  const LargeScaleModel lsm = oracle_model(M, K, l_p, seed);
  const double rho = 1.0;
  const bool fzf_valid = N >= l_p + 1;
  const int dof = N - l_p;
  Rng rng = make_stream(seed, StreamTag::kOracle,
                        0x100000ULL + static_cast<std::uint64_t>(M * 100 + K * 10 + N) * 8 + l_p);
  boost::random::exponential_distribution<double> expo(1.0);
  ComplexNormal cn(1.0);
  const auto gamma_int = [&](int shape) {
    double g = 0.0;
    for (int i = 0; i < shape; ++i) g += expo(rng);
    return g;
  };

  std::vector<PowerSums> xi(M * K), u1(K), u2(K * K), u3(K * K), in_mrt(K), in_fzf(K),
      in_fzf_exact(K);
  std::vector<double> u2_fzf_value(K);
  for (int k = 0; k < K; ++k) u2_fzf_value[k] = fzf_valid ? u2_fzf(lsm, k, N, rho) : 0.0;

  std::vector<double> u2v(K * K), u3v(K * K), u3x(K * K);
  for (long long d = 0; d < draws; ++d) {
    for (int k = 0; k < K; ++k) {
      for (int k1 = 0; k1 < K; ++k1) {
        std::complex<double> s2 = 0.0, s3 = 0.0, s3x = 0.0;
        const bool co = lsm.shares_pilot(k, k1);
        for (int m = 0; m < M; ++m) {
          const double ec = lsm.eta(m, k1) * lsm.c(m, k);
          const double ee = lsm.eta(m, k1) * std::max(0.0, lsm.beta(m, k) - lsm.c(m, k));
          if (co) {
            const double x = std::sqrt(ec / N) * gamma_int(N);
            s2 += x;
            if (k1 == k) xi[m * K + k].add(x);
          } else {
            s2 += std::sqrt(ec * gamma_int(N) / N) * cn(rng);
          }
          s3 += std::sqrt(ee * gamma_int(N) / N) * cn(rng);
          if (fzf_valid) s3x += std::sqrt(ee * dof / gamma_int(dof + 1)) * cn(rng);
        }
        u2v[k * K + k1] = std::norm(s2);
        u3v[k * K + k1] = std::norm(s3);
        u3x[k * K + k1] = std::norm(s3x);
        if (k1 != k) u2[k * K + k1].add(u2v[k * K + k1]);
        u3[k * K + k1].add(u3v[k * K + k1]);
      }
      u1[k].add(u2v[k * K + k]);
      double a = 0.0, b = 0.0, bx = 0.0;
      for (int k1 = 0; k1 < K; ++k1) {
        if (k1 != k) a += u2v[k * K + k1];
        b += u3v[k * K + k1];
        bx += u3x[k * K + k1];
      }
      const double z1 = std::norm(cn(rng));
      in_mrt[k].add(rho * (a + b) + z1);
      if (fzf_valid) {
        in_fzf[k].add(u2_fzf_value[k] + rho * b + z1);
        in_fzf_exact[k].add(u2_fzf_value[k] + rho * bx + z1);
      }
    }
  }

  const double limit = 4.0;
  const std::string tag = "M" + std::to_string(M) + " K" + std::to_string(K) + " N" +
                          std::to_string(N) + " lp" + std::to_string(l_p);
  const auto pair_check = [&](const std::string& what, const MomentPair& a, const PowerSums& s) {
    oracle_check(out, tag + " " + what + " m1", a.m1, s.moment(1), s.moment_se(1), limit);
    oracle_check(out, tag + " " + what + " m2", a.m2, s.moment(2), s.moment_se(2), limit);
  };
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) {
      const RawMoments4 e = xi_moments_mrt(lsm.eta(m, k), lsm.c(m, k), N);
      const PowerSums& s = xi[m * K + k];
      for (int p = 1; p <= 4; ++p) {
        oracle_check(out, tag + " xi m" + std::to_string(m) + "k" + std::to_string(k) + " E^" +
                              std::to_string(p),
                     e[p - 1], s.moment(p), s.moment_se(p), limit);
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    pair_check("U1 k" + std::to_string(k), u1_moments_mrt(lsm, k, N), u1[k]);
    for (int k1 = 0; k1 < K; ++k1) {
      const std::string idx = " k" + std::to_string(k) + "k1" + std::to_string(k1);
      if (k1 != k) {
        const MomentPair a = lsm.shares_pilot(k, k1) ? u2_moments_same_pilot(lsm, k, k1, N)
                                                     : u2_moments_diff_pilot(lsm, k, k1, N);
        pair_check("U2" + idx, a, u2[k * K + k1]);
      }
      pair_check("U3" + idx, u3_moments(lsm, k, k1, N, Scheme::kMrt), u3[k * K + k1]);
    }
    pair_check("IN mrt k" + std::to_string(k),
               in_moments_mrt(lsm, k, N, rho, NoiseModel::kSampledPower), in_mrt[k]);
    if (fzf_valid) {
      pair_check("IN fzf k" + std::to_string(k),
                 in_moments_fzf(lsm, k, N, rho, NoiseModel::kSampledPower), in_fzf[k]);
      const MomentPair a = in_moments_fzf(lsm, k, N, rho, NoiseModel::kSampledPower);
      Json info;
      info["instance"] = tag;
      info["user"] = k;
      info["analytic_m2"] = a.m2;
      info["sample_m2_exact_fzf_law"] = in_fzf_exact[k].moment(2);
      info["fourth_moment_factor_exact"] = fzf_error_fourth_moment_factor(N, l_p);
      info["fourth_moment_factor_used"] = 2.0 * (N + 1.0) / N;
      out.informational.push_back(std::move(info));
    }
  }
}

}  // namespace detail

inline CriterionResult check_brute_force_oracle(const ValidationOptions& opt) {
  return detail::timed(2, "small-instance sampling oracle and power-sum identity",
                       [&](CriterionResult& r) {
    detail::OracleOutcome out;
    int instances = 0;
    for (int M = 1; M <= 3; ++M) {
      for (int K = 1; K <= 3; ++K) {
        for (int N = 1; N <= 2; ++N) {
          for (int l_p = 1; l_p <= std::min(2, K); ++l_p) {
            detail::oracle_instance(M, K, N, l_p, opt.oracle_draws, opt.mrt.seed, out);
            ++instances;
          }
        }
      }
    }
    // Fast and naive evaluations of E{S^2}, E{S^4} on random moment sets.
    Rng rng = make_stream(opt.mrt.seed, StreamTag::kOracle, 7);
    std::uniform_real_distribution<double> u(0.05, 4.0);
    std::uniform_int_distribution<int> antennas(1, 8);
    double worst_rel = 0.0;
    for (int M = 1; M <= 20; ++M) {
      std::vector<RawMoments4> terms(M);
      for (auto& t : terms) t = xi_moments_mrt(u(rng), u(rng), antennas(rng));
      const MomentPair fast = real_sum_square_moments(terms);
      const MomentPair naive = real_sum_square_moments_naive(terms);
      worst_rel = std::max({worst_rel, std::fabs(fast.m1 - naive.m1) / std::fabs(naive.m1),
                            std::fabs(fast.m2 - naive.m2) / std::fabs(naive.m2)});
    }
    r.measured["instances"] = instances;
    r.measured["draws_per_instance"] = opt.oracle_draws;
    r.measured["failures"] = out.failures;
    r.measured["worst_abs_z"] = out.worst_z;
    r.measured["failed_checks"] = out.checks;
    r.measured["power_sum_worst_relative_difference"] = worst_rel;
    r.measured["fzf_exact_law_informational"] = out.informational;
    r.passed = out.failures == 0 && worst_rel <= 1e-12;
    r.detail = "every operation within 4 SE; fast vs naive power sums <= 1e-12 relative. "
               "FZF IN is sampled with the fourth-moment factor the closed form assumes; "
               "samples under the exact FZF precoder law are listed for reference only";
  });
}

// ---------------------------------------------------------------------------
// 3. FZF per-realization exactness.

inline CriterionResult check_fzf_exactness(const ValidationOptions& opt) {
  return detail::timed(3, "FZF DS and cross-gain exactness", [&](CriterionResult& r) {
    const SystemConfig& cfg = opt.fzf;
    const Deployment dep = make_deployment(cfg);
    const LargeScaleModel& lsm = dep.lsm;
    const PilotSet pilots = PilotSet::dft(lsm.l_p);
    const int K = lsm.num_users();
    const int M = lsm.num_aps();
    const double rho = cfg.rho_d();
    double worst_ds = 0.0, worst_cross = 0.0;
    for (int t = 0; t < opt.exactness_realizations; ++t) {
      Rng rng = make_stream(cfg.seed, StreamTag::kRealization, static_cast<std::uint64_t>(t));
      const ChannelRealization real = draw_realization(lsm, pilots, cfg.N, rng);
      const PrecoderSet prec = fzf_precoders(real, lsm);
      const SinrRealization s = realize_sinr(real, prec, lsm, rho);
      for (int k = 0; k < K; ++k) {
        const double expected = ds_fzf(lsm, k, cfg.N, rho);
        worst_ds = std::max(worst_ds, std::fabs(s.ds(k) - expected) / expected);
      }
      for (int m = 0; m < M; ++m) {
        const Eigen::MatrixXcd g = real.est_h[m].adjoint() * prec.vectors[m];
        for (int k = 0; k < K; ++k) {
          const double scale = std::sqrt((cfg.N - lsm.l_p) * lsm.c(m, k));
          if (!(scale > 0.0)) continue;
          for (int k1 = 0; k1 < K; ++k1) {
            const double alpha = fzf_alpha(lsm, k, k1, m, cfg.N);
            worst_cross = std::max(worst_cross, std::abs(g(k, k1) - alpha) / scale);
          }
        }
      }
    }
    r.measured["realizations"] = opt.exactness_realizations;
    r.measured["worst_ds_relative_error"] = worst_ds;
    r.measured["worst_cross_gain_relative_error"] = worst_cross;
    r.passed = worst_ds <= 1e-9 && worst_cross <= 1e-9;
    r.detail = "both <= 1e-9; cross gains relative to sqrt((N - l_p) c_mk)";
  });
}

// ---------------------------------------------------------------------------
// 4. KS distance between simulated and analytic SINR laws.

inline CriterionResult check_distribution_agreement(const ValidationOptions& opt,
                                                    detail::SimulationCache& cache) {
  return detail::timed(4, "SINR ECDF vs analytic CDF (KS)", [&](CriterionResult& r) {
    r.passed = true;
    Json cases = Json::array();
    for (const SystemConfig* base : {&opt.mrt, &opt.fzf}) {
      std::vector<int> users{base->K};
      if (base->K > 10) users.push_back(10);
      for (int K : users) {
        const SystemConfig cfg = detail::with_realizations(
            K == base->K ? *base : detail::with_users(*base, K), opt.distribution_realizations);
        const auto& sim = cache.get(cfg);
        const int k = sim.dep.focus_user;
        const auto model = make_model(cfg.scheme, sim.dep.lsm, k, cfg.N, cfg.rho_d(), cfg.noise_model);
        const double ks =
            ks_distance(Ecdf(sim.samples.sinr[k]), [&](double x) { return sinr_cdf(model, x); });
        const double limit = ks_threshold(cfg.scheme, K);
        Json c;
        c["scheme"] = to_string(cfg.scheme);
        c["K"] = K;
        c["N"] = cfg.N;
        c["focus_user"] = k;
        c["ks"] = ks;
        c["threshold"] = limit;
        c["passed"] = ks <= limit;
        r.passed = r.passed && ks <= limit;
        cases.push_back(std::move(c));
      }
    }
    r.measured["realizations"] = opt.distribution_realizations;
    r.measured["cases"] = std::move(cases);
    r.detail = "KS <= 0.05 (MRT) / 0.03 (FZF), or 0.08 / 0.05 when K <= 10";
  });
}

// ---------------------------------------------------------------------------
// 5. CDF consistency: MRT CDF vs the ratio integral, FZF CDF vs the Gamma
//    survival identity.

/// P{DS <= x IN} = int F_DS(x t) f_IN(t) dt, integrated after t = theta2 w^(1/j2),
/// which turns f_IN(t) dt into exp(-t / theta2) / Gamma(j2 + 1) dw and removes
/// the t^(j2 - 1) singularity at the origin.
inline double mrt_cdf_ratio_integral(const SinrDistributionModel& model, double x) {
  const GammaParams& ds = model.ds_params;
  const GammaParams& in = model.in_params;
  const double norm = std::exp(-ln_gamma(in.shape + 1.0));
  const auto f = [&](double w) {
    const double t = in.scale * std::pow(w, 1.0 / in.shape);
    return gamma_cdf(ds, x * t) * std::exp(-t / in.scale) * norm;
  };
  QuadratureSpec spec;
  spec.relative_tolerance = 1e-12;
  spec.absolute_tolerance = 1e-13;
  spec.max_subdivisions = 20'000;
  return integrate_semi_infinite(f, spec, 1.0);
}

inline CriterionResult check_cdf_consistency(const ValidationOptions& opt) {
  return detail::timed(5, "closed-form CDFs vs proof integral and survival identity",
                       [&](CriterionResult& r) {
    double worst_mrt = 0.0, worst_fzf = 0.0;
    int evaluated = 0;
    {
      const Deployment dep = make_deployment(opt.mrt);
      for (int k = 0; k < opt.mrt.K; ++k) {
        const auto model = mrt_model(dep.lsm, k, opt.mrt.N, opt.mrt.rho_d(), opt.mrt.noise_model);
        for (int i = 0; i < 20; ++i) {
          const double x = sinr_quantile(model, (i + 0.5) / 20.0);
          worst_mrt = std::max(worst_mrt, std::fabs(sinr_cdf(model, x) - mrt_cdf_ratio_integral(model, x)));
          ++evaluated;
        }
      }
    }
    {
      const Deployment dep = make_deployment(opt.fzf);
      for (int k = 0; k < opt.fzf.K; ++k) {
        const auto model = fzf_model(dep.lsm, k, opt.fzf.N, opt.fzf.rho_d(), opt.fzf.noise_model);
        for (int i = 0; i < 20; ++i) {
          const double x = sinr_quantile(model, (i + 0.5) / 20.0);
          const double identity =
              1.0 - reg_lower_incomplete_gamma(model.in_params.shape,
                                               model.ds_value / (x * model.in_params.scale));
          worst_fzf = std::max(worst_fzf, std::fabs(sinr_cdf(model, x) - identity));
        }
      }
    }
    r.measured["grid_points_per_user"] = 20;
    r.measured["mrt_points"] = evaluated;
    r.measured["mrt_worst_abs_difference"] = worst_mrt;
    r.measured["fzf_worst_abs_difference"] = worst_fzf;
    r.passed = worst_mrt <= 1e-7 && worst_fzf <= 1e-12;
    r.detail = "MRT <= 1e-7 on the 20 analytic quantiles of every user; FZF <= 1e-12";
  });
}

// ---------------------------------------------------------------------------
// 6. Rates: the closed forms are checked against quadrature, which is in
//    turn checked against simulation and the lower bound.

/// Models spanning the region where the closed forms converge.
inline std::vector<SinrDistributionModel> closed_form_test_models() {
  std::vector<SinrDistributionModel> out;
  for (double j1 : {0.6, 1.3, 2.7, 5.2}) {
    for (double j2 : {0.45, 1.55, 2.35, 4.8, 9.3}) {
      for (double s : {0.02, 0.2, 0.6, 0.92}) {
        SinrDistributionModel m;
        m.scheme = Scheme::kMrt;
        m.in_params = {j2, 1.0};
        m.ds_params = {j1, s};
        out.push_back(m);
      }
    }
  }
  for (double j2 : {0.45, 1.55, 2.35, 4.8, 9.3, 17.6}) {
    for (double u : {0.05, 0.8, 4.0, 12.0}) {
      SinrDistributionModel m;
      m.scheme = Scheme::kFzf;
      m.in_params = {j2, 1.0};
      m.ds_value = u;
      out.push_back(m);
    }
  }
  return out;
}

inline CriterionResult check_rates(const ValidationOptions& opt, detail::SimulationCache& cache) {
  return detail::timed(6, "rate consistency and lower-bound ordering", [&](CriterionResult& r) {
    // (a) closed form vs quadrature wherever the guards accept the closed form.
    std::vector<SinrDistributionModel> models = closed_form_test_models();
    std::map<Scheme, double> mean_gap;
    bool bound_ok = true;
    double worst_bound_margin = HUGE_VAL;
    Json sim_cases = Json::array();
    bool sim_ok = true;
    for (const SystemConfig* base : {&opt.mrt, &opt.fzf}) {
      const SystemConfig cfg = detail::with_realizations(*base, opt.distribution_realizations);
      const auto& sim = cache.get(cfg);
      double gap = 0.0;
      for (int k = 0; k < cfg.K; ++k) {
        const auto model = make_model(cfg.scheme, sim.dep.lsm, k, cfg.N, cfg.rho_d(), cfg.noise_model);
        models.push_back(model);
        const double rate = achievable_rate(model).value;
        const double bound = rate_lower_bound(sim.dep.lsm, k, cfg.N, cfg.rho_d(), cfg.scheme);
        worst_bound_margin = std::min(worst_bound_margin, rate - bound);
        bound_ok = bound_ok && rate >= bound;
        gap += rate - bound;
        if (k == sim.dep.focus_user) {
          const double quad = rate_quadrature(model);
          const auto emp = empirical_rate(sim.samples.sinr[k]);
          Json c = detail::z_entry(quad, emp.value, emp.standard_error);
          c["scheme"] = to_string(cfg.scheme);
          c["focus_user"] = k;
          sim_ok = sim_ok && detail::within_z(c, 3.0);
          sim_cases.push_back(std::move(c));
        }
      }
      mean_gap[cfg.scheme] = gap / cfg.K;
    }
    int closed_evaluated = 0;
    double worst_closed = 0.0;
    for (const auto& m : models) {
      const auto closed = rate_closed(m);
      if (!closed) continue;
      const double quad = rate_quadrature(m);
      worst_closed = std::max(worst_closed, std::fabs(*closed - quad) / std::fabs(quad));
      ++closed_evaluated;
    }
    r.measured["closed_form_models_evaluated"] = closed_evaluated;
    r.measured["closed_form_models_total"] = models.size();
    r.measured["closed_vs_quadrature_worst_relative"] = worst_closed;
    r.measured["quadrature_vs_empirical"] = std::move(sim_cases);
    r.measured["worst_rate_minus_bound"] = worst_bound_margin;
    r.measured["mean_gap_mrt"] = mean_gap[Scheme::kMrt];
    r.measured["mean_gap_fzf"] = mean_gap[Scheme::kFzf];
    const bool closed_ok = closed_evaluated > 0 && worst_closed <= 1e-6;
    const bool gap_ok = mean_gap[Scheme::kFzf] < mean_gap[Scheme::kMrt];
    r.measured["closed_ok"] = closed_ok;
    r.measured["simulation_ok"] = sim_ok;
    r.measured["bound_ok"] = bound_ok;
    r.measured["gap_ordering_ok"] = gap_ok;
    r.passed = closed_ok && sim_ok && bound_ok && gap_ok;
    r.detail = "closed vs quadrature <= 1e-6 relative; focus-user quadrature within 3 SE of "
               "simulation; analytic rate >= bound for every user; mean FZF gap < mean MRT gap";
  });
}

// ---------------------------------------------------------------------------
// 7. Outage.

inline CriterionResult check_outage(const ValidationOptions& opt, detail::SimulationCache& cache) {
  return detail::timed(7, "outage vs simulation and monotonicity", [&](CriterionResult& r) {
    bool agree = true, mono_r = true, mono_n = true;
    Json cases = Json::array();
    for (const SystemConfig* base : {&opt.mrt, &opt.fzf}) {
      const SystemConfig cfg = detail::with_realizations(*base, opt.distribution_realizations);
      const auto& sim = cache.get(cfg);
      const int k = sim.dep.focus_user;
      const auto model = make_model(cfg.scheme, sim.dep.lsm, k, cfg.N, cfg.rho_d(), cfg.noise_model);
      const double tol = std::max(0.02, ks_threshold(cfg.scheme, cfg.K));
      for (double rate : {0.5, 1.0, 2.0}) {
        Json c;
        c["scheme"] = to_string(cfg.scheme);
        c["rate_bps_hz"] = rate;
        c["analytic"] = outage(model, rate);
        c["empirical"] = empirical_outage(sim.samples.sinr[k], rate);
        c["tolerance"] = tol;
        const double diff = std::fabs(c["analytic"].get<double>() - c["empirical"].get<double>());
        c["abs_difference"] = diff;
        agree = agree && diff <= tol;
        cases.push_back(std::move(c));
      }
      double prev = -1.0;
      for (int i = 0; i <= 80; ++i) {
        const double p = outage(model, 0.125 * i);
        mono_r = mono_r && p >= prev;
        prev = p;
      }
      // N sweep on the same deployment geometry.
      const int n0 = cfg.N;
      const std::vector<int> sweep = cfg.scheme == Scheme::kMrt
                                         ? std::vector<int>{n0, 2 * n0, 4 * n0}
                                         : std::vector<int>{n0, n0 + 1, n0 + 3};
      Json by_n = Json::array();
      std::vector<double> prev_n;
      for (int N : sweep) {
        SystemConfig c2 = cfg;
        c2.N = N;
        const Deployment dep = make_deployment(c2);
        const auto m2 = make_model(c2.scheme, dep.lsm, dep.focus_user, N, c2.rho_d(), c2.noise_model);
        std::vector<double> row;
        for (double rate : {0.5, 1.0, 2.0, 4.0}) row.push_back(outage(m2, rate));
        if (!prev_n.empty()) {
          for (std::size_t i = 0; i < row.size(); ++i) mono_n = mono_n && row[i] <= prev_n[i];
        }
        Json e;
        e["scheme"] = to_string(c2.scheme);
        e["N"] = N;
        e["outage_at_0.5_1_2_4"] = row;
        by_n.push_back(std::move(e));
        prev_n = row;
      }
      r.measured["outage_vs_N_" + to_string(cfg.scheme)] = std::move(by_n);
    }
    r.measured["agreement"] = std::move(cases);
    r.measured["agreement_ok"] = agree;
    r.measured["monotone_in_rate"] = mono_r;
    r.measured["nonincreasing_in_N"] = mono_n;
    r.passed = agree && mono_r && mono_n;
    r.detail = "|analytic - empirical| <= max(0.02, KS threshold) at r = 0.5, 1, 2; "
               "analytic outage nondecreasing in r and nonincreasing in N";
  });
}

// ---------------------------------------------------------------------------
// 8. Determinism across thread counts.

inline CriterionResult check_determinism(const ValidationOptions& opt) {
  return detail::timed(8, "identical reports on 1 and 8 threads", [&](CriterionResult& r) {
    r.passed = true;
    for (const SystemConfig* base : {&opt.mrt, &opt.fzf}) {
      const SystemConfig cfg = detail::with_realizations(*base, opt.determinism_realizations);
      const std::string one = run_scenario(cfg, 1).payload().dump();
      const std::string eight = run_scenario(cfg, 8).payload().dump();
      const bool same = one == eight;
      r.measured[to_string(cfg.scheme) + "_identical"] = same;
      r.measured[to_string(cfg.scheme) + "_payload_bytes"] = one.size();
      r.passed = r.passed && same;
    }
    r.measured["realizations"] = opt.determinism_realizations;
    r.detail = "report payloads compared byte for byte";
  });
}

// ---------------------------------------------------------------------------
// 9. Special functions.

/// 2F1 through its Euler integral, valid for c > b > 0 and z < 1; an
/// evaluation path independent of the series.
inline double gauss_2f1_euler_integral(double a, double b, double c, double z) {
  const double pref = std::exp(ln_gamma(c) - ln_gamma(b) - ln_gamma(c - b));
  const auto f = [&](double t) {
    return std::pow(t, b - 1.0) * std::pow(1.0 - t, c - b - 1.0) * std::pow(1.0 - z * t, -a);
  };
  QuadratureSpec spec;
  spec.relative_tolerance = 1e-13;
  spec.absolute_tolerance = 1e-15;
  return pref * integrate(f, 0.0, 1.0, spec);
}

/// Relative residual of the contiguous relation
///   c (c - 1) (z - 1) F(c - 1) + c (c - 1 - (2c - a - b - 1) z) F(c) + (c - a)(c - b) z F(c + 1).
inline double contiguous_residual(double a, double b, double c, double z) {
  const double t1 = c * (c - 1.0) * (z - 1.0) * gauss_2f1(a, b, c - 1.0, z);
  const double t2 = c * (c - 1.0 - (2.0 * c - a - b - 1.0) * z) * gauss_2f1(a, b, c, z);
  const double t3 = (c - a) * (c - b) * z * gauss_2f1(a, b, c + 1.0, z);
  const double scale = std::max({std::fabs(t1), std::fabs(t2), std::fabs(t3)});
  return scale > 0.0 ? std::fabs(t1 + t2 + t3) / scale : 0.0;
}

inline CriterionResult check_special_functions(const ValidationOptions&) {
  return detail::timed(9, "special-function examples and contiguous relation",
                       [&](CriterionResult& r) {
    Json examples = Json::array();
    bool ok = true;
    const auto expect = [&](const std::string& what, double got, double want, double tol) {
      const double err = std::fabs(got - want) / std::max(1.0, std::fabs(want));
      Json e;
      e["case"] = what;
      e["value"] = got;
      e["expected"] = want;
      e["error"] = err;
      e["passed"] = err <= tol;
      ok = ok && err <= tol;
      examples.push_back(std::move(e));
    };
    expect("ln_gamma(1)", ln_gamma(1.0), 0.0, 1e-12);
    expect("ln_gamma(5)", ln_gamma(5.0), std::log(24.0), 1e-12);
    expect("ln_gamma(0.5)", ln_gamma(0.5), 0.5 * std::log(std::numbers::pi), 1e-12);
    expect("P(1, 1)", reg_lower_incomplete_gamma(1.0, 1.0), 1.0 - std::exp(-1.0), 1e-10);
    expect("P(2.5, 0)", reg_lower_incomplete_gamma(2.5, 0.0), 0.0, 1e-15);
    expect("P(2, 3)", reg_lower_incomplete_gamma(2.0, 3.0), 1.0 - 4.0 * std::exp(-3.0), 1e-10);
    expect("P(3.7, 400)", reg_lower_incomplete_gamma(3.7, 400.0), 1.0, 1e-10);
    expect("2F1(0.3, 1.7; 2.2; 0)", gauss_2f1(0.3, 1.7, 2.2, 0.0), 1.0, 1e-15);
    expect("2F1(1, 1; 2; 0.5)", gauss_2f1(1.0, 1.0, 2.0, 0.5), 2.0 * std::log(2.0), 1e-9);
    expect("2F1(0.5, 1.5; 2.5; -1) vs Euler integral", gauss_2f1(0.5, 1.5, 2.5, -1.0),
           gauss_2f1_euler_integral(0.5, 1.5, 2.5, -1.0), 1e-9);
    expect("1F1(2.5; 1.5; 0)", generalized_pfq({2.5}, {1.5}, 0.0), 1.0, 1e-15);
    expect("1F1(1; 1; 1)", generalized_pfq({1.0}, {1.0}, 1.0), std::numbers::e, 1e-8);
    {
      // Explicit partial sums with two caps.
      const auto partial = [](int cap) {
        double term = 1.0, sum = 1.0;
        for (int n = 0; n < cap; ++n) {
          term *= (1.0 + n) * (1.0 + n) * 0.3 / ((2.0 + n) * (2.0 + n) * (n + 1.0));
          sum += term;
        }
        return sum;
      };
      const double a60 = partial(60);
      expect("2F2(1, 1; 2, 2; 0.3) cap 60 vs cap 120", a60, partial(120), 1e-15);
      expect("2F2(1, 1; 2, 2; 0.3)", generalized_pfq({1.0, 1.0}, {2.0, 2.0}, 0.3), a60, 1e-8);
    }
    expect("int exp(-x)", integrate_semi_infinite([](double x) { return std::exp(-x); }), 1.0, 1e-9);
    expect("int x exp(-x)", integrate_semi_infinite([](double x) { return x * std::exp(-x); }), 1.0,
           1e-9);
    {
      const Deployment dep = make_deployment(reference_mrt_config());
      const auto model = mrt_model(dep.lsm, dep.focus_user, 2, reference_mrt_config().rho_d());
      expect("MRT SINR pdf normalization",
             integrate_semi_infinite([&](double x) { return sinr_pdf(model, x); }, {},
                                     model.typical_sinr()),
             1.0, 1e-6);
    }

    double worst = 0.0;
    int points = 0;
    for (double j1 : {0.3, 0.634, 1.2, 2.5, 5.3}) {
      for (double j2 : {0.5, 0.9, 1.8, 4.4, 7.9, 16.0}) {
        for (double y : {1e-3, 0.1, 1.0, 5.0, 30.0, 300.0}) {
          worst = std::max(worst, contiguous_residual(j1, j1 + j2, j1 + 1.0, -y));
          ++points;
        }
      }
    }
    r.measured["examples"] = std::move(examples);
    r.measured["contiguous_points"] = points;
    r.measured["contiguous_worst_relative_residual"] = worst;
    r.passed = ok && worst <= 1e-7;
    r.detail = "every example within its tolerance; contiguous residual <= 1e-7 on the "
               "(j1, j1 + j2; j1 + 1; -y) grid";
  });
}

// ---------------------------------------------------------------------------

struct ValidationSummary {
  std::vector<CriterionResult> results;

  bool all_passed() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  }
  Json to_json() const {
    Json j;
    j["all_passed"] = all_passed();
    Json list = Json::array();
    for (const auto& r : results) list.push_back(r.to_json());
    j["criteria"] = std::move(list);
    return j;
  }
};

/// Runs the criteria listed in ids (all nine when empty), in order.
inline ValidationSummary validate(const ValidationOptions& opt, std::vector<int> ids = {}) {
  if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  opt.mrt.validate();
  opt.fzf.validate();
  detail::SimulationCache cache(opt.threads);
  ValidationSummary out;
  for (int id : ids) {
    switch (id) {
      case 1: out.results.push_back(check_moments(opt, cache)); break;
      case 2: out.results.push_back(check_brute_force_oracle(opt)); break;
      case 3: out.results.push_back(check_fzf_exactness(opt)); break;
      case 4: out.results.push_back(check_distribution_agreement(opt, cache)); break;
      case 5: out.results.push_back(check_cdf_consistency(opt)); break;
      case 6: out.results.push_back(check_rates(opt, cache)); break;
      case 7: out.results.push_back(check_outage(opt, cache)); break;
      case 8: out.results.push_back(check_determinism(opt)); break;
      case 9: out.results.push_back(check_special_functions(opt)); break;
      default: throw DomainError("validate: unknown criterion " + std::to_string(id));
    }
  }
  return out;
}

}  // namespace cfmimo
