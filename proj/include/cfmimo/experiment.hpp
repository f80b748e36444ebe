#pragma once

// Scenario orchestration: deployment, simulation, analytic fit, comparison,
// JSON reports and per-figure CSV output.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/distributions.hpp"
#include "cfmimo/geometry.hpp"
#include "cfmimo/moments.hpp"
#include "cfmimo/montecarlo.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

using Json = nlohmann::ordered_json;

/// One fixed large-scale deployment. Small-scale realizations are drawn on
/// top of it.
struct Deployment {
  Layout layout;
  Eigen::MatrixXd beta_db;
  LargeScaleModel lsm;
  int focus_user = 0;
};

/// The user whose total gain sum_m beta_mk is the (lower) median.
inline int median_gain_user(const LargeScaleModel& lsm) {
  const Eigen::VectorXd total = lsm.beta.colwise().sum().transpose();
  std::vector<int> order(total.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return total(a) < total(b); });
  return order[(order.size() - 1) / 2];
}

inline Deployment make_deployment(const SystemConfig& cfg) {
  cfg.validate();
  Deployment d;
  Rng layout_rng = make_stream(cfg.seed, StreamTag::kLayout);
  d.layout = place_uniform(cfg, layout_rng);
  Rng shadow_rng = make_stream(cfg.seed, StreamTag::kShadowing);
  d.beta_db = large_scale_db(d.layout, cfg.shadow_sigma_db, shadow_rng);
  const Eigen::MatrixXd beta = to_linear_normalized(d.beta_db, cfg.noise_power_dbm());
  d.lsm = make_large_scale_model(beta, assign_pilots(cfg.K, cfg.l_p), cfg.rho_p());
  d.lsm.eta = power_allocation_heuristic(d.lsm);
  d.focus_user = cfg.focus_user.value_or(median_gain_user(d.lsm));
  return d;
}

inline Json config_to_json(const SystemConfig& c) {
  Json j;
  j["M"] = c.M;
  j["K"] = c.K;
  j["N"] = c.N;
  j["l_p"] = c.l_p;
  j["pilot_power_dbm"] = c.pilot_power_dbm;
  j["downlink_power_dbm"] = c.downlink_power_dbm;
  j["bandwidth_hz"] = c.bandwidth_hz;
  j["noise_density_dbm_hz"] = c.noise_density_dbm_hz;
  j["noise_figure_db"] = c.noise_figure_db;
  j["shadow_sigma_db"] = c.shadow_sigma_db;
  j["area_m"] = {c.area_m.first, c.area_m.second};
  j["realizations"] = c.realizations;
  j["seed"] = c.seed;
  j["scheme"] = to_string(c.scheme);
  j["focus_user"] = c.focus_user ? Json(*c.focus_user) : Json(nullptr);
  j["noise_model"] = to_string(c.noise_model);
  return j;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json model_to_json(const SinrDistributionModel& m) {
  Json j;
  j["scheme"] = to_string(m.scheme);
  const bool mrt = m.scheme == Scheme::kMrt;
  j["ds_shape"] = mrt ? Json(m.ds_params.shape) : Json(nullptr);
  j["ds_scale"] = mrt ? Json(m.ds_params.scale) : Json(nullptr);
  j["ds_value"] = mrt ? Json(nullptr) : Json(m.ds_value);
  j["in_shape"] = m.in_params.shape;
  j["in_scale"] = m.in_params.scale;
  return j;
}

/// Outage thresholds reported per user, in bits/s/Hz.
inline std::vector<double> default_outage_thresholds() {
  std::vector<double> r;
  for (int i = 1; i <= 16; ++i) r.push_back(0.5 * i);
  return r;
}

struct UserReport {
  int user = 0;
  std::optional<SinrDistributionModel> model;  // empty when moment matching degenerates
  std::string model_error;
  std::optional<double> rate_closed;
  std::optional<double> rate_quadrature;
  EstimateWithError rate_empirical;
  double lower_bound = 0.0;
  std::optional<double> ks;
  std::vector<double> outage_analytic;
  std::vector<double> outage_empirical;
};

struct ExperimentReport {
  SystemConfig config;
  int focus_user = 0;
  std::vector<double> outage_thresholds;
  std::vector<UserReport> users;
  double max_copilot_imaginary_residual = 0.0;
  double max_mean_ap_power = 0.0;
  double runtime_seconds = 0.0;

  /// Everything except timing; identical for identical seeds.
  Json payload() const {
    Json p;
    p["config"] = config_to_json(config);
    p["seed"] = config.seed;
    p["focus_user"] = focus_user;
    p["outage_thresholds_bps_hz"] = outage_thresholds;
    Json users_json = Json::array();
    for (const auto& u : users) {
      Json j;
      j["user"] = u.user;
      j["model"] = u.model ? model_to_json(*u.model) : Json(nullptr);
      j["model_error"] = u.model_error.empty() ? Json(nullptr) : Json(u.model_error);
      j["rate_closed"] = optional_json(u.rate_closed);
      j["rate_quadrature"] = optional_json(u.rate_quadrature);
      j["rate_empirical"] = u.rate_empirical.value;
      j["rate_empirical_se"] = u.rate_empirical.standard_error;
      j["lower_bound"] = u.lower_bound;
      j["ks"] = optional_json(u.ks);
      j["outage_analytic"] = u.outage_analytic.empty() ? Json(nullptr) : Json(u.outage_analytic);
      j["outage_empirical"] = u.outage_empirical;
      users_json.push_back(std::move(j));
    }
    p["users"] = std::move(users_json);
    Json diag;
    diag["max_copilot_imaginary_residual"] = max_copilot_imaginary_residual;
    diag["max_mean_ap_power_mw"] = max_mean_ap_power;
    p["diagnostics"] = std::move(diag);
    return p;
  }

  Json to_json() const {
    Json j;
    j["payload"] = payload();
    j["runtime_seconds"] = runtime_seconds;
    return j;
  }
};

/// geometry -> channel -> precoding -> simulation, plus the analytic fit and
/// the comparisons, for every user of one deployment.
inline ExperimentReport run_scenario(const SystemConfig& cfg, unsigned threads = 0) {
  const auto start = std::chrono::steady_clock::now();
  const Deployment dep = make_deployment(cfg);
  const SinrSamples samples = run_batch(dep.lsm, batch_spec_from(cfg, threads));

  ExperimentReport report;
  report.config = cfg;
  report.focus_user = dep.focus_user;
  report.outage_thresholds = default_outage_thresholds();
  report.max_copilot_imaginary_residual = samples.max_copilot_imaginary_residual;
  report.max_mean_ap_power = samples.mean_ap_power.maxCoeff();
  const double rho_d = cfg.rho_d();
  for (int k = 0; k < cfg.K; ++k) {
    UserReport u;
    u.user = k;
    const auto& sinr = samples.sinr[k];
    u.rate_empirical = empirical_rate(sinr);
    u.lower_bound = rate_lower_bound(dep.lsm, k, cfg.N, rho_d, cfg.scheme);
    for (double r : report.outage_thresholds) u.outage_empirical.push_back(empirical_outage(sinr, r));
    try {
      u.model = make_model(cfg.scheme, dep.lsm, k, cfg.N, rho_d, cfg.noise_model);
    } catch (const DegenerateError& e) {
      u.model_error = e.what();
    }
    if (u.model) {
      const auto& model = *u.model;
      u.rate_closed = rate_closed(model);
      try {
        u.rate_quadrature = rate_quadrature(model);
      } catch (const ToleranceError&) {
      }
      const Ecdf ecdf(sinr);
      u.ks = ks_distance(ecdf, [&](double x) { return sinr_cdf(model, x); });
      for (double r : report.outage_thresholds) u.outage_analytic.push_back(outage(model, r));
    }
    report.users.push_back(std::move(u));
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Figure reproduction

enum class FigureId {
  kDsCdfMrtVsAntennas = 1,
  kInCdfMrtVsAntennas,
  kInCdfFzfVsAntennas,
  kSinrCdfFzfVsUsers,
  kSinrCdfMrtVsUsers,
  kSinrCdfFzfVsAntennas,
  kSinrCdfMrtVsAntennas,
  kRateFzfVsAntennas,
  kRateMrtVsAntennas,
  kOutageFzfVsAntennas,
  kOutageMrtVsAntennas,
};

inline constexpr int kFigureCount = 11;

/// Accepts "fig3", "Fig3" or "3".
inline FigureId parse_figure_id(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char ch) {
    return static_cast<char>(std::tolower(ch));
  });
  if (text.rfind("fig", 0) == 0) text = text.substr(3);
  int n = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || n < 1 ||
      n > kFigureCount) {
    throw DomainError("unknown figure id '" + text + "' (expected fig1 .. fig" +
                      std::to_string(kFigureCount) + ")");
  }
  return static_cast<FigureId>(n);
}

inline std::string figure_description(FigureId id) {
  switch (id) {
    case FigureId::kDsCdfMrtVsAntennas: return "CDF of DS under MRT, N in {2, 4, 8}, K = 20";
    case FigureId::kInCdfMrtVsAntennas: return "CDF of IN under MRT, N in {2, 4, 8}, K = 20";
    case FigureId::kInCdfFzfVsAntennas: return "CDF of IN under FZF, N in {11, 12, 14}, K = 20";
    case FigureId::kSinrCdfFzfVsUsers: return "CDF of SINR under FZF, K in {10, 20, 30}, N = 11";
    case FigureId::kSinrCdfMrtVsUsers: return "CDF of SINR under MRT, K in {10, 20, 30}, N = 2";
    case FigureId::kSinrCdfFzfVsAntennas: return "CDF of SINR under FZF, N in {11, 12, 14}, K = 20";
    case FigureId::kSinrCdfMrtVsAntennas: return "CDF of SINR under MRT, N in {2, 4, 8}, K = 20";
    case FigureId::kRateFzfVsAntennas: return "rate vs N under FZF, one file per K";
    case FigureId::kRateMrtVsAntennas: return "rate vs N under MRT, one file per K";
    case FigureId::kOutageFzfVsAntennas: return "outage vs target rate under FZF, one file per N";
    case FigureId::kOutageMrtVsAntennas: return "outage vs target rate under MRT, one file per N";
  }
  return {};
}

inline const std::vector<int>& antenna_sweep(Scheme s) {
  static const std::vector<int> mrt{2, 4, 8};
  static const std::vector<int> fzf{11, 12, 14};
  return s == Scheme::kMrt ? mrt : fzf;
}

inline const std::vector<int>& user_sweep() {
  static const std::vector<int> k{10, 20, 30};
  return k;
}

/// Minimal CSV writer: classic locale, full precision, '\n' row ends.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out_.imbue(std::locale::classic());
    out_ << std::setprecision(17);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) out_ << ',';
      first = false;
      if (std::isnan(v)) out_ << "nan";
      else out_ << v;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct ReproduceOptions {
  SystemConfig base = reference_mrt_config();  // M, powers, geometry, seed, realizations
  unsigned threads = 0;
  int grid_points = 200;
};

namespace detail {

struct SimulatedPoint {
  Deployment deployment;
  SinrSamples samples;
  std::optional<SinrDistributionModel> model;
};

inline SimulatedPoint simulate_point(SystemConfig cfg, Scheme scheme, int N, int K,
                                     const ReproduceOptions& opt) {
  cfg.scheme = scheme;
  cfg.N = N;
  cfg.K = K;
  cfg.focus_user.reset();
  if (opt.base.focus_user && *opt.base.focus_user < K) cfg.focus_user = opt.base.focus_user;
  SimulatedPoint p;
  p.deployment = make_deployment(cfg);
  p.samples = run_batch(p.deployment.lsm, batch_spec_from(cfg, opt.threads));
  try {
    p.model = make_model(scheme, p.deployment.lsm, p.deployment.focus_user, N, cfg.rho_d(),
                         cfg.noise_model);
  } catch (const DegenerateError&) {
  }
  return p;
}

// Evaluation points: empirical quantiles spread over the sample.
inline std::vector<double> quantile_grid(const Ecdf& e, int points) {
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) {
    const double p = (i + 0.5) / points;
    grid.push_back(e.quantile(p));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

template <class Cdf>
void write_cdf_csv(const std::filesystem::path& path, const std::string& quantity,
                   const std::vector<double>& samples, const Cdf& analytic, int points) {
  const Ecdf e(samples);
  CsvWriter csv(path, {quantity + "_linear", quantity + "_db", "empirical_cdf", "analytic_cdf"});
  for (double x : quantile_grid(e, points)) {
    csv.row({x, 10.0 * std::log10(x), e(x), analytic(x)});
  }
}

inline double nan_if_empty(const std::optional<double>& v) {
  return v.value_or(std::numeric_limits<double>::quiet_NaN());
}

}  // namespace detail

/// Writes the CSV files of one figure into out_dir and returns their paths.
inline std::vector<std::filesystem::path> reproduce(FigureId id,
                                                    const std::filesystem::path& out_dir,
                                                    const ReproduceOptions& opt = {}) {
  std::filesystem::create_directories(out_dir);
  const std::string stem = "fig" + std::to_string(static_cast<int>(id));
  std::vector<std::filesystem::path> written;
  const auto path_for = [&](const std::string& suffix) {
    written.push_back(out_dir / (stem + "_" + suffix + ".csv"));
    return written.back();
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const SystemConfig& base = opt.base;
  constexpr int kDefaultUsers = 20;

  switch (id) {
    case FigureId::kDsCdfMrtVsAntennas:
    case FigureId::kInCdfMrtVsAntennas:
    case FigureId::kInCdfFzfVsAntennas: {
      const Scheme scheme = id == FigureId::kInCdfFzfVsAntennas ? Scheme::kFzf : Scheme::kMrt;
      const bool ds = id == FigureId::kDsCdfMrtVsAntennas;
      for (int N : antenna_sweep(scheme)) {
        const auto p = detail::simulate_point(base, scheme, N, kDefaultUsers, opt);
        const int k = p.deployment.focus_user;
        const auto& x = ds ? p.samples.ds[k] : p.samples.in_[k];
        const auto analytic = [&](double v) {
          if (!p.model) return nan;
          return gamma_cdf(ds ? p.model->ds_params : p.model->in_params, v);
        };
        detail::write_cdf_csv(path_for("N" + std::to_string(N)), ds ? "ds" : "in", x, analytic,
                              opt.grid_points);
      }
      break;
    }
    case FigureId::kSinrCdfFzfVsUsers:
    case FigureId::kSinrCdfMrtVsUsers:
    case FigureId::kSinrCdfFzfVsAntennas:
    case FigureId::kSinrCdfMrtVsAntennas: {
      const bool fzf = id == FigureId::kSinrCdfFzfVsUsers || id == FigureId::kSinrCdfFzfVsAntennas;
      const Scheme scheme = fzf ? Scheme::kFzf : Scheme::kMrt;
      const bool vs_users = id == FigureId::kSinrCdfFzfVsUsers || id == FigureId::kSinrCdfMrtVsUsers;
      const std::vector<int> sweep = vs_users ? user_sweep() : antenna_sweep(scheme);
      for (int v : sweep) {
        const int N = vs_users ? antenna_sweep(scheme).front() : v;
        const int K = vs_users ? v : kDefaultUsers;
        const auto p = detail::simulate_point(base, scheme, N, K, opt);
        const auto analytic = [&](double x) { return p.model ? sinr_cdf(*p.model, x) : nan; };
        detail::write_cdf_csv(path_for((vs_users ? "K" : "N") + std::to_string(v)), "sinr",
                              p.samples.sinr[p.deployment.focus_user], analytic, opt.grid_points);
      }
      break;
    }
    case FigureId::kRateFzfVsAntennas:
    case FigureId::kRateMrtVsAntennas: {
      const Scheme scheme = id == FigureId::kRateFzfVsAntennas ? Scheme::kFzf : Scheme::kMrt;
      for (int K : user_sweep()) {
        CsvWriter csv(path_for("K" + std::to_string(K)),
                      {"antennas", "rate_simulated_bps_hz", "rate_simulated_se_bps_hz",
                       "rate_analytic_bps_hz", "rate_closed_form_bps_hz", "lower_bound_bps_hz"});
        for (int N : antenna_sweep(scheme)) {
          const auto p = detail::simulate_point(base, scheme, N, K, opt);
          const int k = p.deployment.focus_user;
          const auto sim = empirical_rate(p.samples.sinr[k]);
          double analytic = nan;
          std::optional<double> closed;
          if (p.model) {
            const auto r = achievable_rate(*p.model);
            analytic = r.value;
            if (r.closed_form) closed = r.value;
          }
          csv.row({static_cast<double>(N), sim.value, sim.standard_error, analytic,
                   detail::nan_if_empty(closed),
                   rate_lower_bound(p.deployment.lsm, k, N, base.rho_d(), scheme)});
        }
      }
      break;
    }
    case FigureId::kOutageFzfVsAntennas:
    case FigureId::kOutageMrtVsAntennas: {
      const Scheme scheme = id == FigureId::kOutageFzfVsAntennas ? Scheme::kFzf : Scheme::kMrt;
      for (int N : antenna_sweep(scheme)) {
        const auto p = detail::simulate_point(base, scheme, N, kDefaultUsers, opt);
        const auto& sinr = p.samples.sinr[p.deployment.focus_user];
        CsvWriter csv(path_for("N" + std::to_string(N)),
                      {"target_rate_bps_hz", "outage_empirical", "outage_analytic"});
        for (int i = 0; i <= 40; ++i) {
          const double r = 0.25 * i;
          csv.row({r, empirical_outage(sinr, r), p.model ? outage(*p.model, r) : nan});
        }
      }
      break;
    }
  }
  return written;
}

}  // namespace cfmimo
