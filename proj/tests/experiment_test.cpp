#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "cfmimo/experiment.hpp"
#include "cfmimo/validation.hpp"

using namespace cfmimo;

namespace {

SystemConfig tiny(Scheme scheme = Scheme::kMrt) {
  SystemConfig cfg;
  cfg.M = 6;
  cfg.K = 4;
  cfg.l_p = 2;
  cfg.N = scheme == Scheme::kMrt ? 2 : 3;
  cfg.scheme = scheme;
  cfg.realizations = 64;
  cfg.seed = 5;
  return cfg;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cfmimo_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Scenario, ParsesKeysAndComments) {
  const auto cfg = parse_scenario(
      "# small run\nM = 30\nK=6\nl_p = 3\nN = 4\nscheme = fzf\narea_m = 500 400\n"
      "focus_user = 2\nnoise_model = sampled  # trailing\nseed = 99\n");
  EXPECT_EQ(cfg.M, 30);
  EXPECT_EQ(cfg.K, 6);
  EXPECT_EQ(cfg.scheme, Scheme::kFzf);
  EXPECT_EQ(cfg.area_m.second, 400.0);
  EXPECT_EQ(cfg.focus_user, 2);
  EXPECT_EQ(cfg.noise_model, NoiseModel::kSampledPower);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.realizations, 10'000);  // default kept
}

TEST(Scenario, RejectsBadInput) {
  EXPECT_THROW(parse_scenario("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_scenario("M = 3\nM = 4\n"), ConfigError);
  EXPECT_THROW(parse_scenario("M = three\n"), ConfigError);
  EXPECT_THROW(parse_scenario("M\n"), ConfigError);
  EXPECT_THROW(parse_scenario("scheme = fzf\nN = 10\n"), ConfigError);  // N = l_p
  EXPECT_THROW(parse_scenario("K = 4\n"), ConfigError);                 // l_p > K
  try {
    parse_scenario("K = 0\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find('K'), std::string::npos);
  }
  EXPECT_THROW(load_scenario("/nonexistent/scenario.txt"), ConfigError);
}

TEST(Deployment, MedianUserAndFocusOverride) {
  auto cfg = tiny();
  const auto dep = make_deployment(cfg);
  const Eigen::VectorXd total = dep.lsm.beta.colwise().sum().transpose();
  int below = 0;
  for (int k = 0; k < cfg.K; ++k) below += total(k) < total(dep.focus_user);
  EXPECT_EQ(below, (cfg.K - 1) / 2);
  cfg.focus_user = 3;
  EXPECT_EQ(make_deployment(cfg).focus_user, 3);
}

TEST(Report, SchemaHasExplicitNulls) {
  const auto j = run_scenario(tiny(), 1).to_json();
  ASSERT_TRUE(j.contains("payload"));
  ASSERT_TRUE(j.contains("runtime_seconds"));
  const auto& p = j["payload"];
  EXPECT_TRUE(p["config"]["focus_user"].is_null());
  ASSERT_EQ(p["users"].size(), 4u);
  for (const auto& u : p["users"]) {
    for (const char* key : {"model", "model_error", "rate_closed", "rate_quadrature", "rate_empirical",
                            "lower_bound", "ks", "outage_analytic", "outage_empirical"}) {
      EXPECT_TRUE(u.contains(key)) << key;
    }
    EXPECT_TRUE(u["model_error"].is_null());
    EXPECT_TRUE(u["model"]["ds_value"].is_null());
  }
  EXPECT_EQ(p["outage_thresholds_bps_hz"].size(), 16u);
}

TEST(Report, SameSeedSamePayload) {
  for (Scheme s : {Scheme::kMrt, Scheme::kFzf}) {
    const auto a = run_scenario(tiny(s), 1).payload().dump();
    const auto b = run_scenario(tiny(s), 3).payload().dump();
    EXPECT_EQ(a, b);
  }
  auto other = tiny();
  other.seed = 6;
  EXPECT_NE(run_scenario(other, 1).payload().dump(), run_scenario(tiny(), 1).payload().dump());
}

TEST(Figures, ParseIds) {
  EXPECT_EQ(parse_figure_id("fig3"), FigureId::kInCdfFzfVsAntennas);
  EXPECT_EQ(parse_figure_id("Fig11"), FigureId::kOutageMrtVsAntennas);
  EXPECT_EQ(parse_figure_id("1"), FigureId::kDsCdfMrtVsAntennas);
  for (const char* bad : {"fig0", "fig12", "figure", "", "fig3x"}) {
    EXPECT_THROW(parse_figure_id(bad), DomainError) << bad;
  }
}

TEST(Figures, WritesCsvWithClassicLocale) {
  ReproduceOptions opt;
  opt.base.M = 8;
  opt.base.realizations = 40;
  opt.threads = 1;
  opt.grid_points = 10;
  const auto dir = scratch_dir("fig");
  const auto files = reproduce(FigureId::kDsCdfMrtVsAntennas, dir, opt);
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename(), "fig1_N2.csv");
  std::ifstream in(files[0]);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "ds_linear,ds_db,empirical_cdf,analytic_cdf");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 3);
  EXPECT_NE(row.find('.'), std::string::npos);

  const auto rates = reproduce(FigureId::kRateMrtVsAntennas, dir, opt);
  ASSERT_EQ(rates.size(), 3u);
  std::ifstream rate_in(rates[0]);
  std::getline(rate_in, header);
  EXPECT_EQ(header.rfind("antennas,", 0), 0u);
  std::filesystem::remove_all(dir);
}

TEST(Validation, SmokeRunIsFast) {
  SystemConfig cfg;
  cfg.M = 4;
  cfg.K = 2;
  cfg.N = 2;
  cfg.l_p = 2;
  cfg.realizations = 100;
  const auto start = std::chrono::steady_clock::now();
  const auto summary = validate(ValidationOptions::for_scenario(cfg, 1));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(summary.results.size(), 9u);
  for (int id : {3, 8, 9}) EXPECT_TRUE(summary.results[id - 1].passed) << id;
  EXPECT_LT(seconds, 5.0);
  const auto j = summary.to_json();
  EXPECT_TRUE(j["all_passed"].is_boolean());
  EXPECT_EQ(j["criteria"].size(), 9u);
}
