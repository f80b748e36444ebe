#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cfmimo/moments.hpp"
#include "cfmimo/montecarlo.hpp"

using namespace cfmimo;

namespace {

LargeScaleModel model(int M, int K, int l_p, std::uint64_t seed, double rho_p = 5.0) {
  Rng rng = make_stream(seed, StreamTag::kLayout);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  Eigen::MatrixXd beta(M, K);
  for (Eigen::Index i = 0; i < beta.size(); ++i) beta.data()[i] = u(rng);
  auto lsm = make_large_scale_model(beta, assign_pilots(K, l_p), rho_p);
  lsm.eta = power_allocation_heuristic(lsm);
  return lsm;
}

}  // namespace

TEST(Batch, FzfSignalIsDeterministic) {
  const auto lsm = model(4, 5, 2, 1);
  BatchSpec spec{Scheme::kFzf, 4, 200, 7, 2.0, NoiseModel::kUnitPower, 2};
  const auto out = run_batch(lsm, spec);
  for (int k = 0; k < 5; ++k) {
    const double expected = ds_fzf(lsm, k, 4, 2.0);
    for (double v : out.ds[k]) EXPECT_NEAR(v, expected, 1e-9 * expected);
  }
}

TEST(Batch, SingleUserHasNoCoPilotTerm) {
  const auto lsm = model(3, 1, 1, 2);
  const PilotSet pilots = PilotSet::dft(1);
  Rng rng = make_stream(2, StreamTag::kRealization);
  ChannelRealization real = draw_realization(lsm, pilots, 2, rng);
  const auto prec = fzf_precoders(real, lsm);
  const auto s = realize_sinr(real, prec, lsm, 3.0);
  EXPECT_NEAR(s.in_(0), 3.0 * std::norm(s.error_gain(0, 0)) + 1.0, 1e-12);

  // With a perfect estimate only the noise remains.
  for (auto& e : real.err_h) e.setZero();
  EXPECT_DOUBLE_EQ(realize_sinr(real, prec, lsm, 3.0).in_(0), 1.0);
}

TEST(Batch, SinrIsSignalOverInterference) {
  const auto lsm = model(5, 4, 2, 3);
  const auto out = run_batch(lsm, {Scheme::kMrt, 2, 128, 3, 4.0, NoiseModel::kSampledPower, 1});
  for (int k = 0; k < 4; ++k) {
    for (int r = 0; r < 128; ++r) {
      EXPECT_NEAR(out.sinr[k][r] * out.in_[k][r], out.ds[k][r], 1e-12 * out.ds[k][r]);
    }
  }
  EXPECT_LE(out.max_copilot_imaginary_residual, 1e-9);
}

TEST(Batch, ThreadCountInvariant) {
  const auto lsm = model(4, 3, 2, 4);
  BatchSpec spec{Scheme::kMrt, 2, 300, 11, 1.5, NoiseModel::kUnitPower, 1};
  const auto one = run_batch(lsm, spec);
  spec.threads = 3;
  const auto three = run_batch(lsm, spec);
  EXPECT_EQ(one.sinr, three.sinr);
  EXPECT_EQ(one.in_, three.in_);
  EXPECT_EQ(one.mean_ap_power, three.mean_ap_power);
}

TEST(Batch, SingleRealization) {
  const auto lsm = model(2, 2, 1, 5);
  const auto out = run_batch(lsm, {Scheme::kMrt, 1, 1, 1, 1.0, NoiseModel::kUnitPower, 4});
  ASSERT_EQ(out.sinr[0].size(), 1u);
  EXPECT_GT(out.sinr[0][0], 0.0);
  EXPECT_THROW(run_batch(lsm, {Scheme::kMrt, 1, 0, 1, 1.0, NoiseModel::kUnitPower, 1}), DomainError);
}

TEST(Batch, MrtSignalMeanMatchesMoments) {
  const auto lsm = model(6, 3, 2, 6);
  const auto out = run_batch(lsm, {Scheme::kMrt, 3, 20'000, 6, 2.0, NoiseModel::kUnitPower, 0});
  for (int k = 0; k < 3; ++k) {
    const auto m = sample_moments(out.ds[k]);
    EXPECT_LE(std::fabs(m.mean - ds_moments_mrt(lsm, k, 3, 2.0).m1), 3.5 * m.mean_se) << k;
  }
}

TEST(Ks, ExponentialSample) {
  Rng rng = make_stream(1, StreamTag::kOracle);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(10'000);
  for (double& v : x) v = e(rng);
  const Ecdf ecdf(x);
  EXPECT_LE(ks_distance(ecdf, [](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-t); }), 0.02);
  EXPECT_EQ(ks_distance(ecdf, [&](double t) { return ecdf(t); }), 0.0);
}

TEST(Ks, ConstantSampleAgainstStep) {
  const Ecdf ecdf(std::vector<double>(50, 2.5));
  EXPECT_EQ(ks_distance(ecdf, [](double t) { return t >= 2.5 ? 1.0 : 0.0; }), 0.0);
  EXPECT_EQ(ecdf(2.5), 1.0);
  EXPECT_EQ(ecdf.left_limit(2.5), 0.0);
  EXPECT_THROW(Ecdf(std::vector<double>{}), DomainError);
  EXPECT_THROW(Ecdf(std::vector<double>{1.0, std::nan("")}), DomainError);
}

TEST(Ecdf, Quantile) {
  const Ecdf ecdf({4.0, 1.0, 3.0, 2.0});
  EXPECT_EQ(ecdf.quantile(0.0), 1.0);
  EXPECT_EQ(ecdf.quantile(0.5), 2.0);
  EXPECT_EQ(ecdf.quantile(0.51), 3.0);
  EXPECT_EQ(ecdf.quantile(1.0), 4.0);
}

TEST(Empirical, RateAndOutage) {
  const std::vector<double> ones(10, 1.0);
  const auto rate = empirical_rate(ones);
  EXPECT_DOUBLE_EQ(rate.value, 1.0);
  EXPECT_EQ(rate.standard_error, 0.0);

  const std::vector<double> threes(5, 3.0);
  EXPECT_EQ(empirical_outage(threes, 2.0), 1.0);  // boundary counts as outage
  EXPECT_EQ(empirical_outage(threes, 0.0), 0.0);
  EXPECT_EQ(empirical_outage(std::vector<double>{0.0, 3.0}, 0.0), 0.5);
}

TEST(Empirical, SampleMoments) {
  const std::vector<double> x{1e8 + 1.0, 1e8 + 2.0, 1e8 + 3.0};
  const auto m = sample_moments(x);
  EXPECT_DOUBLE_EQ(m.mean, 1e8 + 2.0);
  EXPECT_NEAR(m.mean_se, std::sqrt(1.0 / 3.0), 1e-9);
}
