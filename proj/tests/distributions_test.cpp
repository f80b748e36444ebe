#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cfmimo/distributions.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/rng.hpp"

using namespace cfmimo;

namespace {

SinrDistributionModel mrt_law(double j1, double t1, double j2, double t2) {
  SinrDistributionModel m;
  m.scheme = Scheme::kMrt;
  m.ds_params = {j1, t1};
  m.in_params = {j2, t2};
  return m;
}

SinrDistributionModel fzf_law(double ds, double j2, double t2) {
  SinrDistributionModel m;
  m.scheme = Scheme::kFzf;
  m.ds_value = ds;
  m.in_params = {j2, t2};
  return m;
}

double integrate_pdf(const SinrDistributionModel& m, double a, double b) {
  QuadratureSpec spec;
  spec.relative_tolerance = 1e-12;
  return integrate([&](double x) { return sinr_pdf(m, x); }, a, b, spec);
}

LargeScaleModel random_model(int M, int K, int l_p, std::uint64_t seed) {
  Rng rng = make_stream(seed, StreamTag::kLayout);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  Eigen::MatrixXd beta(M, K);
  for (Eigen::Index i = 0; i < beta.size(); ++i) beta.data()[i] = u(rng);
  auto lsm = make_large_scale_model(beta, assign_pilots(K, l_p), 2.0);
  lsm.eta = power_allocation_heuristic(lsm);
  return lsm;
}

}  // namespace

TEST(GammaMatch, Examples) {
  auto g = gamma_match({1.0, 2.0});
  EXPECT_DOUBLE_EQ(g.shape, 1.0);
  EXPECT_DOUBLE_EQ(g.scale, 1.0);
  g = gamma_match({6.0, 48.0});
  EXPECT_DOUBLE_EQ(g.shape, 3.0);
  EXPECT_DOUBLE_EQ(g.scale, 2.0);
  g = gamma_match({5.0, 26.0});
  EXPECT_NEAR(g.shape, 25.0, 1e-12);
  EXPECT_NEAR(g.scale, 0.2, 1e-15);
  EXPECT_THROW(gamma_match({1.0, 1.0}), DegenerateError);
  EXPECT_THROW(gamma_match({0.0, 1.0}), DegenerateError);
}

TEST(GammaMatch, DensityAndCdf) {
  const GammaParams g{2.5, 0.7};
  QuadratureSpec spec;
  spec.relative_tolerance = 1e-12;
  const double mass = integrate([&](double x) { return gamma_pdf(g, x); }, 0.0, 3.0, spec);
  EXPECT_NEAR(mass, gamma_cdf(g, 3.0), 1e-10);
  EXPECT_EQ(gamma_cdf(g, -1.0), 0.0);
}

TEST(MrtLaw, UnitShapes) {
  const auto m = mrt_law(1.0, 2.0, 1.0, 2.0);
  EXPECT_NEAR(sinr_cdf(m, 1.0), 0.5, 1e-12);
  EXPECT_EQ(sinr_cdf(m, 0.0), 0.0);
  for (double x : {0.01, 0.3, 4.0, 100.0}) EXPECT_NEAR(sinr_cdf(m, x), x / (1.0 + x), 1e-12);
}

TEST(MrtLaw, CdfIsIntegralOfDensity) {
  for (const auto& m : {mrt_law(2.3, 0.4, 5.1, 0.2), mrt_law(0.7, 3.0, 1.6, 1.1),
                        mrt_law(40.0, 0.05, 12.0, 0.3)}) {
    double prev = 0.0;
    for (double x : {0.1, 0.5, 1.0, 2.0, 8.0}) {
      const double F = sinr_cdf(m, x);
      EXPECT_NEAR(F, integrate_pdf(m, 0.0, x), 1e-8) << x;
      EXPECT_GE(F, prev);
      prev = F;
    }
  }
}

TEST(MrtLaw, ReciprocalSwapsRoles) {
  // 1 / SINR has the roles of DS and IN exchanged.
  const auto m = mrt_law(3.2, 0.9, 1.7, 0.4);
  const auto r = mrt_law(1.7, 0.4, 3.2, 0.9);
  for (double x : {0.05, 0.8, 3.0, 40.0}) EXPECT_NEAR(sinr_cdf(m, x), 1.0 - sinr_cdf(r, 1.0 / x), 1e-12);
}

TEST(FzfLaw, ExponentialInterference) {
  const auto m = fzf_law(2.0, 1.0, 0.5);
  for (double x : {0.2, 1.0, 9.0}) EXPECT_NEAR(sinr_cdf(m, x), std::exp(-2.0 / (0.5 * x)), 1e-13);
  EXPECT_EQ(sinr_cdf(m, 0.0), 0.0);
  EXPECT_EQ(sinr_cdf(m, std::numeric_limits<double>::infinity()), 1.0);
}

TEST(FzfLaw, CdfIsIntegralOfDensity) {
  const auto m = fzf_law(5.0, 2.7, 0.8);
  for (double x : {0.5, 2.0, 6.0}) EXPECT_NEAR(sinr_cdf(m, x), integrate_pdf(m, 0.0, x), 1e-9);
}

TEST(Laws, DensitiesIntegrateToOne) {
  for (const auto& m : {mrt_law(2.0, 1.0, 3.0, 0.5), fzf_law(3.0, 4.5, 0.4), fzf_law(0.5, 0.8, 2.0)}) {
    const auto f = [&](double x) { return sinr_pdf(m, x); };
    QuadratureSpec spec;
    spec.max_subdivisions = 20000;
    EXPECT_NEAR(integrate_semi_infinite(f, spec, m.typical_sinr()), 1.0, 1e-8);
  }
}

TEST(Laws, QuantileInvertsCdf) {
  const auto m = mrt_law(2.0, 1.0, 3.0, 0.5);
  for (double p : {0.01, 0.5, 0.99}) EXPECT_NEAR(sinr_cdf(m, sinr_quantile(m, p)), p, 1e-12);
  EXPECT_THROW(sinr_quantile(m, 1.0), DomainError);
}

TEST(Laws, CrossSchemeCallIsContractError) {
  EXPECT_THROW(sinr_cdf_fzf(mrt_law(1, 1, 1, 1), 1.0), ContractError);
  EXPECT_THROW(rate_closed_mrt(fzf_law(1, 1.5, 1)), ContractError);
}

TEST(Rate, FzfClosedFormMatchesQuadrature) {
  Rng rng = make_stream(3, StreamTag::kOracle);
  std::uniform_real_distribution<double> shape(0.3, 8.0), load(0.05, 6.0), scale(0.1, 3.0);
  int accepted = 0;
  for (int i = 0; i < 50; ++i) {
    const double j2 = shape(rng), t2 = scale(rng);
    const auto m = fzf_law(load(rng) * t2, j2, t2);
    const auto closed = rate_closed(m);
    if (!closed) continue;
    ++accepted;
    EXPECT_NEAR(*closed, rate_quadrature(m), 1e-6) << "j2 " << j2;
  }
  EXPECT_GE(accepted, 25);
}

TEST(Rate, MrtClosedFormMatchesQuadrature) {
  int accepted = 0;
  for (double j1 : {0.8, 2.5, 6.0}) {
    for (double j2 : {0.45, 1.7, 3.3, 7.6}) {
      for (double s : {0.05, 0.3, 0.7}) {
        const auto m = mrt_law(j1, s, j2, 1.0);
        const auto closed = rate_closed(m);
        if (!closed) continue;
        ++accepted;
        EXPECT_NEAR(*closed, rate_quadrature(m), 1e-6) << j1 << ' ' << j2 << ' ' << s;
      }
    }
  }
  EXPECT_GE(accepted, 18);
}

TEST(Rate, ClosedFormsStepAsideNearPoles) {
  EXPECT_FALSE(rate_closed(mrt_law(2.0, 0.3, 3.0, 1.0)).has_value());
  EXPECT_FALSE(rate_closed(mrt_law(2.0, 1.5, 2.5, 1.0)).has_value());  // s >= 1
  EXPECT_FALSE(rate_closed(fzf_law(1.0, 2.0005, 1.0)).has_value());
  const auto r = achievable_rate(mrt_law(2.0, 0.3, 3.0, 1.0));
  EXPECT_FALSE(r.closed_form);
  EXPECT_GT(r.value, 0.0);
}

TEST(Rate, NarrowInterferenceApproachesPointMass) {
  const auto m = fzf_law(3.0, 1e4, 1e-4);
  EXPECT_NEAR(rate_quadrature(m), 2.0, 1e-3);
}

TEST(Rate, RatesAreOrderedWithAntennas) {
  const auto lsm = random_model(6, 4, 2, 8);
  double prev = 0.0;
  for (int N = 3; N <= 10; ++N) {
    const double median = sinr_quantile(fzf_model(lsm, 1, N, 10.0), 0.5);
    EXPECT_GE(median, prev * (1.0 - 1e-12)) << N;
    prev = median;
  }
}

TEST(LowerBound, DegenerateAndSingleLink) {
  const auto lsm = random_model(2, 3, 2, 9);
  EXPECT_EQ(rate_lower_bound(lsm, 0, 2, 5.0, Scheme::kFzf), 0.0);

  Eigen::MatrixXd beta(1, 1);
  beta << 1.8;
  auto one = make_large_scale_model(beta, assign_pilots(1, 1), 4.0);
  one.eta = power_allocation_heuristic(one);
  const double c = one.c(0, 0), rho = 3.0;
  const int N = 4;
  EXPECT_NEAR(rate_lower_bound(one, 0, N, rho, Scheme::kMrt),
              std::log2(1.0 + N * rho * c / (rho * 1.8 + 1.0)), 1e-12);
  EXPECT_NEAR(rate_lower_bound(one, 0, N, rho, Scheme::kFzf),
              std::log2(1.0 + (N - 1) * rho * c / (rho * (1.8 - c) + 1.0)), 1e-12);
  EXPECT_NEAR(rate_lower_bound(one, 0, N, rho, Scheme::kFzf, FzfBoundVariance::kStated),
              std::log2(1.0 + (N - 1) * rho * c / (rho * 1.8 + 1.0)), 1e-12);
}

TEST(LowerBound, BelowModelRate) {
  const auto lsm = random_model(8, 6, 3, 10);
  for (Scheme s : {Scheme::kMrt, Scheme::kFzf}) {
    for (int k = 0; k < 6; ++k) {
      const auto m = make_model(s, lsm, k, 5, 10.0);
      EXPECT_LE(rate_lower_bound(lsm, k, 5, 10.0, s), achievable_rate(m).value) << k;
    }
  }
}

TEST(Outage, Limits) {
  const auto m = mrt_law(2.0, 1.0, 3.0, 0.5);
  EXPECT_EQ(outage(m, 0.0), 0.0);
  EXPECT_EQ(outage(m, std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_NEAR(outage(m, 1.0), sinr_cdf(m, 1.0), 1e-15);
  EXPECT_THROW(outage(m, -0.5), DomainError);
}
