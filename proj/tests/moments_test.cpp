#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cfmimo/moments.hpp"
#include "cfmimo/rng.hpp"

using namespace cfmimo;

namespace {

// A hand-built model; c and eta are free parameters here.
LargeScaleModel manual(Eigen::MatrixXd beta, Eigen::MatrixXd c, Eigen::MatrixXd eta,
                       std::vector<int> pilot_index, int l_p) {
  LargeScaleModel lsm;
  lsm.beta = std::move(beta);
  lsm.c = std::move(c);
  lsm.kappa = lsm.c;
  lsm.eta = std::move(eta);
  lsm.l_p = l_p;
  lsm.pilot_index = std::move(pilot_index);
  lsm.copilot_sets.resize(lsm.pilot_index.size());
  for (std::size_t k = 0; k < lsm.pilot_index.size(); ++k) {
    for (std::size_t k1 = 0; k1 < lsm.pilot_index.size(); ++k1) {
      if (lsm.pilot_index[k] == lsm.pilot_index[k1]) lsm.copilot_sets[k].push_back(static_cast<int>(k1));
    }
  }
  return lsm;
}

LargeScaleModel single(double beta, double c, double eta = 1.0) {
  return manual(Eigen::MatrixXd::Constant(1, 1, beta), Eigen::MatrixXd::Constant(1, 1, c),
                Eigen::MatrixXd::Constant(1, 1, eta), {0}, 1);
}

}  // namespace

TEST(Xi, ClosedFormExamples) {
  const auto m = xi_moments_mrt(1.0, 1.0, 1);
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], 2.0);
  EXPECT_DOUBLE_EQ(m[2], 6.0);
  EXPECT_DOUBLE_EQ(m[3], 24.0);
  for (double v : xi_moments_mrt(0.0, 2.0, 4)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(xi_moments_mrt(1.0, 1.0, 0), DomainError);
}

TEST(Xi, MatchesSampledEstimates) {
  const double eta = 0.3, c = 1.7;
  const int N = 3, R = 1'000'000;
  Rng rng = make_stream(1, StreamTag::kOracle);
  ComplexNormal h(c);
  std::array<double, 4> acc{};
  for (int r = 0; r < R; ++r) {
    double norm2 = 0.0;
    for (int n = 0; n < N; ++n) norm2 += std::norm(h(rng));
    const double xi = std::sqrt(eta / (N * c)) * norm2;
    double p = 1.0;
    for (double& a : acc) a += (p *= xi);
  }
  const auto expected = xi_moments_mrt(eta, c, N);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(acc[i] / R, expected[i], 0.02 * expected[i]) << i;
}

TEST(RealSum, SingleTermCollapses) {
  const std::vector<RawMoments4> one{{0.5, 1.25, 3.0, 9.0}};
  const auto m = real_sum_square_moments(one);
  EXPECT_DOUBLE_EQ(m.m1, 1.25);
  EXPECT_DOUBLE_EQ(m.m2, 9.0);
}

TEST(RealSum, TwoTermExpansion) {
  const RawMoments4 a{1.0, 2.0, 6.0, 24.0}, b{0.5, 0.5, 0.75, 1.5};
  const auto m = real_sum_square_moments(std::vector<RawMoments4>{a, b});
  EXPECT_DOUBLE_EQ(m.m1, a[1] + 2.0 * a[0] * b[0] + b[1]);
  EXPECT_DOUBLE_EQ(m.m2, a[3] + 4.0 * a[2] * b[0] + 6.0 * a[1] * b[1] + 4.0 * a[0] * b[2] + b[3]);
}

TEST(RealSum, FastMatchesNaive) {
  Rng rng = make_stream(2, StreamTag::kOracle);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int M = 1; M <= 12; ++M) {
    std::vector<RawMoments4> terms(M);
    for (auto& t : terms) t = xi_moments_mrt(u(rng), u(rng), 1 + M % 4);
    const auto fast = real_sum_square_moments(terms);
    const auto slow = real_sum_square_moments_naive(terms);
    EXPECT_NEAR(fast.m1, slow.m1, 1e-12 * slow.m1);
    EXPECT_NEAR(fast.m2, slow.m2, 1e-12 * slow.m2);
  }
}

TEST(ComplexSum, PairFormula) {
  const std::vector<double> e2{1.0, 2.0}, e4{2.0, 8.0};
  const auto m = complex_sum_square_moments(e2, e4);
  EXPECT_DOUBLE_EQ(m.m1, 3.0);
  EXPECT_DOUBLE_EQ(m.m2, 10.0 + 2.0 * 4.0);
  EXPECT_THROW(complex_sum_square_moments(e2, std::vector<double>{1.0}), DomainError);
}

TEST(U2, DifferentPilotExample) {
  const auto lsm = manual(Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Ones(1, 2),
                          Eigen::MatrixXd::Ones(1, 2), {0, 1}, 2);
  const auto m = u2_moments_diff_pilot(lsm, 0, 1, 1);
  EXPECT_DOUBLE_EQ(m.m1, 1.0);
  EXPECT_DOUBLE_EQ(m.m2, 4.0);
  EXPECT_THROW(u2_moments_same_pilot(lsm, 0, 1, 1), ContractError);
  EXPECT_THROW(u2_moments_diff_pilot(lsm, 0, 0, 1), ContractError);
  EXPECT_THROW(u2_moments_diff_pilot(lsm, 0, 2, 1), DomainError);
}

TEST(U2, SamePilotUsesOtherUsersPower) {
  Eigen::MatrixXd eta(1, 2);
  eta << 0.25, 0.75;
  const auto lsm = manual(Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Constant(1, 2, 0.6), eta,
                          {0, 0}, 1);
  const auto m = u2_moments_same_pilot(lsm, 0, 1, 2);
  const auto xi = xi_moments_mrt(0.75, 0.6, 2);
  EXPECT_DOUBLE_EQ(m.m1, xi[1]);
  EXPECT_DOUBLE_EQ(m.m2, xi[3]);
}

TEST(U3, Examples) {
  const auto perfect = u3_moments(single(1.5, 1.5), 0, 0, 3, Scheme::kMrt);
  EXPECT_EQ(perfect.m1, 0.0);
  EXPECT_EQ(perfect.m2, 0.0);
  const auto m = u3_moments(single(3.0, 1.0), 0, 0, 1, Scheme::kMrt);
  EXPECT_DOUBLE_EQ(m.m1, 2.0);
  EXPECT_DOUBLE_EQ(m.m2, 16.0);
  EXPECT_THROW(u3_moments(single(3.0, 1.0), 0, 0, 1, Scheme::kFzf), DomainError);
}

TEST(U3, FzfFourthMomentFactor) {
  EXPECT_EQ(fzf_error_fourth_moment_factor(3, 2), std::numeric_limits<double>::infinity());
  EXPECT_DOUBLE_EQ(fzf_error_fourth_moment_factor(5, 2), 3.0);
  EXPECT_THROW(fzf_error_fourth_moment_factor(2, 2), DomainError);
}

TEST(Interference, ZeroPowerLeavesNoise) {
  const auto lsm = single(2.0, 1.0);
  const auto mrt = in_moments_mrt(lsm, 0, 2, 0.0);
  EXPECT_DOUBLE_EQ(mrt.m1, 1.0);
  EXPECT_DOUBLE_EQ(mrt.m2, 2.0);
  const auto unit = in_moments_mrt(lsm, 0, 2, 0.0, NoiseModel::kUnitPower);
  EXPECT_DOUBLE_EQ(unit.m2, 1.0);
  const auto fzf = in_moments_fzf(lsm, 0, 2, 0.0);
  EXPECT_DOUBLE_EQ(fzf.m1, 1.0);
  EXPECT_DOUBLE_EQ(fzf.m2, 2.0);
}

TEST(Interference, SingleUserIsLeakagePlusNoise) {
  const auto lsm = manual(Eigen::MatrixXd::Constant(2, 1, 2.0), Eigen::MatrixXd::Constant(2, 1, 1.5),
                          Eigen::MatrixXd::Ones(2, 1), {0}, 1);
  const double rho = 3.0;
  const int N = 2;
  const auto u3 = u3_moments(lsm, 0, 0, N, Scheme::kMrt);
  const auto m = in_moments_mrt(lsm, 0, N, rho);
  EXPECT_DOUBLE_EQ(m.m1, rho * u3.m1 + 1.0);
  EXPECT_NEAR(m.m2, rho * rho * u3.m2 + 2.0 * rho * u3.m1 + 2.0, 1e-12);
}

TEST(Interference, DispatchMatches) {
  const auto lsm = single(2.0, 1.0);
  EXPECT_EQ(in_moments(Scheme::kMrt, lsm, 0, 3, 1.0).m2, in_moments_mrt(lsm, 0, 3, 1.0).m2);
  EXPECT_EQ(in_moments(Scheme::kFzf, lsm, 0, 3, 1.0).m2, in_moments_fzf(lsm, 0, 3, 1.0).m2);
}

TEST(Fzf, SignalExamples) {
  EXPECT_DOUBLE_EQ(ds_fzf(single(1.0, 1.0), 0, 2, 1.0), 1.0);
  const auto two = manual(Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(2, 1),
                          Eigen::MatrixXd::Ones(2, 1), {0}, 1);
  EXPECT_DOUBLE_EQ(ds_fzf(two, 0, 2, 1.0), 4.0);
  EXPECT_THROW(ds_fzf(two, 0, 1, 1.0), DomainError);
  EXPECT_EQ(u2_fzf(two, 0, 2, 1.0), 0.0);
}
