#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "bimh/block_engine.hpp"
#include "bimh/rao_blackwell.hpp"
#include "support/oracles.hpp"

using namespace bimh;

namespace {
std::vector<double> logs(std::initializer_list<double> ws) {
  std::vector<double> out;
  for (double w : ws) out.push_back(std::log(w));
  return out;
}
}  // namespace

TEST(PairwiseRho, MinRatios) {
  const auto rho = pairwise_rho(logs({1, 2, 1}));
  EXPECT_DOUBLE_EQ(rho(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(rho(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(rho(1, 2), 0.5);

  const auto flat = pairwise_rho(logs({3, 3, 3, 3}));
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t u = t + 1; u < 4; ++u) EXPECT_DOUBLE_EQ(flat(t, u), 1.0);
}

TEST(PairwiseRho, ScaleInvariant) {
  const auto a = pairwise_rho(logs({0.3, 1.7, 0.2, 5.0}));
  const auto b = pairwise_rho(logs({30, 170, 20, 500}));
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t u = t + 1; u < 4; ++u) EXPECT_NEAR(a(t, u), b(t, u), 1e-15);
}

TEST(Occupancy, OneStepChain) {
  const auto rho = pairwise_rho(logs({2.0, 1.0}));
  const auto phi = occupancy_one_chain(rho);
  EXPECT_DOUBLE_EQ(phi[0], 0.5);
  EXPECT_DOUBLE_EQ(phi[1], 0.5);
}

TEST(Occupancy, TwoStepWorkedExample) {
  const auto tables = occupancy_tables(pairwise_rho(logs({1, 2, 1})));
  EXPECT_DOUBLE_EQ(tables.deltas[0], 1.0);
  EXPECT_DOUBLE_EQ(tables.deltas[1], 1.0);
  EXPECT_DOUBLE_EQ(tables.deltas[2], 0.5);
  EXPECT_DOUBLE_EQ(tables.phi[0], 0.0);
  EXPECT_DOUBLE_EQ(tables.phi[1], 1.5);
  EXPECT_DOUBLE_EQ(tables.phi[2], 0.5);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(tables.xis(t, t), 1.0);
}

TEST(Occupancy, MatchesPathEnumeration) {
  RngStream rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 1 + trial % 10;
    std::vector<double> w(p + 1);
    for (auto& v : w) v = std::exp(3.0 * (rng.uniform() - 0.5));
    std::vector<double> lw(p + 1);
    for (std::size_t i = 0; i <= p; ++i) lw[i] = std::log(w[i]);
    const auto phi = occupancy_one_chain(pairwise_rho(lw));
    const auto exact = oracle::enumerate_occupancy(w);
    for (std::size_t k = 0; k <= p; ++k) EXPECT_NEAR(phi[k], exact[k], 1e-12);
    EXPECT_NEAR(std::accumulate(phi.begin(), phi.end(), 0.0), static_cast<double>(p), 1e-10);
  }
}

TEST(Occupancy, MonotoneWeightsGiveUnitOccupancy) {
  const auto phi = occupancy_one_chain(pairwise_rho(logs({1, 2, 3, 4, 5, 6})));
  EXPECT_DOUBLE_EQ(phi[0], 0.0);
  for (std::size_t t = 1; t < phi.size(); ++t) EXPECT_DOUBLE_EQ(phi[t], 1.0);
}

TEST(Occupancy, ExtremeWeightsStayFinite) {
  const auto phi = occupancy_one_chain(pairwise_rho(std::vector<double>{800.0, -800.0, 0.0, -1e4, 3.0}));
  double s = 0;
  for (double v : phi) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    s += v;
  }
  EXPECT_NEAR(s, 4.0, 1e-10);
}

TEST(BlockOccupancy, IdentityReducesToOneChain) {
  ProposalBatch batch;
  batch.points = {Point{1}, Point{2}, Point{3}};
  batch.log_ws = {0.4, -0.2, 1.1};
  const auto rb = block_occupancy(batch, 0.1, same_order(3, 1));
  const auto phi = occupancy_one_chain(pairwise_rho(std::vector<double>{0.1, 0.4, -0.2, 1.1}));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(rb.phi[k], phi[k]);
}

TEST(BlockOccupancy, PermutedChainsMapBackToLabels) {
  RngStream rng(6);
  ProposalBatch batch;
  for (int k = 0; k < 7; ++k) {
    batch.points.push_back(Point{double(k)});
    batch.log_ws.push_back(2.0 * rng.uniform() - 1.0);
  }
  const double start_lw = 0.2;
  const auto perms = random_perms(7, 5, rng);
  const auto rb = block_occupancy(batch, start_lw, perms);
  for (std::size_t i = 0; i < perms.r(); ++i) {
    std::vector<double> w{std::exp(start_lw)};
    for (int idx : perms.perms[i]) w.push_back(std::exp(batch.log_ws[idx - 1]));
    const auto exact = oracle::enumerate_occupancy(w);
    EXPECT_NEAR(rb.phi_per_chain[i][0], exact[0], 1e-12);
    for (std::size_t t = 0; t < 7; ++t)
      EXPECT_NEAR(rb.phi_per_chain[i][perms.perms[i][t]], exact[t + 1], 1e-12);
    EXPECT_NEAR(std::accumulate(rb.phi_per_chain[i].begin(), rb.phi_per_chain[i].end(), 0.0), 7.0,
                1e-10);
  }
  EXPECT_NEAR(std::accumulate(rb.phi.begin(), rb.phi.end(), 0.0), 35.0, 1e-9);
}

TEST(BlockOccupancy, WorkersDoNotChangeResult) {
  const auto model = toy_model();
  const auto batch = generate_batch(model, 4, 0, 20);
  RngStream rng(4);
  const auto perms = random_perms(20, 20, rng);
  const auto a = block_occupancy(batch, 0.0, perms, 1);
  const auto b = block_occupancy(batch, 0.0, perms, 3);
  EXPECT_EQ(a.phi, b.phi);
}

// Tower property: the average of n and of w over uniform replays converges
// to phi when proposals and permutations are held fixed.
TEST(BlockOccupancy, UniformReplayAverageMatchesPhi) {
  const auto model = toy_model();
  const std::size_t p = 16;
  const auto batch = generate_batch(model, 2718, 0, p);
  const ChainState start{Point{0.2}, model.log_weight(Point{0.2}), std::nullopt};
  RngStream perm_rng(31);
  const auto perms = random_perms(p, p, perm_rng);
  const auto rb = block_occupancy(batch, start.log_w, perms);

  const int M = 10000;
  std::vector<double> sn(p + 1), sn2(p + 1), sw(p + 1), sw2(p + 1);
  for (int m = 0; m < M; ++m) {
    const auto blk = simulate_block(start, batch, perms, 99, static_cast<std::size_t>(m));
    for (std::size_t k = 0; k <= p; ++k) {
      sn[k] += blk.n[k];
      sn2[k] += double(blk.n[k]) * blk.n[k];
      sw[k] += blk.w[k];
      sw2[k] += blk.w[k] * blk.w[k];
    }
  }
  for (std::size_t k = 0; k <= p; ++k) {
    const double mn = sn[k] / M, mw = sw[k] / M;
    const double se_n = std::sqrt(std::max(sn2[k] / M - mn * mn, 0.0) / M);
    const double se_w = std::sqrt(std::max(sw2[k] / M - mw * mw, 0.0) / M);
    EXPECT_LE(std::abs(mn - rb.phi[k]), 3 * se_n + 1e-12) << "k=" << k;
    EXPECT_LE(std::abs(mw - rb.phi[k]), 3 * se_w + 1e-12) << "k=" << k;
  }
}
