#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bimh/block_engine.hpp"
#include "bimh/models.hpp"
#include "bimh/parallel.hpp"
#include "bimh/rao_blackwell.hpp"

namespace bimh {

// h : point -> R^m. Estimators return one value per output coordinate.
using TestFunction = std::function<std::vector<double>(const Point&)>;

inline TestFunction identity_coordinates() {
  return [](const Point& x) { return std::vector<double>(x.coords().begin(), x.coords().end()); };
}

inline TestFunction second_moment() {
  return [](const Point& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * x[i];
    return out;
  };
}

inline TestFunction test_function_by_name(const std::string& name) {
  if (name == "identity") return identity_coordinates();
  if (name == "second-moment") return second_moment();
  throw std::invalid_argument("unknown test function: " + name);
}

// h evaluated at the p+1 candidates y0..yp of one block (row k = candidate k).
using CandidateValues = std::vector<std::vector<double>>;

inline CandidateValues evaluate_candidates(const TestFunction& h, const BlockResult& block,
                                           const ProposalBatch& batch) {
  CandidateValues out;
  out.reserve(batch.size() + 1);
  out.push_back(h(block.start.value));
  for (const auto& y : batch.points) out.push_back(h(y));
  return out;
}

namespace detail {

inline std::size_t output_dim(std::span<const CandidateValues> cands) {
  if (cands.empty() || cands.front().empty()) throw std::invalid_argument("no candidate values");
  return cands.front().front().size();
}

// Sum over blocks of sum_k weight_k h(y_k), reduced with a fixed pairwise
// tree over blocks, divided by the total mass.
template <typename WeightOf>
std::vector<double> weighted_block_mean(std::span<const CandidateValues> cands, WeightOf&& weight,
                                        double total_mass) {
  const std::size_t m = output_dim(cands);
  std::vector<std::vector<double>> per_block(cands.size(), std::vector<double>(m, 0.0));
  for (std::size_t b = 0; b < cands.size(); ++b) {
    const auto& c = cands[b];
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double wk = weight(b, k);
      if (wk == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) per_block[b][j] += wk * c[k][j];
    }
  }
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j)
    out[j] = pairwise_sum<double>(0, per_block.size(),
                                  [&](std::size_t b) { return per_block[b][j]; }) /
             total_mass;
  return out;
}

inline double block_mass(std::span<const BlockResult> blocks) {
  double mass = 0.0;
  for (const auto& b : blocks) mass += static_cast<double>(b.r * b.p);
  return mass;
}

inline void check_blocks(std::span<const BlockResult> blocks, std::span<const CandidateValues> c) {
  if (blocks.empty() || blocks.size() != c.size())
    throw std::invalid_argument("need candidate values for every block");
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (c[i].size() != blocks[i].p + 1)
      throw std::invalid_argument("candidate values must cover y0..yp");
}

}  // namespace detail

// Plain ergodic average of h along a single chain.
inline std::vector<double> tau1(std::span<const Point> chain, const TestFunction& h) {
  if (chain.empty()) throw std::invalid_argument("tau1 needs a non-empty chain");
  std::vector<std::vector<double>> hv;
  hv.reserve(chain.size());
  for (const auto& x : chain) hv.push_back(h(x));
  const std::size_t m = hv.front().size();
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j)
    out[j] = pairwise_sum<double>(0, hv.size(), [&](std::size_t t) { return hv[t][j]; }) /
             static_cast<double>(hv.size());
  return out;
}

// Occupancy-count estimator: sum_k n_k h(y_k) / (b r p).
inline std::vector<double> tau2(std::span<const BlockResult> blocks,
                                std::span<const CandidateValues> cands) {
  detail::check_blocks(blocks, cands);
  return detail::weighted_block_mean(
      cands, [&](std::size_t b, std::size_t k) { return static_cast<double>(blocks[b].n[k]); },
      detail::block_mass(blocks));
}

// Same estimator computed from the per-chain paths instead of the histogram.
inline std::vector<double> tau2_from_paths(std::span<const BlockResult> blocks,
                                           std::span<const CandidateValues> cands) {
  detail::check_blocks(blocks, cands);
  std::vector<std::vector<double>> counts(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    counts[b].assign(blocks[b].p + 1, 0.0);
    for (std::size_t k = 0; k < blocks[b].r; ++k)
      for (std::size_t t = 0; t < blocks[b].p; ++t) counts[b][blocks[b].state(k, t)] += 1.0;
  }
  return detail::weighted_block_mean(
      cands, [&](std::size_t b, std::size_t k) { return counts[b][k]; },
      detail::block_mass(blocks));
}

// Primary Rao-Blackwell estimator: n replaced by the accumulated weights w.
inline std::vector<double> tau3(std::span<const BlockResult> blocks,
                                std::span<const CandidateValues> cands) {
  detail::check_blocks(blocks, cands);
  return detail::weighted_block_mean(
      cands, [&](std::size_t b, std::size_t k) { return blocks[b].w[k]; },
      detail::block_mass(blocks));
}

// Block Rao-Blackwell estimator: n replaced by the expected occupancy phi.
inline std::vector<double> tau4(std::span<const BlockResult> blocks,
                                std::span<const RbOccupancy> rb,
                                std::span<const CandidateValues> cands) {
  detail::check_blocks(blocks, cands);
  if (rb.size() != blocks.size()) throw std::invalid_argument("need occupancy for every block");
  return detail::weighted_block_mean(
      cands, [&](std::size_t b, std::size_t k) { return rb[b].phi[k]; },
      detail::block_mass(blocks));
}

// Importance sampling over the proposals. Self-normalized by default; with
// normalized_densities the plain (1/T) sum h(y) w(y) form is used, which is
// only meaningful when both log-densities carry their normalizing constants.
inline std::vector<double> tau_is(std::span<const Point> points, std::span<const double> log_ws,
                                  const TestFunction& h, bool normalized_densities = false) {
  if (points.empty() || points.size() != log_ws.size())
    throw std::invalid_argument("tau_is needs matching, non-empty points and log-weights");
  const std::size_t T = points.size();
  const double shift = normalized_densities ? 0.0 : *std::max_element(log_ws.begin(), log_ws.end());

  std::vector<double> wt(T);
  for (std::size_t t = 0; t < T; ++t) wt[t] = std::exp(log_ws[t] - shift);
  std::vector<std::vector<double>> hv;
  hv.reserve(T);
  for (const auto& y : points) hv.push_back(h(y));

  const std::size_t m = hv.front().size();
  const double denom = normalized_densities
                           ? static_cast<double>(T)
                           : pairwise_sum<double>(0, T, [&](std::size_t t) { return wt[t]; });
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j)
    out[j] = pairwise_sum<double>(0, T, [&](std::size_t t) { return wt[t] * hv[t][j]; }) / denom;
  return out;
}

struct EstimatorReport {
  std::vector<double> tau1, tau2, tau3, tau4, tau_is;
  std::size_t p = 0, b = 0, r = 0;
  PermutationScheme scheme = PermutationScheme::Random;
  std::uint64_t seed = 0;
};

// All five estimators from one block run. tau1 uses the standard IMH over
// the same proposals and the first uniform row of every block.
inline EstimatorReport estimate_all(const BlockImhRun& run, const TestFunction& h,
                                    const BlockImhConfig& cfg, bool normalized_densities = false,
                                    std::size_t burn_in_blocks = 0) {
  if (burn_in_blocks >= run.blocks.size())
    throw std::invalid_argument("burn-in discards every block");
  const std::size_t first = burn_in_blocks;
  const std::size_t nb = run.blocks.size() - first;

  std::span<const BlockResult> blocks(run.blocks.data() + first, nb);
  std::vector<CandidateValues> cands;
  std::vector<RbOccupancy> rb;
  std::vector<Point> proposals;
  std::vector<double> proposal_lw;
  for (std::size_t i = first; i < run.blocks.size(); ++i) {
    cands.push_back(evaluate_candidates(h, run.blocks[i], run.batches[i]));
    rb.push_back(block_occupancy(run.blocks[i], run.batches[i], run.permutations[i], cfg.workers));
    proposals.insert(proposals.end(), run.batches[i].points.begin(), run.batches[i].points.end());
    proposal_lw.insert(proposal_lw.end(), run.batches[i].log_ws.begin(),
                       run.batches[i].log_ws.end());
  }

  const auto standard = replay_standard_imh(run.initial, run.batches, cfg.seed);
  std::span<const Point> kept(standard.states.data() + first * cfg.p, nb * cfg.p);

  EstimatorReport rep;
  rep.tau1 = tau1(kept, h);
  rep.tau2 = tau2(blocks, cands);
  rep.tau3 = tau3(blocks, cands);
  rep.tau4 = tau4(blocks, rb, cands);
  rep.tau_is = tau_is(proposals, proposal_lw, h, normalized_densities);
  rep.p = cfg.p;
  rep.b = run.blocks.size();
  rep.r = cfg.rows();
  rep.scheme = cfg.scheme;
  rep.seed = cfg.seed;
  return rep;
}

}  // namespace bimh
