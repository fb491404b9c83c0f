#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bimh/imh.hpp"
#include "bimh/models.hpp"
#include "bimh/parallel.hpp"
#include "bimh/permutations.hpp"
#include "bimh/rng.hpp"

namespace bimh {

// The p proposals of one block with their log-weights. Producing this is the
// expensive, embarrassingly parallel part of a block.
struct ProposalBatch {
  std::vector<Point> points;
  std::vector<double> log_ws;

  std::size_t size() const noexcept { return points.size(); }
};

// Proposals are drawn sequentially from the block's proposal stream (cheap);
// log-weights are evaluated on `workers` threads.
inline ProposalBatch generate_batch(const ModelPair& model, std::uint64_t seed, std::size_t block,
                                    std::size_t p, std::size_t workers = 1) {
  ProposalBatch batch;
  batch.points.reserve(p);
  auto rng = substream(seed, StreamTag::Proposal, block);
  for (std::size_t k = 0; k < p; ++k) batch.points.push_back(model.sample_proposal(rng));
  batch.log_ws.assign(p, 0.0);
  parallel_for(p, workers,
               [&](std::size_t k) { batch.log_ws[k] = model.log_weight(batch.points[k]); });
  return batch;
}

// The p uniforms consumed by chain `chain` of block `block`.
inline std::vector<double> uniform_row(std::uint64_t seed, std::size_t block, std::size_t chain,
                                       std::size_t p) {
  auto rng = substream(seed, StreamTag::Uniform, block, chain);
  std::vector<double> u(p);
  for (auto& v : u) v = rng.uniform();
  return u;
}

// Outcome of one r x p block. Chain states are stored as candidate labels in
// {0, ..., p}: 0 is the block start y0, k is the proposal y_k.
struct BlockResult {
  std::size_t p = 0;
  std::size_t r = 0;
  ChainState start;
  std::vector<int> n;             // occupancy counts, length p+1
  std::vector<double> w;          // primary Rao-Blackwell weights, length p+1
  std::vector<int> index_matrix;  // r x p, row-major; entry (k, t) is the state after step t
  ChainState next_start;
  std::size_t chosen_chain = 1;  // 1-based
  std::size_t accepted_moves = 0;

  int state(std::size_t chain, std::size_t t) const { return index_matrix[chain * p + t]; }

  // Log-weight of candidate k.
  double candidate_log_w(const ProposalBatch& batch, std::size_t k) const {
    return k == 0 ? start.log_w : batch.log_ws[k - 1];
  }
};

inline const Point& candidate_point(const BlockResult& block, const ProposalBatch& batch,
                                    std::size_t k) {
  return k == 0 ? block.start.value : batch.points[k - 1];
}

namespace detail {

inline void check_block_inputs(const ProposalBatch& batch, const PermutationSet& perms) {
  if (batch.points.size() != batch.log_ws.size())
    throw std::invalid_argument("proposal batch has mismatched sizes");
  if (perms.r() == 0 || perms.p() != batch.size())
    throw std::invalid_argument("permutation length does not match the proposal batch");
}

}  // namespace detail

// Replays the block's proposals through one IMH chain per permutation, with
// the supplied uniforms (uniforms[k] drives chain k), and continues from the
// final state of chain `chosen_chain` (0-based).
inline BlockResult simulate_block(const ChainState& start, const ProposalBatch& batch,
                                  const PermutationSet& perms,
                                  const std::vector<std::vector<double>>& uniforms,
                                  std::size_t chosen_chain, std::size_t workers = 1) {
  detail::check_block_inputs(batch, perms);
  const std::size_t p = batch.size();
  const std::size_t r = perms.r();
  if (uniforms.size() != r) throw std::invalid_argument("need one uniform row per chain");
  if (chosen_chain >= r) throw std::invalid_argument("chosen chain out of range");

  std::vector<double> lw(p + 1);
  lw[0] = start.log_w;
  for (std::size_t k = 0; k < p; ++k) lw[k + 1] = batch.log_ws[k];

  BlockResult out;
  out.p = p;
  out.r = r;
  out.start = start;
  out.start.source_index = 0;
  out.index_matrix.assign(r * p, 0);

  std::vector<std::vector<double>> w_chain(r, std::vector<double>(p + 1, 0.0));
  std::vector<std::size_t> accepted(r, 0);

  parallel_for(r, workers, [&](std::size_t k) {
    const auto& order = perms.perms[k];
    const auto& u = uniforms[k];
    if (u.size() != p) throw std::invalid_argument("uniform row has wrong length");
    auto& wk = w_chain[k];
    int cur = 0;
    for (std::size_t t = 0; t < p; ++t) {
      const int i = order[t];
      const double rho = acceptance_prob(lw[cur], lw[i]);
      wk[cur] += 1.0 - rho;
      wk[i] += rho;
      if (u[t] < rho) {
        cur = i;
        ++accepted[k];
      }
      out.index_matrix[k * p + t] = cur;
    }
  });

  out.n.assign(p + 1, 0);
  for (int idx : out.index_matrix) ++out.n[idx];
  out.w.assign(p + 1, 0.0);
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j <= p; ++j) out.w[j] += w_chain[k][j];
  for (auto a : accepted) out.accepted_moves += a;

  out.chosen_chain = chosen_chain + 1;
  const int last = out.index_matrix[chosen_chain * p + (p - 1)];
  out.next_start = ChainState{candidate_point(out, batch, static_cast<std::size_t>(last)), lw[last],
                              last};
  return out;
}

// Same as above, drawing every uniform from the block's named substreams and
// the continuing chain uniformly among the r endpoints.
inline BlockResult simulate_block(const ChainState& start, const ProposalBatch& batch,
                                  const PermutationSet& perms, std::uint64_t seed,
                                  std::size_t block, std::size_t workers = 1) {
  detail::check_block_inputs(batch, perms);
  const std::size_t r = perms.r();
  std::vector<std::vector<double>> uniforms(r);
  for (std::size_t k = 0; k < r; ++k) uniforms[k] = uniform_row(seed, block, k, batch.size());
  auto pick = substream(seed, StreamTag::Transition, block);
  const auto j = static_cast<std::size_t>(pick.uniform() * static_cast<double>(r));
  return simulate_block(start, batch, perms, uniforms, j, workers);
}

struct BlockImhConfig {
  std::size_t p = 16;
  std::size_t r = 0;  // 0 means square blocks (r = p)
  std::size_t blocks = 1;
  PermutationScheme scheme = PermutationScheme::Random;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  std::size_t rows() const noexcept { return r == 0 ? p : r; }
};

struct BlockImhRun {
  ChainState initial;
  std::vector<ProposalBatch> batches;
  std::vector<PermutationSet> permutations;
  std::vector<BlockResult> blocks;
  std::vector<Point> selected_chain;  // length b * p
  std::size_t selected_accepted = 0;

  double acceptance_rate() const {
    return selected_chain.empty() ? 0.0
                                  : static_cast<double>(selected_accepted) /
                                        static_cast<double>(selected_chain.size());
  }

  // Fraction of accepted moves over all r * p * b within-block steps.
  double block_acceptance_rate() const {
    std::size_t acc = 0, total = 0;
    for (const auto& blk : blocks) {
      acc += blk.accepted_moves;
      total += blk.r * blk.p;
    }
    return total == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(total);
  }
};

namespace detail {

inline void check_config(const BlockImhConfig& cfg) {
  if (cfg.p < 1) throw std::invalid_argument("block size p must be >= 1");
  if (cfg.blocks < 1) throw std::invalid_argument("number of blocks must be >= 1");
}

inline void append_selected(BlockImhRun& run, const BlockResult& blk, const ProposalBatch& batch) {
  const std::size_t row = blk.chosen_chain - 1;
  int prev = 0;
  for (std::size_t t = 0; t < blk.p; ++t) {
    const int idx = blk.state(row, t);
    if (idx != prev) ++run.selected_accepted;
    prev = idx;
    run.selected_chain.push_back(candidate_point(blk, batch, static_cast<std::size_t>(idx)));
  }
}

}  // namespace detail

// Block IMH over pre-evaluated proposal batches. Permutations and uniforms
// come from the substreams of cfg.seed.
inline BlockImhRun run_block_imh(const ChainState& start, std::vector<ProposalBatch> batches,
                                 const BlockImhConfig& cfg) {
  detail::check_config(cfg);
  if (batches.size() != cfg.blocks) throw std::invalid_argument("need one batch per block");
  BlockImhRun run;
  run.initial = start;
  run.batches = std::move(batches);
  run.blocks.reserve(cfg.blocks);
  run.permutations.reserve(cfg.blocks);
  run.selected_chain.reserve(cfg.blocks * cfg.p);

  ChainState current = start;
  for (std::size_t i = 0; i < cfg.blocks; ++i) {
    const auto& batch = run.batches[i];
    if (batch.size() != cfg.p) throw std::invalid_argument("batch size differs from p");
    auto perm_rng = substream(cfg.seed, StreamTag::Permutation, i);
    run.permutations.push_back(make_permutations(cfg.scheme, cfg.p, cfg.rows(), perm_rng));
    run.blocks.push_back(simulate_block(current, batch, run.permutations.back(), cfg.seed, i,
                                        cfg.workers));
    detail::append_selected(run, run.blocks.back(), batch);
    current = run.blocks.back().next_start;
  }
  return run;
}

// Full block IMH: b * p proposals generated and evaluated block by block,
// plus one evaluation for x0.
inline BlockImhRun run_block_imh(const ModelPair& model, const Point& x0,
                                 const BlockImhConfig& cfg) {
  detail::check_config(cfg);
  const ChainState start = initial_state(model, x0);
  std::vector<ProposalBatch> batches;
  batches.reserve(cfg.blocks);
  for (std::size_t i = 0; i < cfg.blocks; ++i)
    batches.push_back(generate_batch(model, cfg.seed, i, cfg.p, cfg.workers));
  return run_block_imh(start, std::move(batches), cfg);
}

// Standard IMH over the same proposals in their original order, using the
// first uniform row of every block. This is the single-chain baseline that
// shares all random numbers with the block run of the same seed.
inline ChainRun replay_standard_imh(const ChainState& start,
                                    const std::vector<ProposalBatch>& batches,
                                    std::uint64_t seed) {
  ChainRun out;
  ChainState state = start;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const auto& batch = batches[i];
    const auto u = uniform_row(seed, i, 0, batch.size());
    for (std::size_t t = 0; t < batch.size(); ++t) {
      auto step = imh_step(state, batch.points[t], batch.log_ws[t], static_cast<int>(t + 1), u[t]);
      state = std::move(step.state);
      out.states.push_back(state.value);
      out.trace.accepted.push_back(step.accepted ? 1 : 0);
      out.trace.acceptance_probs.push_back(step.rho);
    }
  }
  return out;
}

inline ChainRun run_standard_imh(const ModelPair& model, const Point& x0, std::size_t p,
                                 std::size_t blocks, std::uint64_t seed,
                                 std::size_t workers = 1) {
  if (p < 1 || blocks < 1) throw std::invalid_argument("p and blocks must be >= 1");
  const ChainState start = initial_state(model, x0);
  std::vector<ProposalBatch> batches;
  batches.reserve(blocks);
  for (std::size_t i = 0; i < blocks; ++i)
    batches.push_back(generate_batch(model, seed, i, p, workers));
  return replay_standard_imh(start, batches, seed);
}

}  // namespace bimh
