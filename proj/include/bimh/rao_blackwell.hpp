#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "bimh/block_engine.hpp"
#include "bimh/parallel.hpp"
#include "bimh/permutations.hpp"

namespace bimh {

// Dense (p+1) x (p+1) square table; only entries with row <= col are used.
class TriangularTable {
 public:
  TriangularTable() = default;
  explicit TriangularTable(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t t, std::size_t u) const { return data_[t * n_ + u]; }
  double& operator()(std::size_t t, std::size_t u) { return data_[t * n_ + u]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// rho(t, u) = min{1, w_u / w_t} for 0 <= t < u <= p, with log_ws in chain order
// (index 0 is the block start).
inline TriangularTable pairwise_rho(std::span<const double> log_ws) {
  const std::size_t n = log_ws.size();
  TriangularTable rho(n, 1.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t u = t + 1; u < n; ++u)
      rho(t, u) = std::exp(std::min(0.0, log_ws[u] - log_ws[t]));
  return rho;
}

struct OccupancyTables {
  std::vector<double> phi;     // expected occupancy per chain position, sums to p
  std::vector<double> deltas;  // delta_t: probability that y_t is accepted
  TriangularTable xis;         // xi(t, j): probability y_t survives steps t+1..j
};

namespace detail {
inline constexpr double kFlushToZero = 1e-300;
inline double flush(double v) { return v < kFlushToZero ? 0.0 : v; }
}  // namespace detail

// Expected number of times each chain position is occupied over the p steps,
// with the uniforms integrated out:
//   xi(t, t) = 1,  xi(t, j) = prod_{u=t+1..j} (1 - rho(t, u))
//   delta_0 = 1,   delta_t = sum_{j<t} delta_j xi(j, t-1) rho(j, t)
//   phi_t = delta_t sum_{j=t..p} xi(t, j)   for t >= 1
//   phi_0 = sum_{j=1..p} xi(0, j)            (time 0 itself is not counted)
inline OccupancyTables occupancy_tables(const TriangularTable& rho) {
  const std::size_t n = rho.size();
  if (n < 1) throw std::invalid_argument("rho table must have at least one row");
  const std::size_t p = n - 1;

  OccupancyTables out;
  out.xis = TriangularTable(n, 0.0);
  for (std::size_t t = 0; t <= p; ++t) {
    out.xis(t, t) = 1.0;
    for (std::size_t j = t + 1; j <= p; ++j)
      out.xis(t, j) = detail::flush(out.xis(t, j - 1) * (1.0 - rho(t, j)));
  }

  out.deltas.assign(n, 0.0);
  out.deltas[0] = 1.0;
  for (std::size_t t = 1; t <= p; ++t) {
    double d = 0.0;
    for (std::size_t j = 0; j < t; ++j) d += out.deltas[j] * out.xis(j, t - 1) * rho(j, t);
    out.deltas[t] = detail::flush(d);
  }

  out.phi.assign(n, 0.0);
  for (std::size_t t = 0; t <= p; ++t) {
    double tail = 0.0;
    for (std::size_t j = (t == 0 ? 1 : t); j <= p; ++j) tail += out.xis(t, j);
    out.phi[t] = out.deltas[t] * tail;
  }
  return out;
}

inline std::vector<double> occupancy_one_chain(const TriangularTable& rho) {
  return occupancy_tables(rho).phi;
}

struct RbOccupancy {
  std::vector<std::vector<double>> phi_per_chain;  // original candidate labels
  std::vector<double> phi;                         // sum over chains, total r * p
  std::vector<std::vector<double>> deltas;         // per chain, chain order
};

// Runs the occupancy recursion along every permuted chain and maps the result
// back to candidate labels. O(r p^2) time; chains may run on separate workers.
inline RbOccupancy block_occupancy(const ProposalBatch& batch, double start_log_w,
                                   const PermutationSet& perms, std::size_t workers = 1) {
  const std::size_t p = batch.size();
  const std::size_t r = perms.r();
  if (r == 0 || perms.p() != p)
    throw std::invalid_argument("permutation length does not match the proposal batch");

  RbOccupancy out;
  out.phi_per_chain.assign(r, std::vector<double>(p + 1, 0.0));
  out.deltas.assign(r, {});

  parallel_for(r, workers, [&](std::size_t k) {
    const auto& order = perms.perms[k];
    std::vector<double> chain_lw(p + 1);
    chain_lw[0] = start_log_w;
    for (std::size_t t = 0; t < p; ++t) chain_lw[t + 1] = batch.log_ws[order[t] - 1];
    auto tables = occupancy_tables(pairwise_rho(chain_lw));
    auto& dst = out.phi_per_chain[k];
    dst[0] = tables.phi[0];
    for (std::size_t t = 0; t < p; ++t) dst[order[t]] = tables.phi[t + 1];
    out.deltas[k] = std::move(tables.deltas);
  });

  out.phi.assign(p + 1, 0.0);
  for (const auto& chain : out.phi_per_chain)
    for (std::size_t j = 0; j <= p; ++j) out.phi[j] += chain[j];
  return out;
}

inline RbOccupancy block_occupancy(const BlockResult& block, const ProposalBatch& batch,
                                   const PermutationSet& perms, std::size_t workers = 1) {
  return block_occupancy(batch, block.start.log_w, perms, workers);
}

}  // namespace bimh
