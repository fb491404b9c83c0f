#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bimh/models.hpp"
#include "bimh/rng.hpp"

namespace bimh {

struct ChainState {
  Point value;
  double log_w = 0.0;  // cached log-weight of value, never recomputed
  // Candidate label inside a block: 0 is the block start, k the k-th proposal.
  std::optional<int> source_index;
};

struct AcceptanceTrace {
  std::vector<char> accepted;
  std::vector<double> acceptance_probs;

  std::size_t size() const noexcept { return accepted.size(); }
  double acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    std::size_t n = 0;
    for (char a : accepted) n += a != 0;
    return static_cast<double>(n) / static_cast<double>(accepted.size());
  }
};

// min{1, w_proposed / w_current} evaluated in log space.
inline double acceptance_prob(double log_w_current, double log_w_proposed) {
  return std::exp(std::min(0.0, log_w_proposed - log_w_current));
}

struct StepResult {
  ChainState state;
  bool accepted = false;
  double rho = 0.0;
};

// One independent Metropolis-Hastings transition. Accepts iff u < rho.
inline StepResult imh_step(const ChainState& state, const Point& proposal, double proposal_log_w,
                           std::optional<int> proposal_index, double u) {
  const double rho = acceptance_prob(state.log_w, proposal_log_w);
  if (u < rho) return {ChainState{proposal, proposal_log_w, proposal_index}, true, rho};
  return {state, false, rho};
}

struct ChainRun {
  std::vector<Point> states;  // x_1..x_T (the start is not included)
  AcceptanceTrace trace;
};

inline ChainState initial_state(const ModelPair& model, const Point& x0) {
  return ChainState{x0, model.log_weight(x0), std::nullopt};
}

// Sequential IMH of length T. Each step draws the proposal and then the
// uniform from the same stream.
inline ChainRun run_chain(const ModelPair& model, const Point& x0, std::size_t T, RngStream& rng) {
  if (T < 1) throw std::invalid_argument("chain length must be >= 1");
  ChainRun out;
  out.states.reserve(T);
  out.trace.accepted.reserve(T);
  out.trace.acceptance_probs.reserve(T);

  ChainState state = initial_state(model, x0);
  for (std::size_t t = 0; t < T; ++t) {
    Point y = model.sample_proposal(rng);
    const double lw = model.log_weight(y);
    const double u = rng.uniform();
    auto step = imh_step(state, y, lw, std::nullopt, u);
    state = std::move(step.state);
    out.states.push_back(state.value);
    out.trace.accepted.push_back(step.accepted ? 1 : 0);
    out.trace.acceptance_probs.push_back(step.rho);
  }
  return out;
}

}  // namespace bimh
