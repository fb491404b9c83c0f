#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bimh/rng.hpp"

namespace bimh {

class NonFiniteDensity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A state of the chain or a proposed value.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) {}
  Point(std::initializer_list<double> coords) : coords_(coords) {}

  std::size_t size() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }

  bool is_finite() const {
    for (double c : coords_)
      if (!std::isfinite(c)) return false;
    return true;
  }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<double> coords_;
};

// Target/proposal bundle. Densities are unnormalized natural-log densities;
// only differences of log-weights ever enter the sampler.
//
// All callables must be safe to invoke concurrently on distinct inputs.
struct ModelPair {
  std::function<double(const Point&)> log_target;
  std::function<double(const Point&)> log_proposal;
  std::function<Point(RngStream&)> sample_proposal;
  std::size_t dimension = 1;

  // Deterministic fallback start (e.g. the proposal centre).
  Point initial_point;
  // Optional exact sampler for the target, used for stationary starts.
  std::function<Point(RngStream&)> sample_target;

  // Counts log_target evaluations made through log_weight().
  std::shared_ptr<std::atomic<std::uint64_t>> target_calls =
      std::make_shared<std::atomic<std::uint64_t>>(0);

  // log pi(x) - log mu(x). Throws NonFiniteDensity when the proposal density
  // vanishes at x.
  double log_weight(const Point& x) const {
    const double lq = log_proposal(x);
    if (!(lq > -std::numeric_limits<double>::infinity()) || std::isnan(lq))
      throw NonFiniteDensity("proposal log-density is not finite at the given point");
    target_calls->fetch_add(1, std::memory_order_relaxed);
    return log_target(x) - lq;
  }

  std::uint64_t target_evaluations() const {
    return target_calls->load(std::memory_order_relaxed);
  }
  void reset_target_evaluations() const { target_calls->store(0); }
};

inline double log_weight(const ModelPair& model, const Point& x) {
  return model.log_weight(x);
}

// N(0,1) target with a C(0,1) proposal:
//   log pi(x) = -x^2/2,  log mu(x) = -log(1 + x^2),
// so log w(x) = log(1 + x^2) - x^2/2 with all constants dropped.
inline ModelPair toy_model() {
  ModelPair m;
  m.log_target = [](const Point& x) { return -0.5 * x[0] * x[0]; };
  m.log_proposal = [](const Point& x) { return -std::log1p(x[0] * x[0]); };
  m.sample_proposal = [](RngStream& rng) { return Point{rng.cauchy()}; };
  m.sample_target = [](RngStream& rng) { return Point{rng.normal()}; };
  m.dimension = 1;
  m.initial_point = Point{0.0};
  return m;
}

}  // namespace bimh
