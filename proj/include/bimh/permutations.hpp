#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bimh/rng.hpp"

namespace bimh {

enum class PermutationScheme { SameOrder, Circular, Random, HalfRandomHalfReversed, Stratified };

inline constexpr std::array<PermutationScheme, 5> kAllSchemes = {
    PermutationScheme::SameOrder, PermutationScheme::Circular, PermutationScheme::Random,
    PermutationScheme::HalfRandomHalfReversed, PermutationScheme::Stratified};

inline std::string_view to_string(PermutationScheme s) {
  switch (s) {
    case PermutationScheme::SameOrder: return "same";
    case PermutationScheme::Circular: return "circular";
    case PermutationScheme::Random: return "random";
    case PermutationScheme::HalfRandomHalfReversed: return "half-reversed";
    case PermutationScheme::Stratified: return "stratified";
  }
  return "unknown";
}

inline PermutationScheme parse_scheme(std::string_view name) {
  for (auto s : kAllSchemes)
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown permutation scheme: " + std::string(name));
}

// r orderings of the block's proposals. Entries are 1-based proposal indices.
struct PermutationSet {
  std::vector<std::vector<int>> perms;
  PermutationScheme scheme = PermutationScheme::SameOrder;

  std::size_t r() const noexcept { return perms.size(); }
  std::size_t p() const noexcept { return perms.empty() ? 0 : perms.front().size(); }

  bool is_valid() const {
    if (perms.empty()) return false;
    const std::size_t n = p();
    std::vector<int> sorted;
    for (const auto& row : perms) {
      if (row.size() != n) return false;
      sorted = row;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < n; ++i)
        if (sorted[i] != static_cast<int>(i) + 1) return false;
    }
    return true;
  }
};

namespace detail {

inline void require_size(std::size_t p, std::size_t r) {
  if (p < 1) throw std::invalid_argument("permutation length p must be >= 1");
  if (r < 1) throw std::invalid_argument("number of permutations r must be >= 1");
}

inline std::vector<int> identity(std::size_t p) {
  std::vector<int> v(p);
  std::iota(v.begin(), v.end(), 1);
  return v;
}

// Fisher-Yates with explicit bounded draws, so the output is identical on
// every standard library.
inline void shuffle(std::vector<int>::iterator first, std::vector<int>::iterator last,
                    RngStream& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                   first + static_cast<std::ptrdiff_t>(j));
  }
}

}  // namespace detail

inline PermutationSet same_order(std::size_t p, std::size_t r) {
  detail::require_size(p, r);
  return {std::vector<std::vector<int>>(r, detail::identity(p)), PermutationScheme::SameOrder};
}

// Row i starts at proposal i and wraps around. With r > p the rows cycle.
inline PermutationSet circular(std::size_t p, std::size_t r = 0) {
  if (r == 0) r = p;
  detail::require_size(p, r);
  PermutationSet set{{}, PermutationScheme::Circular};
  set.perms.reserve(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::vector<int> row(p);
    for (std::size_t j = 0; j < p; ++j) row[j] = static_cast<int>((i + j) % p) + 1;
    set.perms.push_back(std::move(row));
  }
  return set;
}

// Independent uniform shuffles, drawn with replacement.
inline PermutationSet random_perms(std::size_t p, std::size_t r, RngStream& rng) {
  detail::require_size(p, r);
  PermutationSet set{{}, PermutationScheme::Random};
  set.perms.reserve(r);
  for (std::size_t k = 0; k < r; ++k) {
    auto row = detail::identity(p);
    detail::shuffle(row.begin(), row.end(), rng);
    set.perms.push_back(std::move(row));
  }
  return set;
}

// r/2 random shuffles followed by their reversals.
inline PermutationSet half_random_half_reversed(std::size_t p, RngStream& rng, std::size_t r = 0) {
  if (r == 0) r = p;
  detail::require_size(p, r);
  if (r % 2 != 0)
    throw std::invalid_argument("half-reversed scheme needs an even number of permutations");
  PermutationSet set = random_perms(p, r / 2, rng);
  set.scheme = PermutationScheme::HalfRandomHalfReversed;
  for (std::size_t k = 0; k < r / 2; ++k) {
    std::vector<int> rev(set.perms[k].rbegin(), set.perms[k].rend());
    set.perms.push_back(std::move(rev));
  }
  return set;
}

// Row k begins with proposal k; the tail is a uniform shuffle of the rest.
inline PermutationSet stratified(std::size_t p, RngStream& rng, std::size_t r = 0) {
  if (r == 0) r = p;
  detail::require_size(p, r);
  PermutationSet set{{}, PermutationScheme::Stratified};
  set.perms.reserve(r);
  for (std::size_t k = 0; k < r; ++k) {
    const int first = static_cast<int>(k % p) + 1;
    std::vector<int> row;
    row.reserve(p);
    row.push_back(first);
    for (int v = 1; v <= static_cast<int>(p); ++v)
      if (v != first) row.push_back(v);
    detail::shuffle(row.begin() + 1, row.end(), rng);
    set.perms.push_back(std::move(row));
  }
  return set;
}

inline PermutationSet make_permutations(PermutationScheme scheme, std::size_t p, std::size_t r,
                                        RngStream& rng) {
  switch (scheme) {
    case PermutationScheme::SameOrder: return same_order(p, r);
    case PermutationScheme::Circular: return circular(p, r);
    case PermutationScheme::Random: return random_perms(p, r, rng);
    case PermutationScheme::HalfRandomHalfReversed: return half_random_half_reversed(p, rng, r);
    case PermutationScheme::Stratified: return stratified(p, rng, r);
  }
  throw std::invalid_argument("unknown permutation scheme");
}

}  // namespace bimh
