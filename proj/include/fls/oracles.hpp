#pragma once

#include <cstdint>
#include <vector>

#include "fls/instance.hpp"

namespace fls {

struct OracleBudget {
  std::uint64_t max_subsets = 20'000'000;
  double time_limit_s = 60.0;
};

// Exact optimum by enumeration: all k-subsets when opening costs are zero,
// otherwise all nonempty subsets of size at most k. Throws BudgetExceeded.
Solution exact_opt(const Instance& instance, const OracleBudget& budget = {});

struct DeltaOptimum {
  Solution solution;
  std::vector<int> removed;
  std::vector<int> added;
  double improvement = 0.0;  // base cost minus best cost, >= 0
  std::uint64_t evaluated = 0;
};

// Best solution reachable from `base` by closing up to delta centers and
// opening up to delta - |closed| others, never touching `forbidden`.
DeltaOptimum exact_opt_delta(const Instance& instance, const std::vector<int>& base, int delta,
                             const std::vector<int>& forbidden,
                             const OracleBudget& budget = {});

}  // namespace fls
