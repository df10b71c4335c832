#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fls/instance.hpp"

namespace fls::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
};

// Tiny unweighted d=2 instance of the oracle-sized family:
// k <= 3, at most 12 distinct clients, at most 10 candidates.
Instance tiny_instance(std::uint64_t seed);

CriterionResult approximation_vs_opt();     // 1
CriterionResult dp_near_optimality();       // 2
CriterionResult moat_probability();         // 3
CriterionResult termination_bound();        // 4
CriterionResult weight_rounding();          // 5
CriterionResult structural_invariants();    // 6
CriterionResult runtime_scaling();          // 7
CriterionResult baseline_sanity();          // 8

struct Criterion {
  int id;
  std::function<CriterionResult()> run;
};
const std::vector<Criterion>& criteria();

// Runs the selected criteria (all when `ids` is empty), printing one
// PASS/FAIL line each; returns the results.
std::vector<CriterionResult> run_all(const std::vector<int>& ids, std::ostream& out);

}  // namespace fls::acceptance
