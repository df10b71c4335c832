#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fls/dissection.hpp"
#include "fls/find_improvement.hpp"
#include "fls/instance.hpp"

namespace fls {

struct DriverConfig {
  std::optional<double> epsilon;  // defaults to the instance's epsilon
  int delta = 2;
  std::optional<double> gamma;    // defaults to default_gamma(eps, log n, gamma_exponent)
  int gamma_exponent = 13;
  std::optional<int> retries;     // dissections per iteration
  double retries_factor = 1.0;    // retries = max(3, ceil(factor * log2 k)) when unset
  std::uint64_t seed = 1;
  DpProfile profile = DpProfile::Desk;
  int seed_trials = 1;
  int max_iterations = 10'000;
  LeafRule leaf_rule = LeafRule::OneCandidate;
  bool round_opening_costs = true;
  int threads = 1;  // dissection trials evaluated concurrently
};

struct IterationRecord {
  int iteration = 0;
  double cost_before = 0.0;
  std::vector<double> trial_costs;  // best cost found on each dissection
  double best_improvement = 0.0;
  double threshold = 0.0;
  bool applied = false;    // the best trial replaced the current solution
  bool continued = false;  // improvement exceeded the threshold, loop goes on
  double cost_after = 0.0;
  std::vector<int> removed;
  std::vector<int> added;
  double wall_ms = 0.0;
};

struct DriverTrace {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double gamma = 0.0;
  int retries = 0;
  std::vector<IterationRecord> iterations;

  int applied_steps() const;
  std::string to_json() const;
};

struct DriverResult {
  Solution solution;  // evaluated on the original opening costs
  Solution rounded;   // the same centers under rounded opening costs
  DriverTrace trace;
};

int default_retries(int k, double factor);

// Local search from a D^2 seed: each iteration draws `retries` shifted
// dissections, runs the improvement DP on each and moves to the best result;
// the loop stops after the first iteration whose improvement is at most
// eps * cost / k, cost taken before the move.
DriverResult run_local_search(const Instance& instance, const DriverConfig& config);

// Continue from an explicit starting solution on the given instance.
DriverResult run_local_search_from(const Instance& instance, const Solution& start,
                                   const DriverConfig& config);

// Largest improvement of any swap closing and opening at most swap_size
// centers each (0 at an exact local optimum). Throws BudgetExceeded.
double verify_local_optimality(const Instance& instance, const Solution& solution,
                               int swap_size, std::uint64_t move_budget = 50'000'000);

}  // namespace fls
