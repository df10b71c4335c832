#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fls/instance.hpp"

namespace fls {

struct SeedConfig {
  std::uint64_t seed = 1;
  int trials = 1;  // independent repetitions, best kept
};

// k-means++ seeding on the discrete candidate set. Returns the best of
// `config.trials` runs, each on its own RNG stream.
Solution dsquared_seed(const Instance& instance, const SeedConfig& config);

// One D^2-sampling run extending `initial` to k centers. Sampled clients
// are mapped to their nearest unchosen candidate.
std::vector<int> dsquared_extend(const Instance& instance, std::vector<int> initial,
                                 std::mt19937_64& rng);

struct SearchResult {
  Solution solution;
  std::vector<double> trajectory;  // total cost after each accepted step, starting cost first
  int iterations = 0;
};

// Lloyd iterations with means snapped to the nearest candidate.
SearchResult lloyd_refine(const Instance& instance, const Solution& start, int max_iters);

// Best-improvement local search closing up to `swap_size` centers and
// opening up to as many, while the gain exceeds stop_ratio * cost / k.
SearchResult exhaustive_swap_search(const Instance& instance, const Solution& start,
                                    int swap_size, double stop_ratio);

struct Move {
  std::vector<int> removed;
  std::vector<int> added;
  double improvement = 0.0;
  Solution result;
};

// Every move with |removed| <= swap_size, |added| <= swap_size and a
// nonempty result of at most k centers. Throws BudgetExceeded when the
// number of moves would exceed `move_budget`.
Move best_swap_move(const Instance& instance, const Solution& current, int swap_size,
                    std::uint64_t move_budget = 50'000'000);

std::uint64_t count_swap_moves(const Instance& instance, const Solution& current,
                               int swap_size);

}  // namespace fls
