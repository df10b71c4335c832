#include "fls/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fls/combinatorics.hpp"
#include "fls/rng.hpp"

namespace fls {
namespace {

int nearest_unchosen(const Instance& instance, const std::vector<double>& target,
                     const std::vector<char>& chosen) {
  const auto& cands = instance.candidates();
  double best = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  for (std::size_t c = 0; c < cands.size(); ++c) {
    if (chosen[c]) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double diff = static_cast<double>(cands[c].position.coords[i]) - target[i];
      s += diff * diff;
    }
    if (s < best) {
      best = s;
      best_idx = static_cast<int>(c);
    }
  }
  return best_idx;
}

std::vector<double> as_real(const Point& p) {
  return {p.coords.begin(), p.coords.end()};
}

}  // namespace

std::vector<int> dsquared_extend(const Instance& instance, std::vector<int> initial,
                                 std::mt19937_64& rng) {
  const auto& clients = instance.clients();
  const auto& cands = instance.candidates();
  const std::size_t k = static_cast<std::size_t>(instance.k());
  if (k > cands.size()) throw Error("dsquared_seed: fewer than k distinct candidates");

  std::vector<char> chosen(cands.size(), 0);
  for (int c : initial) chosen.at(static_cast<std::size_t>(c)) = 1;

  auto pick_uniform_unchosen = [&] {
    std::vector<int> pool;
    for (std::size_t c = 0; c < cands.size(); ++c)
      if (!chosen[c]) pool.push_back(static_cast<int>(c));
    std::uniform_int_distribution<std::size_t> u(0, pool.size() - 1);
    return pool[u(rng)];
  };
  auto add = [&](int c) {
    chosen[static_cast<std::size_t>(c)] = 1;
    initial.push_back(c);
  };

  if (initial.empty() && k > 0) {
    if (clients.empty()) {
      add(pick_uniform_unchosen());
    } else {
      std::uniform_int_distribution<std::size_t> u(0, clients.size() - 1);
      add(nearest_unchosen(instance, as_real(clients[u(rng)]), chosen));
    }
  }

  const int p = instance.exponent();
  std::vector<double> weight(clients.size(), std::numeric_limits<double>::infinity());
  std::size_t seen = 0;
  while (initial.size() < k) {
    for (; seen < initial.size(); ++seen) {
      const Point& c = cands[static_cast<std::size_t>(initial[seen])].position;
      for (std::size_t a = 0; a < clients.size(); ++a)
        weight[a] = std::min(weight[a], power_distance(squared_distance(clients[a], c), p));
    }
    double total = 0.0;
    for (double w : weight) total += w;
    if (!(total > 0.0)) {
      add(pick_uniform_unchosen());
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    const double r = u(rng);
    double acc = 0.0;
    std::size_t pick = clients.size() - 1;
    for (std::size_t a = 0; a < clients.size(); ++a) {
      acc += weight[a];
      if (r < acc && weight[a] > 0.0) {
        pick = a;
        break;
      }
    }
    while (weight[pick] == 0.0 && pick > 0) --pick;
    add(nearest_unchosen(instance, as_real(clients[pick]), chosen));
  }
  return initial;
}

Solution dsquared_seed(const Instance& instance, const SeedConfig& config) {
  if (config.trials < 1) throw Error("dsquared_seed: trials must be at least 1");
  Solution best;
  bool have = false;
  for (int t = 0; t < config.trials; ++t) {
    auto rng = make_rng(config.seed, static_cast<std::uint64_t>(t));
    const auto open = dsquared_extend(instance, {}, rng);
    Solution sol = eval_cost(instance, open);
    if (!have || sol.total() < best.total()) {
      best = std::move(sol);
      have = true;
    }
  }
  return best;
}

SearchResult lloyd_refine(const Instance& instance, const Solution& start, int max_iters) {
  SearchResult out;
  out.solution = start;
  out.trajectory.push_back(start.total());
  const auto& clients = instance.clients();
  const std::size_t d = instance.dimension();

  for (int it = 0; it < max_iters; ++it) {
    ++out.iterations;
    const Solution& cur = out.solution;
    std::vector<std::vector<double>> sums(cur.open.size(), std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(cur.open.size(), 0);
    for (std::size_t a = 0; a < clients.size(); ++a) {
      const auto slot = static_cast<std::size_t>(
          std::lower_bound(cur.open.begin(), cur.open.end(), cur.assignment[a]) -
          cur.open.begin());
      for (std::size_t i = 0; i < d; ++i)
        sums[slot][i] += static_cast<double>(clients[a].coords[i]);
      ++counts[slot];
    }

    std::vector<char> taken(instance.candidates().size(), 0);
    std::vector<int> next(cur.open.size(), -1);
    // empty clusters keep their center
    for (std::size_t s = 0; s < cur.open.size(); ++s)
      if (counts[s] == 0) {
        next[s] = cur.open[s];
        taken[static_cast<std::size_t>(cur.open[s])] = 1;
      }
    for (std::size_t s = 0; s < cur.open.size(); ++s) {
      if (counts[s] == 0) continue;
      for (auto& v : sums[s]) v /= static_cast<double>(counts[s]);
      int c = nearest_unchosen(instance, sums[s], taken);
      if (c < 0) c = cur.open[s];
      next[s] = c;
      taken[static_cast<std::size_t>(c)] = 1;
    }
    std::sort(next.begin(), next.end());
    if (next == cur.open) break;

    Solution cand = eval_cost(instance, next);
    if (!(cand.total() < cur.total())) break;
    out.solution = std::move(cand);
    out.trajectory.push_back(out.solution.total());
  }
  return out;
}

std::uint64_t count_swap_moves(const Instance& instance, const Solution& current,
                               int swap_size) {
  const std::uint64_t open = current.open.size();
  const std::uint64_t closed = instance.candidates().size() - open;
  std::uint64_t total = 0;
  for (int r = 0; r <= swap_size; ++r)
    for (int a = 0; a <= swap_size; ++a)
      total = saturating_add(total, saturating_mul(binomial(open, r), binomial(closed, a)));
  return total;
}

Move best_swap_move(const Instance& instance, const Solution& current, int swap_size,
                    std::uint64_t move_budget) {
  if (swap_size < 1) throw Error("swap size must be at least 1");
  if (count_swap_moves(instance, current, swap_size) > move_budget)
    throw BudgetExceeded("swap enumeration exceeds the move budget");

  const int k = instance.k();
  const int m = static_cast<int>(instance.candidates().size());
  std::vector<char> is_open(static_cast<std::size_t>(m), 0);
  for (int c : current.open) is_open[static_cast<std::size_t>(c)] = 1;
  std::vector<int> closed;
  for (int c = 0; c < m; ++c)
    if (!is_open[static_cast<std::size_t>(c)]) closed.push_back(c);

  const int n_open = static_cast<int>(current.open.size());
  const double base = current.total();
  Move best;
  best.result = current;

  for (int r = 0; r <= std::min(swap_size, n_open); ++r) {
    for_each_combination(n_open, r, [&](const std::vector<int>& rem) {
      std::vector<int> kept;
      std::size_t ri = 0;
      for (int i = 0; i < n_open; ++i) {
        if (ri < rem.size() && rem[ri] == i) {
          ++ri;
          continue;
        }
        kept.push_back(current.open[static_cast<std::size_t>(i)]);
      }
      const int max_add = std::min(swap_size, k - static_cast<int>(kept.size()));
      for (int a = 0; a <= max_add; ++a) {
        if (r == 0 && a == 0) continue;
        if (kept.empty() && a == 0) continue;
        for_each_combination(static_cast<int>(closed.size()), a, [&](const std::vector<int>& add) {
          std::vector<int> open = kept;
          for (int i : add) open.push_back(closed[static_cast<std::size_t>(i)]);
          Solution s = eval_cost(instance, open);
          const double gain = base - s.total();
          if (gain > best.improvement) {
            best.improvement = gain;
            best.removed.clear();
            for (int i : rem) best.removed.push_back(current.open[static_cast<std::size_t>(i)]);
            best.added.clear();
            for (int i : add) best.added.push_back(closed[static_cast<std::size_t>(i)]);
            best.result = std::move(s);
          }
          return true;
        });
      }
      return true;
    });
  }
  return best;
}

SearchResult exhaustive_swap_search(const Instance& instance, const Solution& start,
                                    int swap_size, double stop_ratio) {
  if (swap_size < 1) throw Error("swap size must be at least 1");
  SearchResult out;
  out.solution = start;
  out.trajectory.push_back(start.total());
  while (true) {
    ++out.iterations;
    const double cost = out.solution.total();
    Move mv = best_swap_move(instance, out.solution, swap_size);
    const double threshold =
        std::max(stop_ratio * cost / instance.k(), 1e-12 * std::abs(cost));
    if (!(mv.improvement > threshold)) break;
    out.solution = std::move(mv.result);
    out.trajectory.push_back(out.solution.total());
  }
  return out;
}

}  // namespace fls
