#include "fls/oracles.hpp"

#include <algorithm>
#include <chrono>

#include "fls/combinatorics.hpp"

namespace fls {
namespace {

class Guard {
 public:
  explicit Guard(const OracleBudget& b)
      : budget_(b), start_(std::chrono::steady_clock::now()) {}

  void tick() {
    if (++count_ > budget_.max_subsets) throw BudgetExceeded("oracle subset budget exhausted");
    if ((count_ & 0x3ff) == 0) {
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_;
      if (el.count() > budget_.time_limit_s) throw BudgetExceeded("oracle time limit exceeded");
    }
  }
  std::uint64_t count() const { return count_; }

 private:
  OracleBudget budget_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t count_ = 0;
};

}  // namespace

Solution exact_opt(const Instance& instance, const OracleBudget& budget) {
  const int m = static_cast<int>(instance.candidates().size());
  const int k = instance.k();
  const int lo = instance.weighted() ? 1 : k;
  std::uint64_t total = 0;
  for (int s = lo; s <= k; ++s)
    total = saturating_add(total, binomial(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(s)));
  if (total > budget.max_subsets) throw BudgetExceeded("exact_opt: too many subsets");

  Guard guard(budget);
  Solution best;
  bool have = false;
  for (int s = lo; s <= k; ++s) {
    for_each_combination(m, s, [&](const std::vector<int>& open) {
      guard.tick();
      Solution sol = eval_cost(instance, open);
      if (!have || sol.total() < best.total()) {
        best = std::move(sol);
        have = true;
      }
      return true;
    });
  }
  return best;
}

DeltaOptimum exact_opt_delta(const Instance& instance, const std::vector<int>& base, int delta,
                             const std::vector<int>& forbidden, const OracleBudget& budget) {
  const int m = static_cast<int>(instance.candidates().size());
  std::vector<char> in_base(static_cast<std::size_t>(m), 0), banned(static_cast<std::size_t>(m), 0);
  for (int c : base) in_base.at(static_cast<std::size_t>(c)) = 1;
  for (int c : forbidden) banned.at(static_cast<std::size_t>(c)) = 1;
  std::vector<int> removable, addable;
  for (int c = 0; c < m; ++c) {
    if (banned[static_cast<std::size_t>(c)]) continue;
    (in_base[static_cast<std::size_t>(c)] ? removable : addable).push_back(c);
  }

  DeltaOptimum out;
  out.solution = eval_cost(instance, base);
  const double start = out.solution.total();
  Guard guard(budget);
  const int k = instance.k();
  for (int r = 0; r <= std::min<int>(delta, static_cast<int>(removable.size())); ++r) {
    for_each_combination(static_cast<int>(removable.size()), r, [&](const std::vector<int>& ri) {
      std::vector<int> kept;
      for (int c : base)
        if (std::none_of(ri.begin(), ri.end(),
                         [&](int i) { return removable[static_cast<std::size_t>(i)] == c; }))
          kept.push_back(c);
      const int max_add = std::min(delta - r, k - static_cast<int>(kept.size()));
      for (int a = 0; a <= max_add; ++a) {
        if (r == 0 && a == 0) continue;
        if (kept.empty() && a == 0) continue;
        for_each_combination(static_cast<int>(addable.size()), a, [&](const std::vector<int>& ai) {
          guard.tick();
          std::vector<int> open = kept;
          for (int i : ai) open.push_back(addable[static_cast<std::size_t>(i)]);
          Solution s = eval_cost(instance, open);
          if (s.total() < out.solution.total()) {
            out.solution = std::move(s);
            out.removed.clear();
            for (int i : ri) out.removed.push_back(removable[static_cast<std::size_t>(i)]);
            out.added.clear();
            for (int i : ai) out.added.push_back(addable[static_cast<std::size_t>(i)]);
          }
          return true;
        });
      }
      return true;
    });
  }
  out.improvement = start - out.solution.total();
  out.evaluated = guard.count();
  return out;
}

}  // namespace fls
