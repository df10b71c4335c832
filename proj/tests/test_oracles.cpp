#include <doctest.h>

#include <algorithm>

#include "fls/oracles.hpp"
#include "support.hpp"

using namespace fls;
using fls::test::pt;

namespace {

// Enumerates subsets by descending bitmask, the reverse of the library order.
double reverse_order_opt(const Instance& inst) {
  const int m = static_cast<int>(inst.candidates().size());
  double best = INFINITY;
  for (int mask = (1 << m) - 1; mask > 0; --mask) {
    const int size = __builtin_popcount(mask);
    if (size > inst.k() || (!inst.weighted() && size != inst.k())) continue;
    std::vector<int> s;
    for (int c = 0; c < m; ++c)
      if (mask >> c & 1) s.push_back(c);
    best = std::min(best, test::naive_cost(inst, s));
  }
  return best;
}

// Outer loop over added sets, inner over removed sets.
double reverse_order_delta(const Instance& inst, const std::vector<int>& base, int delta,
                           const std::vector<int>& forbidden) {
  const int m = static_cast<int>(inst.candidates().size());
  auto banned = [&](int c) { return std::count(forbidden.begin(), forbidden.end(), c) > 0; };
  auto in_base = [&](int c) { return std::count(base.begin(), base.end(), c) > 0; };
  double best = test::naive_cost(inst, base);
  for (int amask = 0; amask < 1 << m; ++amask) {
    bool ok = true;
    for (int c = 0; c < m; ++c)
      if (amask >> c & 1 && (in_base(c) || banned(c))) ok = false;
    if (!ok) continue;
    for (int rmask = 0; rmask < 1 << m; ++rmask) {
      bool rok = true;
      for (int c = 0; c < m; ++c)
        if (rmask >> c & 1 && (!in_base(c) || banned(c))) rok = false;
      if (!rok) continue;
      if (__builtin_popcount(amask) + __builtin_popcount(rmask) > delta) continue;
      std::vector<int> s;
      for (int c = 0; c < m; ++c)
        if ((in_base(c) && !(rmask >> c & 1)) || amask >> c & 1) s.push_back(c);
      if (s.empty() || static_cast<int>(s.size()) > inst.k()) continue;
      best = std::min(best, test::naive_cost(inst, s));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("exact_opt picks the middle candidate") {
  Instance inst({pt({0, 0}), pt({2, 0})},
                {{pt({0, 0}), 0.0}, {pt({1, 0}), 0.0}, {pt({2, 0}), 0.0}}, 1, 0.5);
  auto s = exact_opt(inst);
  CHECK(s.open == std::vector<int>{1});
  CHECK(s.total() == 2.0);
}

TEST_CASE("exact_opt with k equal to the candidate count opens everything") {
  auto inst = test::random_instance(3, 2, 10, 5, 5, 32);
  auto s = exact_opt(inst);
  CHECK(s.open == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("exact_opt matches a reverse order enumeration") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto inst = test::random_instance(seed, 2, 10, 8, 1 + static_cast<int>(seed % 3), 32,
                                      seed % 2 ? 30.0 : 0.0);
    CHECK(test::close_rel(exact_opt(inst).total(), reverse_order_opt(inst), 1e-12));
  }
}

TEST_CASE("exact_opt budget") {
  auto inst = test::random_instance(1, 2, 10, 10, 5, 32);
  CHECK_THROWS_AS(exact_opt(inst, {10, 60.0}), BudgetExceeded);
}

TEST_CASE("exact_opt_delta trivial cases") {
  auto inst = test::random_instance(2, 2, 10, 8, 2, 32);
  const std::vector<int> base = {0, 1};
  auto zero = exact_opt_delta(inst, base, 0, {});
  CHECK(zero.solution.open == base);
  CHECK(zero.improvement == 0.0);
  std::vector<int> all(8);
  for (int i = 0; i < 8; ++i) all[static_cast<std::size_t>(i)] = i;
  auto frozen = exact_opt_delta(inst, base, 2, all);
  CHECK(frozen.solution.open == base);
  CHECK(frozen.removed.empty());
  CHECK(frozen.added.empty());
}

TEST_CASE("exact_opt_delta matches a reverse order enumeration") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const int k = 1 + static_cast<int>(seed % 3);
    auto inst = test::random_instance(seed, 2, 10, 8, k, 32, seed % 2 ? 25.0 : 0.0);
    std::vector<int> base;
    for (int c = 0; c < k; ++c) base.push_back(c);
    const std::vector<int> forbidden = seed % 4 == 0 ? std::vector<int>{0, 5} : std::vector<int>{};
    for (int delta : {1, 2, 3}) {
      auto r = exact_opt_delta(inst, base, delta, forbidden);
      const double brute = reverse_order_delta(inst, base, delta, forbidden);
      CHECK(test::close_rel(r.solution.total(), brute, 1e-12));
      CHECK(r.solution.total() <= test::naive_cost(inst, base) + 1e-12);
      CHECK(static_cast<int>(r.removed.size() + r.added.size()) <= delta);
      for (int c : forbidden) {
        CHECK(std::count(r.removed.begin(), r.removed.end(), c) == 0);
        CHECK(std::count(r.added.begin(), r.added.end(), c) == 0);
      }
    }
  }
}

TEST_CASE("exact_opt_delta with a full radius reaches the global optimum") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int k = 2;
    auto inst = test::random_instance(seed, 2, 10, 7, k, 32);
    auto r = exact_opt_delta(inst, {3, 6}, 2 * k, {});
    CHECK(test::close_rel(r.solution.total(), exact_opt(inst).total(), 1e-12));
  }
}

TEST_CASE("exact_opt lower bounds every solution") {
  auto inst = test::random_instance(8, 2, 10, 8, 3, 32, 10.0);
  const double opt = exact_opt(inst).total();
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b) CHECK(opt <= test::naive_cost(inst, {a, b}) + 1e-12);
}
