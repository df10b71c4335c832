#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fls/instance.hpp"
#include "support.hpp"

using namespace fls;
using fls::test::pt;

namespace {

Instance line_instance(std::vector<Point> clients, std::vector<Point> cands, int k,
                       std::vector<double> w = {}) {
  std::vector<Candidate> cs;
  for (std::size_t i = 0; i < cands.size(); ++i)
    cs.push_back({cands[i], w.empty() ? 0.0 : w[i]});
  return Instance(std::move(clients), std::move(cs), k, 0.5);
}

// Sum of squared distances to the continuous mean, per axis.
double centroid_cost(const std::vector<Point>& pts) {
  double total = 0.0;
  for (std::size_t ax = 0; ax < pts.front().dim(); ++ax) {
    double mean = 0.0;
    for (const auto& p : pts) mean += static_cast<double>(p.coords[ax]);
    mean /= static_cast<double>(pts.size());
    for (const auto& p : pts) total += std::pow(static_cast<double>(p.coords[ax]) - mean, 2);
  }
  return total;
}

double best_single_candidate(const std::vector<Point>& clients, const std::vector<Point>& cands) {
  std::vector<Candidate> cs;
  for (const auto& c : cands) cs.push_back({c, 0.0});
  Instance inst(clients, cs, 1, 0.5);
  double best = INFINITY;
  for (int c = 0; c < static_cast<int>(cands.size()); ++c)
    best = std::min(best, eval_cost(inst, std::vector<int>{c}).total());
  return best;
}

}  // namespace

TEST_CASE("eval_cost two clients around one center") {
  auto inst = line_instance({pt({0, 0}), pt({2, 0})}, {pt({1, 0})}, 1);
  auto s = eval_cost(inst, std::vector<int>{0});
  CHECK(s.total() == 2.0);
  CHECK(s.assignment == std::vector<int>{0, 0});
}

TEST_CASE("eval_cost opening cost only") {
  auto inst = line_instance({pt({0, 0})}, {pt({0, 0})}, 1, {5.0});
  auto s = eval_cost(inst, std::vector<int>{0});
  CHECK(s.service_cost == 0.0);
  CHECK(s.total() == 5.0);
}

TEST_CASE("eval_cost rejects an empty open set") {
  auto inst = line_instance({pt({0, 0})}, {pt({0, 0})}, 1);
  CHECK_THROWS_AS(eval_cost(inst, std::vector<int>{}), Error);
}

TEST_CASE("eval_cost ties go to the lowest index") {
  auto inst = line_instance({pt({1, 0})}, {pt({2, 0}), pt({0, 0})}, 2);
  CHECK(eval_cost(inst, std::vector<int>{0, 1}).assignment[0] == 0);
}

TEST_CASE("eval_cost matches a double loop") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    for (int p : {1, 2, 3}) {
      auto base = test::random_instance(seed, 2, 10, 6, 3, 64, seed % 2 ? 10.0 : 0.0);
      Instance inst(base.clients(), base.candidates(), 3, 0.5, p, base.grid_side());
      std::vector<int> open = {0, 2, 5};
      CHECK(test::close_rel(eval_cost(inst, open).total(), test::naive_cost(inst, open), 1e-12));
    }
  }
}

TEST_CASE("eval_cost is invariant to client order") {
  auto inst = test::random_instance(3, 3, 30, 8, 3, 32);
  std::vector<Point> shuffled = inst.clients();
  std::mt19937_64 rng(9);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  Instance other(shuffled, inst.candidates(), 3, 0.5, 2, inst.grid_side());
  std::vector<int> open = {1, 4, 6};
  CHECK(test::close_rel(eval_cost(inst, open).total(), eval_cost(other, open).total(), 1e-12));
}

TEST_CASE("adding a free center never raises the cost") {
  auto inst = test::random_instance(5, 2, 25, 10, 10, 64);
  std::vector<int> open = {0};
  double prev = eval_cost(inst, open).total();
  for (int c = 1; c < 10; ++c) {
    open.push_back(c);
    const double cur = eval_cost(inst, open).total();
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(line_instance({pt({0, 0})}, {pt({0, 0})}, 2), Error);
  CHECK_THROWS_AS(line_instance({pt({0, 0})}, {pt({0, 0})}, 0), Error);
  CHECK_THROWS_AS(line_instance({pt({0, 0})}, {pt({0, 0})}, 1, {-1.0}), Error);
  CHECK_THROWS_AS(line_instance({pt({0, 0})}, {pt({0, 0, 0})}, 1), Error);
}

TEST_CASE("snap_to_grid single point") {
  auto s = snap_to_grid({{0.0, 0.0}}, 0.5);
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0] == pt({0, 0}));
  CHECK(s.grid_side == 1);
}

TEST_CASE("snap_to_grid two points stay distinct") {
  auto s = snap_to_grid({{0.0, 0.0}, {1.0, 1.0}}, 0.5);
  CHECK(s.points[0] != s.points[1]);
  for (const auto& p : s.points)
    for (Coord c : p.coords) {
      CHECK(c >= 0);
      CHECK(c < s.grid_side / 2);
    }
}

TEST_CASE("snap_to_grid rejects bad input") {
  CHECK_THROWS_AS(snap_to_grid({}, 0.5), Error);
  CHECK_THROWS_AS(snap_to_grid({{0.0, NAN}}, 0.5), Error);
  CHECK_THROWS_AS(snap_to_grid({{0.0}, {1.0, 2.0}}, 0.5), Error);
}

TEST_CASE("snap_to_grid keeps pairwise distances at a common scale") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 7.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> raw(20, std::vector<double>(2));
    for (auto& p : raw)
      for (auto& x : p) x = u(rng);
    auto s = snap_to_grid(raw, 0.5);
    const double f = s.scale.factor;
    for (std::size_t i = 0; i < raw.size(); ++i)
      for (std::size_t j = i + 1; j < raw.size(); ++j) {
        const double orig = std::hypot(raw[i][0] - raw[j][0], raw[i][1] - raw[j][1]);
        const double scaled = std::sqrt(
            static_cast<double>(squared_distance(s.points[i], s.points[j])));
        // each endpoint moves by at most half a cell per axis
        CHECK(std::abs(scaled - f * orig) <= std::sqrt(2.0) + 1e-9);
      }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto back = s.scale.to_input(s.points[i]);
      CHECK(std::abs(back[0] - raw[i][0]) <= 0.5 / f + 1e-12);
    }
  }
}

TEST_CASE("snap_to_grid preserves nearest-neighbour order on separated triples") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::vector<double>> raw(6, std::vector<double>(2));
    for (auto& p : raw)
      for (auto& x : p) x = u(rng);
    auto s = snap_to_grid(raw, 0.5);
    const double f = s.scale.factor;
    auto dist = [&](int a, int b) { return std::hypot(raw[a][0] - raw[b][0], raw[a][1] - raw[b][1]); };
    auto sdist = [&](int a, int b) {
      return std::sqrt(static_cast<double>(squared_distance(s.points[a], s.points[b])));
    };
    if (std::abs(dist(0, 1) - dist(0, 2)) * f <= 4.0) continue;
    ++checked;
    CHECK((dist(0, 1) < dist(0, 2)) == (sdist(0, 1) < sdist(0, 2)));
  }
  CHECK(checked > 1000);
}

TEST_CASE("generate_candidates contains the clients") {
  auto one = generate_candidates(std::vector<Point>{pt({3, 4})}, 0.5, 16);
  CHECK(std::find(one.begin(), one.end(), pt({3, 4})) != one.end());
  auto inst = test::random_instance(21, 2, 15, 1, 1, 64);
  auto cands = generate_candidates(inst.clients(), 0.5, inst.grid_side());
  std::set<Point> all(cands.begin(), cands.end());
  CHECK(all.size() == cands.size());
  for (const auto& a : inst.clients()) CHECK(all.count(a) == 1);
  for (const auto& c : cands)
    for (Coord x : c.coords) {
      CHECK(x >= 0);
      CHECK(x < inst.grid_side());
    }
  CHECK(cands == generate_candidates(inst.clients(), 0.5, inst.grid_side()));
}

TEST_CASE("generate_candidates two clients near the continuous 1-mean") {
  for (Coord gap : {2, 7, 40, 333}) {
    std::vector<Point> clients = {pt({0, 0}), pt({gap, gap / 3})};
    const Coord L = padded_grid_side(gap);
    auto cands = generate_candidates(clients, 0.5, L);
    CHECK(best_single_candidate(clients, cands) <= 1.5 * centroid_cost(clients) + 1e-9);
  }
}

TEST_CASE("generate_candidates clients on a line") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<Coord> u(0, 500);
    std::vector<Point> clients;
    std::set<Coord> xs;
    while (xs.size() < 6) xs.insert(u(rng));
    for (Coord x : xs) clients.push_back(pt({x, 0}));
    auto cands = generate_candidates(clients, 0.25, padded_grid_side(500));
    CHECK(best_single_candidate(clients, cands) <= 1.25 * centroid_cost(clients) + 1e-9);
  }
}

TEST_CASE("round_weight on the ladder") {
  CHECK(round_weight(0.0, 5.0, 0.5) == 0.0);
  CHECK(round_weight(7.0, 5.0, 0.5) == doctest::Approx(7.5));
  CHECK(round_weight(5.0, 5.0, 0.5) == 5.0);
  CHECK(round_weight(1.0, 5.0, 0.5) == 5.0);
  CHECK_THROWS_AS(round_weight(-1.0, 5.0, 0.5), Error);
}

TEST_CASE("round_weights uses eps * reference / n as the base") {
  std::vector<Point> clients;
  std::vector<Candidate> cands;
  for (Coord i = 0; i < 5; ++i) {
    clients.push_back(pt({i, 0}));
    cands.push_back({pt({i, 1}), i == 0 ? 0.0 : 7.0});
  }
  Instance inst(clients, cands, 2, 0.5);
  REQUIRE(inst.size_n() == 10);
  auto r = round_weights(inst, 100.0);
  CHECK(r.candidates()[0].opening_cost == 0.0);
  CHECK(r.candidates()[1].opening_cost == doctest::Approx(7.5));
  CHECK_THROWS_AS(round_weights(inst, 0.0), Error);
}

TEST_CASE("rounded weights stay between w and max((1+eps)w, base)") {
  std::mt19937_64 rng(14);
  const double eps = 0.5, base = 5.0;
  std::uniform_real_distribution<double> u(0.0, base * 10.0);
  for (int i = 0; i < 2000; ++i) {
    const double w = u(rng);
    if (w == 0.0) continue;
    const double r = round_weight(w, base, eps);
    CHECK(r >= w);
    CHECK(r <= std::max((1.0 + eps) * w, base) * (1.0 + 1e-12));
    // direct scan: least rung >= w
    double rung = base;
    while (rung < w) rung *= 1.0 + eps;
    CHECK(test::close_rel(r, rung, 1e-12));
  }
}

TEST_CASE("rounded totals keep the multiplicative and additive bound") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto inst = test::random_instance(seed, 2, 12, 8, 3, 32, 40.0);
    const double ref = 300.0;
    auto r = round_weights(inst, ref);
    const double n = static_cast<double>(inst.size_n());
    std::vector<int> open = {1, 3, 6};
    const double before = eval_cost(inst, open).total();
    const double after = eval_cost(r, open).total();
    CHECK(after >= before);
    CHECK(after <= 1.5 * before + 3 * 0.5 * ref / n + 1e-9);
  }
}

TEST_CASE("instance text round trip is exact") {
  auto inst = test::random_instance(31, 3, 9, 7, 2, 100, 3.3);
  const std::string text = format_instance(inst);
  auto back = parse_instance(text);
  CHECK(back == inst);
  CHECK(format_instance(back) == text);
}

TEST_CASE("instance parser rejects malformed text") {
  CHECK_THROWS_AS(parse_instance("2 1 1 1 0.5 2\n0 0\n"), Error);
  CHECK_THROWS_AS(parse_instance("2 1 1 1 0.5 2\n0 0\n1 x 0\n"), Error);
  CHECK_THROWS_AS(parse_instance("garbage"), Error);
}
