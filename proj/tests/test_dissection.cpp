#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "fls/dissection.hpp"
#include "support.hpp"

using namespace fls;
using fls::test::pt;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Instance quadrant_instance() {
  std::vector<Point> pts = {pt({1, 1}), pt({3, 1}), pt({1, 3}), pt({3, 3})};
  std::vector<Candidate> cands;
  for (const auto& p : pts) cands.push_back({p, 0.0});
  return Instance(pts, cands, 1, 0.5, 2, 4);
}

// Nearest level-i line by scanning every line position in [0, L].
double brute_line_distance(double u, int level, double L) {
  double best = INFINITY;
  if (level == 0) return std::min(u, L - u);
  const long count = 1L << level;
  const double step = L / static_cast<double>(count);
  for (long j = 1; j < count; j += 2) best = std::min(best, std::abs(u - step * static_cast<double>(j)));
  return best;
}

int brute_moat_level(const std::vector<double>& u, double gamma, double L, int max_level) {
  for (int i = 0; i <= max_level; ++i)
    for (double x : u)
      if (brute_line_distance(x, i, L) < gamma * L / std::pow(2.0, i)) return i;
  return -1;
}

void check_structure(const Dissection& dis, const Instance& inst) {
  const auto& regions = dis.regions();
  const double L = static_cast<double>(dis.grid_side());
  CHECK(dis.depth() <= dis.max_level());
  for (std::size_t id = 0; id < regions.size(); ++id) {
    const Region& r = regions[id];
    CHECK(r.side == doctest::Approx(L / std::pow(2.0, r.level)));
    for (int a : r.clients) CHECK(dis.contains(static_cast<int>(id), dis.shifted(inst.clients()[static_cast<std::size_t>(a)])));
    for (int c : r.candidates)
      CHECK(dis.contains(static_cast<int>(id), dis.shifted(inst.candidates()[static_cast<std::size_t>(c)].position)));
    if (r.is_leaf()) {
      const bool empty = r.clients.empty() && r.candidates.empty();
      CHECK((empty || r.side <= 1.0 || r.candidates.size() <= 1));
      continue;
    }
    std::vector<int> kids_a, kids_c;
    for (int b = 0; b < dis.children_per_node(); ++b) {
      const Region& ch = dis.region(r.first_child + b);
      CHECK(ch.parent == static_cast<int>(id));
      CHECK(ch.level == r.level + 1);
      kids_a.insert(kids_a.end(), ch.clients.begin(), ch.clients.end());
      kids_c.insert(kids_c.end(), ch.candidates.begin(), ch.candidates.end());
    }
    auto a = r.clients, c = r.candidates;
    std::sort(a.begin(), a.end());
    std::sort(c.begin(), c.end());
    std::sort(kids_a.begin(), kids_a.end());
    std::sort(kids_c.begin(), kids_c.end());
    CHECK(kids_a == a);
    CHECK(kids_c == c);
  }
}

}  // namespace

TEST_CASE("single point grid gives a single node") {
  Instance inst({pt({0})}, {{pt({0}), 0.0}}, 1, 0.5);
  REQUIRE(inst.grid_side() == 1);
  auto dis = build_dissection(inst, 3);
  CHECK(dis.regions().size() == 1);
  CHECK(dis.region(0).is_leaf());
  CHECK(dis.depth() == 0);
}

TEST_CASE("quadrant candidates split at depth one") {
  auto inst = quadrant_instance();
  Dissection dis(inst, {0, 0}, LeafRule::OneCandidate);
  CHECK(dis.depth() == 1);
  CHECK(dis.regions().size() == 5);
  for (int id = 1; id <= 4; ++id) {
    CHECK(dis.region(id).is_leaf());
    CHECK(dis.region(id).candidates.size() == 1);
  }
}

TEST_CASE("golden dissection dumps") {
  auto quad = quadrant_instance();
  CHECK(dump_dissection(Dissection(quad, {0, 0}, LeafRule::OneCandidate)) ==
        read_file(FLS_TEST_DATA "/dissection_quadrants.txt"));

  std::vector<Point> pts = {pt({0, 0}), pt({7, 2}), pt({3, 5}), pt({6, 6}),
                            pt({1, 7}), pt({4, 4}), pt({2, 3}), pt({5, 0})};
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < pts.size(); i += 2) cands.push_back({pts[i], 0.0});
  Instance inst(pts, cands, 2, 0.5);
  CHECK(dump_dissection(Dissection(inst, {5, 11}, LeafRule::OneCandidate)) ==
        read_file(FLS_TEST_DATA "/dissection_shifted.txt"));
}

TEST_CASE("children partition parents under random shifts") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const std::size_t d = 1 + seed % 3;
    auto inst = test::random_instance(seed, d, 50, 20, 3, 64);
    for (auto rule : {LeafRule::OneCandidate, LeafRule::UnitSide}) {
      auto dis = build_dissection(inst, seed * 7, rule);
      check_structure(dis, inst);
      // every point sits in exactly one region per level it reaches
      for (std::size_t a = 0; a < inst.clients().size(); ++a) {
        std::vector<int> per_level(static_cast<std::size_t>(dis.max_level() + 1), 0);
        for (const auto& r : dis.regions())
          if (std::count(r.clients.begin(), r.clients.end(), static_cast<int>(a)))
            ++per_level[static_cast<std::size_t>(r.level)];
        const int leaf_level = dis.region(dis.client_leaf(static_cast<int>(a))).level;
        for (int i = 0; i <= dis.max_level(); ++i) CHECK(per_level[static_cast<std::size_t>(i)] == (i <= leaf_level ? 1 : 0));
      }
    }
  }
}

TEST_CASE("zero shift matches the unshifted quadtree") {
  auto inst = test::random_instance(9, 2, 40, 15, 2, 32);
  Dissection dis(inst, {0, 0}, LeafRule::OneCandidate);
  for (std::size_t a = 0; a < inst.clients().size(); ++a) {
    const Region& leaf = dis.region(dis.client_leaf(static_cast<int>(a)));
    for (std::size_t ax = 0; ax < 2; ++ax) {
      const double x = static_cast<double>(inst.clients()[a].coords[ax]);
      CHECK(x >= leaf.corner[ax]);
      CHECK(x < leaf.corner[ax] + leaf.side);
      // unshifted corners are multiples of the side
      CHECK(std::fmod(leaf.corner[ax], leaf.side) == 0.0);
    }
  }
}

TEST_CASE("dissection is deterministic in the seed") {
  auto inst = test::random_instance(10, 2, 30, 12, 2, 64);
  auto a = build_dissection(inst, 42);
  auto b = build_dissection(inst, 42);
  CHECK(a.shift() == b.shift());
  CHECK(dump_dissection(a) == dump_dissection(b));
  for (Coord s : a.shift()) {
    CHECK(s >= 0);
    CHECK(s < inst.grid_side());
  }
  auto fa = classify_candidates(a, inst, 0.05);
  auto fb = classify_candidates(b, inst, 0.05);
  CHECK(fa.moat == fb.moat);
  CHECK(fa.level == fb.level);
}

TEST_CASE("shift must lie in range") {
  auto inst = quadrant_instance();
  CHECK_THROWS_AS(Dissection(inst, {4, 0}, LeafRule::OneCandidate), Error);
  CHECK_THROWS_AS(Dissection(inst, {0}, LeafRule::OneCandidate), Error);
}

TEST_CASE("level lines split into sublines of the level side") {
  const double L = 64.0;
  for (int i = 1; i <= 6; ++i) {
    const double step = L / std::pow(2.0, i);
    int lines = 0;
    for (double u = 0.0; u < L; u += step / 2.0)
      if (level_line_distance(u, i, L) == 0.0) ++lines;
    // 2^(i-1) level-i lines per axis, none shared with shallower levels
    CHECK(lines == 1 << (i - 1));
    for (int j = 0; j < i; ++j)
      for (double u = 0.0; u < L; u += step)
        if (level_line_distance(u, i, L) == 0.0) CHECK(level_line_distance(u, j, L) > 0.0);
  }
  CHECK(level_line_distance(0.0, 0, L) == 0.0);
  CHECK(level_line_distance(63.5, 0, L) == 0.5);
}

TEST_CASE("moat classification basics") {
  const double L = 16.0;
  std::vector<double> on_root_line = {0.0, 5.3};
  CHECK(moat_level(on_root_line, 0.01, L, 4) == 0);
  CHECK(moat_level(on_root_line, 0.0, L, 4) == -1);
  std::vector<double> centre = {8.0, 8.0};
  CHECK(moat_level(centre, 0.2, L, 4) != 0);

  auto inst = test::random_instance(11, 2, 20, 10, 3, 32);
  auto dis = build_dissection(inst, 5);
  auto none = classify_candidates(dis, inst, 0.0);
  CHECK(std::count(none.moat.begin(), none.moat.end(), 1) == 0);
  CHECK_THROWS_AS(classify_candidates(dis, inst, -1.0), Error);
  Solution empty;
  CHECK(moat_centers_of(dis, inst, empty, 0.05).empty());
}

TEST_CASE("moat flags match a line scan") {
  std::mt19937_64 rng(17);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto inst = test::random_instance(seed, 2, 15, 20, 4, 64);
    auto dis = build_dissection(inst, seed);
    const double L = static_cast<double>(dis.grid_side());
    for (double gamma : {0.001, 0.02, 0.1}) {
      auto flags = classify_candidates(dis, inst, gamma);
      for (std::size_t c = 0; c < inst.candidates().size(); ++c) {
        const auto u = dis.shifted(inst.candidates()[c].position);
        CHECK(flags.level[c] == brute_moat_level(u, gamma, L, dis.max_level()));
        CHECK(flags.is_moat(static_cast<int>(c)) == (flags.level[c] >= 0));
      }
      Solution sol;
      sol.open = {0, 3, 7, 12};
      std::vector<int> expect;
      for (int c : sol.open)
        if (flags.is_moat(c)) expect.push_back(c);
      CHECK(moat_centers_of(dis, inst, sol, gamma) == expect);
    }
  }
}

TEST_CASE("moat frequency stays below gamma log L") {
  const Coord L = 1 << 10;
  const int samples = 20000;
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<Coord> u(0, L - 1);
  for (double gamma : {0.001, 0.01, 0.05}) {
    int hits = 0;
    for (int s = 0; s < samples; ++s) {
      // a random point under a random shift is a uniform shifted cell
      std::vector<double> pos = {static_cast<double>(u(rng)) + 0.5};
      if (moat_level(pos, gamma, static_cast<double>(L), 10) >= 0) ++hits;
    }
    const double bound = gamma * 10.0;
    const double freq = static_cast<double>(hits) / samples;
    CHECK(freq <= bound + 3.0 * std::sqrt(bound / samples));
  }
}

TEST_CASE("default gamma") {
  CHECK(default_gamma(0.5, 4.0, 13) == doctest::Approx(std::pow(0.5, 13) / 4.0));
  CHECK(default_gamma(0.5, 4.0, 1) == 0.05);
}
