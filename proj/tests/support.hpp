#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "fls/instance.hpp"
#include "fls/rng.hpp"

namespace fls::test {

inline Point pt(std::initializer_list<Coord> c) { return Point{std::vector<Coord>(c)}; }

// Distinct random clients and candidates on a side^d grid padded so the
// data sits in the lower half of every axis.
inline Instance random_instance(std::uint64_t seed, std::size_t d, int n, int m, int k,
                                Coord side, double max_weight = 0.0) {
  auto rng = make_rng(seed, 77);
  std::uniform_int_distribution<Coord> coord(0, side - 1);
  std::uniform_real_distribution<double> weight(0.0, max_weight);
  auto draw = [&](int count) {
    std::set<std::vector<Coord>> seen;
    std::vector<Point> out;
    while (static_cast<int>(out.size()) < count) {
      std::vector<Coord> c(d);
      for (auto& x : c) x = coord(rng);
      if (seen.insert(c).second) out.push_back(Point{c});
    }
    return out;
  };
  std::vector<Point> clients = draw(n);
  std::vector<Candidate> cands;
  for (auto& p : draw(m)) cands.push_back({p, max_weight > 0.0 ? weight(rng) : 0.0});
  return Instance(std::move(clients), std::move(cands), k, 0.5);
}

// Straight double loop, no compensation, first minimum wins.
inline double naive_cost(const Instance& inst, const std::vector<int>& open) {
  double total = 0.0;
  for (int c : open) total += inst.candidates()[static_cast<std::size_t>(c)].opening_cost;
  for (const auto& a : inst.clients()) {
    double best = std::numeric_limits<double>::infinity();
    for (int c : open) {
      const auto& q = inst.candidates()[static_cast<std::size_t>(c)].position;
      double s = 0.0;
      for (std::size_t ax = 0; ax < a.dim(); ++ax) {
        const double diff = static_cast<double>(a.coords[ax] - q.coords[ax]);
        s += diff * diff;
      }
      best = std::min(best, std::pow(std::sqrt(s), inst.exponent()));
    }
    total += best;
  }
  return total;
}

inline bool close_rel(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace fls::test
