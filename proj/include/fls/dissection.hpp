#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fls/instance.hpp"

namespace fls {

enum class LeafRule {
  UnitSide,      // split until a region spans a single lattice cell (or is empty)
  OneCandidate,  // additionally stop once at most one candidate center remains
};

// A square of the shifted quadtree. Geometry lives in shifted space,
// u = ((x - shift) mod L) + 1/2, where each lattice point stands for the
// unit cell it anchors.
struct Region {
  int level = 0;
  int parent = -1;
  int first_child = -1;  // children are first_child .. first_child + 2^d - 1
  std::vector<double> corner;
  double side = 0.0;
  std::vector<int> clients;
  std::vector<int> candidates;

  bool is_leaf() const { return first_child < 0; }
  double center(std::size_t axis) const { return corner[axis] + side / 2.0; }
};

class Dissection {
 public:
  Dissection(const Instance& instance, std::vector<Coord> shift, LeafRule rule);

  Coord grid_side() const { return grid_side_; }
  std::size_t dimension() const { return dim_; }
  const std::vector<Coord>& shift() const { return shift_; }
  int max_level() const { return max_level_; }
  LeafRule leaf_rule() const { return rule_; }

  const std::vector<Region>& regions() const { return regions_; }
  const Region& region(int id) const { return regions_[static_cast<std::size_t>(id)]; }
  int children_per_node() const { return 1 << dim_; }
  int depth() const;

  std::vector<double> shifted(const Point& p) const;

  int client_leaf(int client) const { return client_leaf_[static_cast<std::size_t>(client)]; }
  int candidate_leaf(int cand) const { return candidate_leaf_[static_cast<std::size_t>(cand)]; }

  // Child of `region` containing shifted position u.
  int child_containing(int region, std::span<const double> u) const;
  bool contains(int region, std::span<const double> u) const;

 private:
  Coord grid_side_;
  std::size_t dim_;
  std::vector<Coord> shift_;
  int max_level_;
  LeafRule rule_;
  std::vector<Region> regions_;
  std::vector<int> client_leaf_;
  std::vector<int> candidate_leaf_;
};

Dissection build_dissection(const Instance& instance, std::uint64_t seed,
                            LeafRule rule = LeafRule::OneCandidate);

// Per-region text records: id, level, corner, side, member counts.
void dump_dissection(std::ostream& out, const Dissection& dissection);
std::string dump_dissection(const Dissection& dissection);

struct MoatFlags {
  double gamma = 0.0;
  std::vector<char> moat;  // per point
  std::vector<int> level;  // lowest witnessing level, -1 when not moat

  bool is_moat(int i) const { return moat[static_cast<std::size_t>(i)] != 0; }
};

// Distance from shifted coordinate u to the nearest line of exactly the
// given level along one axis (lines wrap modulo L).
double level_line_distance(double u, int level, double grid_side);

// Lowest level i with some axis closer than gamma*L/2^i to a level-i line,
// or -1.
int moat_level(std::span<const double> u, double gamma, double grid_side, int max_level);

MoatFlags classify_moat(const Dissection& dissection, std::span<const Point> points,
                        double gamma);

// classify_moat over all candidates of the instance.
MoatFlags classify_candidates(const Dissection& dissection, const Instance& instance,
                              double gamma);

std::vector<int> moat_centers_of(const Dissection& dissection, const Instance& instance,
                                 const Solution& solution, double gamma);

// min(eps^exponent / log2 n, gamma_max).
double default_gamma(double epsilon, double log_n, int exponent = 13, double gamma_max = 0.05);

}  // namespace fls
