#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fls {

using Coord = std::int64_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when an enumeration would exceed its configured budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

struct Point {
  std::vector<Coord> coords;

  std::size_t dim() const { return coords.size(); }
  bool operator==(const Point&) const = default;
  auto operator<=>(const Point&) const = default;
};

std::int64_t squared_distance(const Point& a, const Point& b);

// dist^p from an exact squared distance.
double power_distance(std::int64_t squared, int p);
double power_distance(double distance, int p);

struct Candidate {
  Point position;
  double opening_cost = 0.0;

  bool operator==(const Candidate&) const = default;
};

// Canonical padded grid side for data whose largest coordinate is
// `max_coord`: the data then lies in the lower half of every axis.
Coord padded_grid_side(Coord max_coord);

class Instance {
 public:
  Instance(std::vector<Point> clients, std::vector<Candidate> candidates, int k,
           double epsilon, int exponent_p = 2,
           std::optional<Coord> grid_side = std::nullopt);

  const std::vector<Point>& clients() const { return clients_; }
  const std::vector<Candidate>& candidates() const { return candidates_; }
  int k() const { return k_; }
  double epsilon() const { return epsilon_; }
  int exponent() const { return exponent_p_; }
  Coord grid_side() const { return grid_side_; }
  std::size_t dimension() const { return dim_; }

  // n = |A| + |C|.
  std::size_t size_n() const { return clients_.size() + candidates_.size(); }
  // log2 n, floored at 1 so resolution formulas stay finite.
  double log_n() const;

  bool weighted() const;

  Instance with_weights(std::span<const double> weights) const;
  Instance with_k(int k) const;

  bool operator==(const Instance&) const = default;

 private:
  std::vector<Point> clients_;
  std::vector<Candidate> candidates_;
  int k_ = 1;
  double epsilon_ = 0.5;
  int exponent_p_ = 2;
  Coord grid_side_ = 1;
  std::size_t dim_ = 0;
};

struct Solution {
  std::vector<int> open;        // sorted candidate indices
  std::vector<int> assignment;  // per client, serving candidate index
  double service_cost = 0.0;
  double opening_cost = 0.0;

  double total() const { return service_cost + opening_cost; }
};

// Exact nearest-center evaluation; ties go to the lowest candidate index.
Solution eval_cost(const Instance& instance, std::span<const int> open);

struct ScaleRecord {
  std::vector<double> origin;
  double factor = 1.0;  // grid units per input unit

  std::vector<double> to_input(const Point& p) const;
  double cost_to_input(double grid_cost, int p) const;
};

struct SnappedPoints {
  std::vector<Point> points;
  Coord grid_side = 1;
  ScaleRecord scale;
};

SnappedPoints snap_to_grid(const std::vector<std::vector<double>>& raw, double epsilon);

std::vector<Point> generate_candidates(std::span<const Point> clients, double epsilon,
                                       Coord grid_side);

// Least base*(1+eps)^i >= w over integers i >= 0; zero stays zero.
double round_weight(double w, double base, double epsilon);

Instance round_weights(const Instance& instance, double reference_cost);

void write_instance(std::ostream& out, const Instance& instance);
Instance read_instance(std::istream& in);
std::string format_instance(const Instance& instance);
Instance parse_instance(const std::string& text);
Instance load_instance(const std::string& path);
void save_instance(const std::string& path, const Instance& instance);

}  // namespace fls
