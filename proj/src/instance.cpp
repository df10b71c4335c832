#include "fls/instance.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace fls {

std::int64_t squared_distance(const Point& a, const Point& b) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    const std::int64_t diff = a.coords[i] - b.coords[i];
    s += diff * diff;
  }
  return s;
}

double power_distance(std::int64_t squared, int p) {
  if (p == 2) return static_cast<double>(squared);
  if (p % 2 == 0) {
    double r = 1.0;
    for (int i = 0; i < p / 2; ++i) r *= static_cast<double>(squared);
    return r;
  }
  return std::pow(std::sqrt(static_cast<double>(squared)), p);
}

double power_distance(double distance, int p) {
  if (p == 2) return distance * distance;
  if (p == 1) return distance;
  return std::pow(distance, p);
}

Coord padded_grid_side(Coord max_coord) {
  if (max_coord <= 0) return 1;
  return 2 * static_cast<Coord>(std::bit_ceil(static_cast<std::uint64_t>(max_coord + 1)));
}

Instance::Instance(std::vector<Point> clients, std::vector<Candidate> candidates, int k,
                   double epsilon, int exponent_p, std::optional<Coord> grid_side)
    : clients_(std::move(clients)),
      candidates_(std::move(candidates)),
      k_(k),
      epsilon_(epsilon),
      exponent_p_(exponent_p) {
  if (candidates_.empty()) throw Error("instance needs at least one candidate");
  if (k_ < 1) throw Error("k must be positive");
  if (static_cast<std::size_t>(k_) > candidates_.size())
    throw Error("k exceeds the number of candidates");
  if (!(epsilon_ > 0.0 && epsilon_ <= 0.5)) throw Error("epsilon must lie in (0, 1/2]");
  if (exponent_p_ < 1) throw Error("cost exponent must be a positive integer");

  dim_ = candidates_.front().position.dim();
  if (dim_ == 0) throw Error("dimension must be at least 1");

  Coord max_coord = 0;
  auto check = [&](const Point& p) {
    if (p.dim() != dim_) throw Error("mixed dimensions in instance");
    for (Coord c : p.coords) {
      if (c < 0) throw Error("negative grid coordinate");
      max_coord = std::max(max_coord, c);
    }
  };
  for (const auto& p : clients_) check(p);
  for (const auto& c : candidates_) {
    check(c.position);
    if (!(c.opening_cost >= 0.0) || !std::isfinite(c.opening_cost))
      throw Error("opening costs must be finite and nonnegative");
  }
  grid_side_ = grid_side ? *grid_side : padded_grid_side(max_coord);
  if (grid_side_ < 1) throw Error("grid side must be positive");
  if (max_coord >= grid_side_) throw Error("coordinate outside [0, L)");
}

double Instance::log_n() const {
  return std::max(1.0, std::log2(static_cast<double>(size_n())));
}

bool Instance::weighted() const {
  return std::any_of(candidates_.begin(), candidates_.end(),
                     [](const Candidate& c) { return c.opening_cost > 0.0; });
}

Instance Instance::with_weights(std::span<const double> weights) const {
  if (weights.size() != candidates_.size()) throw Error("weight vector size mismatch");
  auto cands = candidates_;
  for (std::size_t i = 0; i < cands.size(); ++i) cands[i].opening_cost = weights[i];
  return Instance(clients_, std::move(cands), k_, epsilon_, exponent_p_, grid_side_);
}

Instance Instance::with_k(int k) const {
  return Instance(clients_, candidates_, k, epsilon_, exponent_p_, grid_side_);
}

namespace {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

Solution eval_cost(const Instance& instance, std::span<const int> open) {
  if (open.empty()) throw Error("eval_cost needs a nonempty open set");
  Solution sol;
  sol.open.assign(open.begin(), open.end());
  std::sort(sol.open.begin(), sol.open.end());
  if (std::adjacent_find(sol.open.begin(), sol.open.end()) != sol.open.end())
    throw Error("duplicate center in open set");
  const auto& cands = instance.candidates();
  for (int c : sol.open)
    if (c < 0 || static_cast<std::size_t>(c) >= cands.size())
      throw Error("candidate index out of range");

  const int p = instance.exponent();
  KahanSum service;
  sol.assignment.resize(instance.clients().size());
  for (std::size_t a = 0; a < instance.clients().size(); ++a) {
    const Point& client = instance.clients()[a];
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    int best_idx = -1;
    // sol.open is sorted, so strict < keeps the lowest index on ties
    for (int c : sol.open) {
      const std::int64_t d2 = squared_distance(client, cands[c].position);
      if (d2 < best) {
        best = d2;
        best_idx = c;
      }
    }
    sol.assignment[a] = best_idx;
    service.add(power_distance(best, p));
  }
  KahanSum opening;
  for (int c : sol.open) opening.add(cands[c].opening_cost);
  sol.service_cost = service.sum;
  sol.opening_cost = opening.sum;
  return sol;
}

std::vector<double> ScaleRecord::to_input(const Point& p) const {
  std::vector<double> out(p.dim());
  for (std::size_t i = 0; i < p.dim(); ++i)
    out[i] = origin[i] + static_cast<double>(p.coords[i]) / factor;
  return out;
}

double ScaleRecord::cost_to_input(double grid_cost, int p) const {
  return grid_cost / std::pow(factor, p);
}

SnappedPoints snap_to_grid(const std::vector<std::vector<double>>& raw, double epsilon) {
  if (raw.empty()) throw Error("snap_to_grid: empty point list");
  if (!(epsilon > 0.0)) throw Error("snap_to_grid: epsilon must be positive");
  const std::size_t d = raw.front().size();
  if (d == 0) throw Error("snap_to_grid: zero-dimensional points");

  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto& p : raw) {
    if (p.size() != d) throw Error("snap_to_grid: mixed dimensions");
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(p[i])) throw Error("snap_to_grid: non-finite coordinate");
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  }
  double extent = 0.0;
  for (std::size_t i = 0; i < d; ++i) extent = std::max(extent, hi[i] - lo[i]);

  SnappedPoints out;
  out.scale.origin = lo;
  // resolution n * ceil(1/eps)^d cells across the widest axis, capped so L fits
  double resolution = static_cast<double>(raw.size()) * std::pow(std::ceil(1.0 / epsilon), d);
  resolution = std::min(resolution, static_cast<double>(Coord{1} << 28));
  out.scale.factor = extent > 0.0 ? resolution / extent : 1.0;

  Coord max_coord = 0;
  out.points.reserve(raw.size());
  for (const auto& p : raw) {
    Point q;
    q.coords.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      q.coords[i] = static_cast<Coord>(std::llround((p[i] - lo[i]) * out.scale.factor));
      max_coord = std::max(max_coord, q.coords[i]);
    }
    out.points.push_back(std::move(q));
  }
  out.grid_side = padded_grid_side(max_coord);
  return out;
}

std::vector<Point> generate_candidates(std::span<const Point> clients, double epsilon,
                                       Coord grid_side) {
  if (clients.empty()) throw Error("generate_candidates: no clients");
  const std::size_t d = clients.front().dim();
  const int levels =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max<Coord>(grid_side, 1)))));
  std::set<Point> out(clients.begin(), clients.end());

  for (const Point& a : clients) {
    for (int j = 0; j <= levels; ++j) {
      const Coord radius = Coord{1} << j;
      const Coord inner = j == 0 ? -1 : radius / 2;
      const Coord spacing = std::max<Coord>(
          1, static_cast<Coord>(std::floor(epsilon * static_cast<double>(radius) /
                                           (2.0 * std::sqrt(static_cast<double>(d))))));
      std::vector<Coord> first(d), last(d);
      for (std::size_t i = 0; i < d; ++i) {
        const Coord lo = std::max<Coord>(0, a.coords[i] - radius);
        const Coord hi = std::min<Coord>(grid_side - 1, a.coords[i] + radius);
        first[i] = (lo + spacing - 1) / spacing * spacing;
        last[i] = hi / spacing * spacing;
      }
      bool empty = false;
      for (std::size_t i = 0; i < d; ++i) empty |= first[i] > last[i];
      if (empty) continue;

      Point g;
      g.coords = first;
      while (true) {
        // shell only: skip points covered by the previous ring's box
        bool in_inner = j > 0;
        for (std::size_t i = 0; i < d && in_inner; ++i)
          in_inner = std::abs(g.coords[i] - a.coords[i]) <= inner;
        if (!in_inner) out.insert(g);

        std::size_t axis = 0;
        while (axis < d) {
          g.coords[axis] += spacing;
          if (g.coords[axis] <= last[axis]) break;
          g.coords[axis] = first[axis];
          ++axis;
        }
        if (axis == d) break;
      }
    }
  }
  return {out.begin(), out.end()};
}

double round_weight(double w, double base, double epsilon) {
  if (w < 0.0) throw Error("negative weight");
  if (w == 0.0) return 0.0;
  if (!(base > 0.0)) throw Error("weight base must be positive");
  if (w <= base) return base;
  const double ratio = 1.0 + epsilon;
  auto rung = [&](long i) { return base * std::pow(ratio, static_cast<double>(i)); };
  long i = static_cast<long>(std::ceil(std::log(w / base) / std::log(ratio)));
  i = std::max(i, 0L);
  while (rung(i) < w) ++i;
  while (i > 0 && rung(i - 1) >= w) --i;
  return rung(i);
}

Instance round_weights(const Instance& instance, double reference_cost) {
  if (!(reference_cost > 0.0)) throw Error("round_weights: reference cost must be positive");
  const double base =
      instance.epsilon() * reference_cost / static_cast<double>(instance.size_n());
  std::vector<double> weights;
  weights.reserve(instance.candidates().size());
  for (const auto& c : instance.candidates())
    weights.push_back(round_weight(c.opening_cost, base, instance.epsilon()));
  return instance.with_weights(weights);
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw Error("instance file: bad real '" + tok + "'");
  return v;
}

long long parse_int(const std::string& tok) {
  long long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw Error("instance file: bad integer '" + tok + "'");
  return v;
}

std::vector<std::string> next_fields(std::istream& in, std::size_t expected, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(t);
    if (toks.size() != expected)
      throw Error(std::string("instance file: malformed ") + what + " line");
    return toks;
  }
  throw Error(std::string("instance file: missing ") + what + " line");
}

}  // namespace

void write_instance(std::ostream& out, const Instance& instance) {
  out << instance.dimension() << ' ' << instance.clients().size() << ' '
      << instance.candidates().size() << ' ' << instance.k() << ' '
      << format_double(instance.epsilon()) << ' ' << instance.exponent() << '\n';
  auto write_point = [&](const Point& p) {
    for (std::size_t i = 0; i < p.dim(); ++i) out << (i ? " " : "") << p.coords[i];
  };
  for (const auto& p : instance.clients()) {
    write_point(p);
    out << '\n';
  }
  for (const auto& c : instance.candidates()) {
    write_point(c.position);
    out << ' ' << format_double(c.opening_cost) << '\n';
  }
}

Instance read_instance(std::istream& in) {
  const auto header = next_fields(in, 6, "header");
  const auto d = parse_int(header[0]);
  const auto n_clients = parse_int(header[1]);
  const auto n_candidates = parse_int(header[2]);
  const auto k = parse_int(header[3]);
  const double eps = parse_double(header[4]);
  const auto p = parse_int(header[5]);
  if (d < 1 || n_clients < 0 || n_candidates < 1) throw Error("instance file: bad header");

  auto read_point = [&](const std::vector<std::string>& toks) {
    Point pt;
    pt.coords.reserve(static_cast<std::size_t>(d));
    for (long long i = 0; i < d; ++i) pt.coords.push_back(parse_int(toks[i]));
    return pt;
  };
  std::vector<Point> clients;
  for (long long i = 0; i < n_clients; ++i)
    clients.push_back(read_point(next_fields(in, static_cast<std::size_t>(d), "client")));
  std::vector<Candidate> cands;
  for (long long i = 0; i < n_candidates; ++i) {
    const auto toks = next_fields(in, static_cast<std::size_t>(d) + 1, "candidate");
    cands.push_back({read_point(toks), parse_double(toks.back())});
  }
  return Instance(std::move(clients), std::move(cands), static_cast<int>(k), eps,
                  static_cast<int>(p));
}

std::string format_instance(const Instance& instance) {
  std::ostringstream os;
  write_instance(os, instance);
  return os.str();
}

Instance parse_instance(const std::string& text) {
  std::istringstream is(text);
  return read_instance(is);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open instance file " + path);
  return read_instance(in);
}

void save_instance(const std::string& path, const Instance& instance) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write instance file " + path);
  write_instance(out, instance);
}

}  // namespace fls
