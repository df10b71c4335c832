#include "fls/dissection.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "fls/rng.hpp"

namespace fls {

Dissection::Dissection(const Instance& instance, std::vector<Coord> shift, LeafRule rule)
    : grid_side_(instance.grid_side()),
      dim_(instance.dimension()),
      shift_(std::move(shift)),
      rule_(rule) {
  if (shift_.size() != dim_) throw Error("dissection shift has wrong dimension");
  for (Coord s : shift_)
    if (s < 0 || s >= grid_side_) throw Error("dissection shift outside [0, L)");
  max_level_ =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(grid_side_)) - 1e-12));
  max_level_ = std::max(max_level_, 0);

  const double L = static_cast<double>(grid_side_);
  Region root;
  root.corner.assign(dim_, 0.0);
  root.side = L;
  for (std::size_t a = 0; a < instance.clients().size(); ++a)
    root.clients.push_back(static_cast<int>(a));
  for (std::size_t c = 0; c < instance.candidates().size(); ++c)
    root.candidates.push_back(static_cast<int>(c));
  regions_.push_back(std::move(root));

  std::vector<std::vector<double>> client_u, cand_u;
  for (const auto& p : instance.clients()) client_u.push_back(shifted(p));
  for (const auto& c : instance.candidates()) cand_u.push_back(shifted(c.position));

  const int fan = 1 << dim_;
  for (std::size_t id = 0; id < regions_.size(); ++id) {
    const Region& r = regions_[id];
    const bool empty = r.clients.empty() && r.candidates.empty();
    bool leaf = empty || r.side <= 1.0;
    if (rule_ == LeafRule::OneCandidate) leaf = leaf || r.candidates.size() <= 1;
    if (leaf) continue;

    const int first = static_cast<int>(regions_.size());
    const int level = r.level + 1;
    const double half = r.side / 2.0;
    const std::vector<double> corner = r.corner;
    const std::vector<int> clients = r.clients;
    const std::vector<int> cands = r.candidates;
    for (int b = 0; b < fan; ++b) {
      Region child;
      child.level = level;
      child.parent = static_cast<int>(id);
      child.side = half;
      child.corner = corner;
      for (std::size_t ax = 0; ax < dim_; ++ax)
        if (b >> ax & 1) child.corner[ax] += half;
      regions_.push_back(std::move(child));
    }
    regions_[id].first_child = first;
    auto slot = [&](const std::vector<double>& u) {
      int b = 0;
      for (std::size_t ax = 0; ax < dim_; ++ax)
        if (u[ax] >= corner[ax] + half) b |= 1 << ax;
      return first + b;
    };
    for (int a : clients)
      regions_[static_cast<std::size_t>(slot(client_u[static_cast<std::size_t>(a)]))]
          .clients.push_back(a);
    for (int c : cands)
      regions_[static_cast<std::size_t>(slot(cand_u[static_cast<std::size_t>(c)]))]
          .candidates.push_back(c);
  }

  client_leaf_.assign(instance.clients().size(), -1);
  candidate_leaf_.assign(instance.candidates().size(), -1);
  for (std::size_t id = 0; id < regions_.size(); ++id) {
    if (!regions_[id].is_leaf()) continue;
    for (int a : regions_[id].clients) client_leaf_[static_cast<std::size_t>(a)] = static_cast<int>(id);
    for (int c : regions_[id].candidates)
      candidate_leaf_[static_cast<std::size_t>(c)] = static_cast<int>(id);
  }
}

int Dissection::depth() const {
  int d = 0;
  for (const auto& r : regions_) d = std::max(d, r.level);
  return d;
}

std::vector<double> Dissection::shifted(const Point& p) const {
  std::vector<double> u(dim_);
  for (std::size_t ax = 0; ax < dim_; ++ax) {
    Coord y = (p.coords[ax] - shift_[ax]) % grid_side_;
    if (y < 0) y += grid_side_;
    u[ax] = static_cast<double>(y) + 0.5;
  }
  return u;
}

int Dissection::child_containing(int region, std::span<const double> u) const {
  const Region& r = this->region(region);
  if (r.is_leaf()) return -1;
  int b = 0;
  for (std::size_t ax = 0; ax < dim_; ++ax)
    if (u[ax] >= r.corner[ax] + r.side / 2.0) b |= 1 << ax;
  return r.first_child + b;
}

bool Dissection::contains(int region, std::span<const double> u) const {
  const Region& r = this->region(region);
  for (std::size_t ax = 0; ax < dim_; ++ax)
    if (u[ax] < r.corner[ax] || u[ax] >= r.corner[ax] + r.side) return false;
  return true;
}

Dissection build_dissection(const Instance& instance, std::uint64_t seed, LeafRule rule) {
  auto rng = make_rng(seed, 0xD155EC7ULL);
  std::uniform_int_distribution<Coord> u(0, instance.grid_side() - 1);
  std::vector<Coord> shift(instance.dimension());
  for (auto& s : shift) s = u(rng);
  return Dissection(instance, std::move(shift), rule);
}

void dump_dissection(std::ostream& out, const Dissection& dissection) {
  const auto& regions = dissection.regions();
  for (std::size_t id = 0; id < regions.size(); ++id) {
    const Region& r = regions[id];
    out << "region " << id << " level " << r.level << " corner";
    for (double c : r.corner) out << ' ' << c;
    out << " side " << r.side << " clients " << r.clients.size() << " candidates "
        << r.candidates.size() << (r.is_leaf() ? " leaf" : "") << '\n';
  }
}

std::string dump_dissection(const Dissection& dissection) {
  std::ostringstream os;
  dump_dissection(os, dissection);
  return os.str();
}

double level_line_distance(double u, int level, double grid_side) {
  if (level == 0) {
    double r = std::fmod(u, grid_side);
    if (r < 0) r += grid_side;
    return std::min(r, grid_side - r);
  }
  // level-i lines sit at odd multiples of L/2^i
  const double offset = std::ldexp(grid_side, -level);
  const double period = 2.0 * offset;
  double r = std::fmod(u - offset, period);
  if (r < 0) r += period;
  return std::min(r, period - r);
}

int moat_level(std::span<const double> u, double gamma, double grid_side, int max_level) {
  if (!(gamma > 0.0)) return -1;
  for (int i = 0; i <= max_level; ++i) {
    const double threshold = gamma * std::ldexp(grid_side, -i);
    for (double x : u)
      if (level_line_distance(x, i, grid_side) < threshold) return i;
  }
  return -1;
}

MoatFlags classify_moat(const Dissection& dissection, std::span<const Point> points,
                        double gamma) {
  if (gamma < 0.0) throw Error("gamma must be nonnegative");
  MoatFlags flags;
  flags.gamma = gamma;
  flags.moat.resize(points.size(), 0);
  flags.level.resize(points.size(), -1);
  const double L = static_cast<double>(dissection.grid_side());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto u = dissection.shifted(points[i]);
    const int lvl = moat_level(u, gamma, L, dissection.max_level());
    flags.level[i] = lvl;
    flags.moat[i] = lvl >= 0;
  }
  return flags;
}

MoatFlags classify_candidates(const Dissection& dissection, const Instance& instance,
                              double gamma) {
  std::vector<Point> pts;
  pts.reserve(instance.candidates().size());
  for (const auto& c : instance.candidates()) pts.push_back(c.position);
  return classify_moat(dissection, pts, gamma);
}

std::vector<int> moat_centers_of(const Dissection& dissection, const Instance& instance,
                                 const Solution& solution, double gamma) {
  std::vector<Point> pts;
  for (int c : solution.open) pts.push_back(instance.candidates()[static_cast<std::size_t>(c)].position);
  const MoatFlags flags = classify_moat(dissection, pts, gamma);
  std::vector<int> out;
  for (std::size_t i = 0; i < solution.open.size(); ++i)
    if (flags.moat[i]) out.push_back(solution.open[i]);
  std::sort(out.begin(), out.end());
  return out;
}

double default_gamma(double epsilon, double log_n, int exponent, double gamma_max) {
  return std::min(std::pow(epsilon, exponent) / std::max(log_n, 1.0), gamma_max);
}

}  // namespace fls
