#include "fls/find_improvement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "fls/combinatorics.hpp"

namespace fls {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double minimal_image(double v, double L) { return v - L * std::round(v / L); }

double torus_distance(std::span<const double> a, std::span<const double> b, double L) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = minimal_image(a[i] - b[i], L);
    s += v * v;
  }
  return std::sqrt(s);
}

double distance_to_region(const Region& r, std::span<const double> u, double L) {
  double s = 0.0;
  for (std::size_t ax = 0; ax < u.size(); ++ax) {
    const double v = std::abs(minimal_image(u[ax] - r.center(ax), L));
    const double excess = std::max(0.0, v - r.side / 2.0);
    s += excess * excess;
  }
  return std::sqrt(s);
}

std::vector<std::int64_t> cell_of(const Region& r, std::span<const double> u, std::int64_t rho) {
  std::vector<std::int64_t> cell(u.size());
  for (std::size_t ax = 0; ax < u.size(); ++ax) {
    auto c = static_cast<std::int64_t>(
        std::floor((u[ax] - r.corner[ax]) / r.side * static_cast<double>(rho)));
    cell[ax] = std::clamp<std::int64_t>(c, 0, rho - 1);
  }
  return cell;
}

std::vector<double> cell_center(const Region& r, std::span<const std::int64_t> cell,
                                std::int64_t rho) {
  std::vector<double> u(cell.size());
  const double w = r.side / static_cast<double>(rho);
  for (std::size_t ax = 0; ax < cell.size(); ++ax)
    u[ax] = r.corner[ax] + (static_cast<double>(cell[ax]) + 0.5) * w;
  return u;
}

struct VecHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto x : v) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

double DpConfig::ladder_floor(double side) const {
  return std::pow(epsilon, ladder_floor_exponent) * side / std::max(log_n, 1.0);
}

double DpConfig::outside_margin(double side) const {
  return epsilon * side / std::max(log_n, 1.0);
}

DpConfig DpConfig::desk(double epsilon, double log_n, int delta) {
  DpConfig c;
  c.delta = delta;
  c.rho_grid = 16;
  c.ladder_base = 1.0 + epsilon / 4.0;
  c.ladder_floor_exponent = 4.0;
  c.weight_ladder_base = 1.0 + epsilon;
  c.profile = DpProfile::Desk;
  c.epsilon = epsilon;
  c.log_n = std::max(log_n, 1.0);
  return c;
}

DpConfig DpConfig::paper_faithful(double epsilon, double log_n, int delta) {
  DpConfig c;
  c.delta = delta;
  c.epsilon = epsilon;
  c.log_n = std::max(log_n, 1.0);
  // grid of 2 log n / eps^14 points per axis, rounded up to an even count
  const double cells = std::ceil(c.log_n / std::pow(epsilon, 14.0));
  c.rho_grid = 2 * static_cast<std::int64_t>(std::min(cells, 1e15));
  c.ladder_base = 1.0 + epsilon / c.log_n;
  c.ladder_floor_exponent = 14.0;
  c.weight_ladder_base = 1.0 + epsilon;
  c.profile = DpProfile::PaperFaithful;
  return c;
}

DpConfig DpConfig::make(DpProfile profile, double epsilon, double log_n, int delta) {
  return profile == DpProfile::Desk ? desk(epsilon, log_n, delta)
                                    : paper_faithful(epsilon, log_n, delta);
}

std::int64_t ladder_index(double x, double floor, double base) {
  const double ax = std::abs(x);
  if (ax < floor / 2.0) return 0;
  const std::int64_t sign = x < 0 ? -1 : 1;
  if (ax <= floor) return sign;
  auto rung = [&](std::int64_t m) { return floor * std::pow(base, static_cast<double>(m)); };
  auto m = static_cast<std::int64_t>(std::floor(std::log(ax / floor) / std::log(base)));
  m = std::max<std::int64_t>(m, 0);
  while (m > 0 && rung(m) > ax) --m;
  while (rung(m + 1) < ax) ++m;
  const std::int64_t pick = (ax - rung(m) <= rung(m + 1) - ax) ? m : m + 1;
  return sign * (pick + 1);
}

double ladder_value(std::int64_t index, double floor, double base) {
  if (index == 0) return 0.0;
  const double mag = floor * std::pow(base, static_cast<double>(std::abs(index) - 1));
  return index < 0 ? -mag : mag;
}

RoundedCoord round_position(const Dissection& dissection, int region,
                            std::span<const double> u, const DpConfig& config, bool inside) {
  const Region& r = dissection.region(region);
  RoundedCoord rc;
  rc.region = region;
  rc.inside = inside;
  if (inside) {
    rc.index = cell_of(r, u, config.rho_grid);
    return rc;
  }
  const double L = static_cast<double>(dissection.grid_side());
  const double floor = config.ladder_floor(r.side);
  rc.index.resize(u.size());
  for (std::size_t ax = 0; ax < u.size(); ++ax)
    rc.index[ax] = ladder_index(minimal_image(u[ax] - r.center(ax), L), floor, config.ladder_base);
  return rc;
}

std::vector<double> rounded_position(const Dissection& dissection, const RoundedCoord& rc,
                                     const DpConfig& config) {
  if (rc.far) throw Error("far slot has no position");
  const Region& r = dissection.region(rc.region);
  if (rc.inside) return cell_center(r, rc.index, config.rho_grid);
  const double floor = config.ladder_floor(r.side);
  std::vector<double> u(rc.index.size());
  for (std::size_t ax = 0; ax < u.size(); ++ax)
    u[ax] = r.center(ax) + ladder_value(rc.index[ax], floor, config.ladder_base);
  return u;
}

RoundedCoord round_outside(const Dissection& dissection, int region, const Point& point,
                           const DpConfig& config) {
  const auto u = dissection.shifted(point);
  const Region& r = dissection.region(region);
  const double L = static_cast<double>(dissection.grid_side());
  if (distance_to_region(r, u, L) < config.outside_margin(r.side))
    throw Error("round_outside: point too close to the region");
  return round_position(dissection, region, u, config, false);
}

RoundedCoord round_inside(const Dissection& dissection, int region, const Point& point,
                          std::int64_t rho_grid) {
  const auto u = dissection.shifted(point);
  if (!dissection.contains(region, u)) throw Error("round_inside: point outside the region");
  RoundedCoord rc;
  rc.region = region;
  rc.inside = true;
  rc.index = cell_of(dissection.region(region), u, rho_grid);
  return rc;
}

bool compatible(const Dissection& dissection, const DpConfig& config, const DpEntry& parent,
                std::span<const DpEntry> children) {
  const int pid = parent.sketch.region;
  const Region& pr = dissection.region(pid);
  if (pr.is_leaf()) return false;
  const auto fan = static_cast<std::size_t>(dissection.children_per_node());
  if (children.size() != fan) return false;
  for (std::size_t i = 0; i < fan; ++i) {
    if (children[i].sketch.region != pr.first_child + static_cast<int>(i)) return false;
    if (children[i].sketch.slots.size() != parent.sketch.slots.size()) return false;
  }

  const double L = static_cast<double>(dissection.grid_side());
  const double slack_rel = config.ladder_base - 1.0;
  const double cell = pr.side / static_cast<double>(config.rho_grid);
  const std::size_t d = dissection.dimension();

  for (std::size_t s = 0; s < parent.sketch.slots.size(); ++s) {
    const SketchSlot& ps = parent.sketch.slots[s];
    int resolved_children = 0;
    int inside_children = 0;
    for (std::size_t i = 0; i < fan; ++i) {
      const SketchSlot& cs = children[i].sketch.slots[s];
      const Region& cr = dissection.region(children[i].sketch.region);
      if (cs.added != ps.added || cs.weight_class != ps.weight_class) return false;
      if (cs.coord.region != children[i].sketch.region) return false;

      if (cs.resolved >= 0) {
        if (ps.added) {
          ++resolved_children;
          if (ps.resolved >= 0 && cs.resolved != ps.resolved) return false;
        } else if (cs.resolved != ps.resolved) {
          return false;
        }
      }
      if (!ps.added && cs.resolved < 0) return false;

      if (ps.coord.far) {
        if (!cs.coord.far && !cs.coord.inside) {
          // a slot irrelevant to the parent cannot become relevant without a position
          return false;
        }
        if (cs.coord.inside) return false;
        continue;
      }
      const auto ppos = rounded_position(dissection, ps.coord, config);

      if (!ps.coord.inside) {
        if (cs.coord.inside) return false;
        if (cs.coord.far) continue;
        const auto cpos = rounded_position(dissection, cs.coord, config);
        const double floors = config.ladder_floor(pr.side) + config.ladder_floor(cr.side);
        for (std::size_t ax = 0; ax < d; ++ax) {
          const double pv = minimal_image(ppos[ax] - pr.center(ax), L);
          const double diff = std::abs(minimal_image(cpos[ax] - ppos[ax], L));
          if (diff > slack_rel * (std::abs(pv) + pr.side / 4.0) + floors) return false;
        }
        continue;
      }

      // parent slot lies inside the parent region
      if (cs.coord.inside) {
        ++inside_children;
        const auto cpos = rounded_position(dissection, cs.coord, config);
        if (!dissection.contains(pr.first_child + static_cast<int>(i), cpos)) return false;
        if (cell_of(pr, cpos, config.rho_grid) != ps.coord.index) return false;
        continue;
      }
      if (cs.coord.far) continue;
      const auto cpos = rounded_position(dissection, cs.coord, config);
      const double floor_c = config.ladder_floor(cr.side);
      for (std::size_t ax = 0; ax < d; ++ax) {
        const double cv = minimal_image(ppos[ax] - cr.center(ax), L);
        const double diff = std::abs(minimal_image(cpos[ax] - ppos[ax], L));
        if (diff > slack_rel * std::abs(cv) + floor_c + cell) return false;
      }
    }
    if (ps.coord.inside && inside_children != 1) return false;
    if (!ps.coord.inside && inside_children != 0) return false;
    if (ps.added) {
      if (resolved_children > 1) return false;
      if (ps.resolved >= 0 && ps.coord.inside && resolved_children != 1) return false;
      if (!ps.coord.inside && resolved_children != 0) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

struct InSlot {
  int cls = 0;
  std::vector<std::int64_t> cell;
  auto operator<=>(const InSlot&) const = default;
};

struct OutSlot {
  int cls = 0;
  std::vector<std::int64_t> rung;
  auto operator<=>(const OutSlot&) const = default;
};

struct Key {
  std::vector<InSlot> in;
  std::vector<OutSlot> out;

  std::vector<std::int64_t> encode() const {
    std::vector<std::int64_t> e;
    e.push_back(static_cast<std::int64_t>(in.size()));
    for (const auto& s : in) {
      e.push_back(s.cls);
      e.insert(e.end(), s.cell.begin(), s.cell.end());
    }
    e.push_back(static_cast<std::int64_t>(out.size()));
    for (const auto& s : out) {
      e.push_back(s.cls);
      e.insert(e.end(), s.rung.begin(), s.rung.end());
    }
    return e;
  }
};

Key decode(const std::vector<std::int64_t>& e, std::size_t d) {
  Key k;
  std::size_t pos = 0;
  const auto ni = static_cast<std::size_t>(e[pos++]);
  for (std::size_t i = 0; i < ni; ++i) {
    InSlot s;
    s.cls = static_cast<int>(e[pos++]);
    s.cell.assign(e.begin() + static_cast<std::ptrdiff_t>(pos),
                  e.begin() + static_cast<std::ptrdiff_t>(pos + d));
    pos += d;
    k.in.push_back(std::move(s));
  }
  const auto no = static_cast<std::size_t>(e[pos++]);
  for (std::size_t i = 0; i < no; ++i) {
    OutSlot s;
    s.cls = static_cast<int>(e[pos++]);
    s.rung.assign(e.begin() + static_cast<std::ptrdiff_t>(pos),
                  e.begin() + static_cast<std::ptrdiff_t>(pos + d));
    pos += d;
    k.out.push_back(std::move(s));
  }
  return k;
}

// Sorted copy plus, for each sorted position, the original index.
template <class T>
std::vector<std::size_t> sort_order(const std::vector<T>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return order;
}

struct Entry {
  double cost = kInf;
  std::vector<int> ids;  // resolved candidates of the inside slots, key order
};

using Memo = std::unordered_map<std::vector<std::int64_t>, Entry, VecHash>;
using Occupancy = std::unordered_map<std::vector<std::int64_t>, std::vector<int>, VecHash>;

}  // namespace

struct ImprovementDp::Impl {
  const Instance& inst;
  const Dissection& dis;
  const MoatFlags& moat;
  DpConfig cfg;
  Solution current;
  std::size_t d;
  double L;
  int p;
  std::int64_t rho;

  std::vector<std::vector<double>> client_u, cand_u;
  std::vector<char> in_solution, removable, addable;
  std::vector<int> wclass;
  int n_classes = 1;
  std::vector<std::unique_ptr<Occupancy>> occupancy;

  // state of the selected removal set
  std::vector<int> removed, kept;
  std::vector<double> base;
  std::vector<double> base_sum, base_max;
  std::vector<Memo> memo;
  std::vector<std::pair<DpEntry, std::vector<DpEntry>>> links;
  DpStats stats;

  Impl(const Instance& instance, const Solution& cur, const Dissection& dissection,
       const MoatFlags& flags, const DpConfig& config)
      : inst(instance), dis(dissection), moat(flags), cfg(config), current(cur) {
    d = inst.dimension();
    L = static_cast<double>(dis.grid_side());
    p = inst.exponent();
    rho = cfg.rho_grid;
    if (rho < 2 || rho % 2 != 0) throw Error("rho_grid must be a positive even integer");
    if (cfg.delta < 0) throw Error("delta must be nonnegative");
    if (!(cfg.ladder_base > 1.0)) throw Error("ladder base must exceed 1");
    const auto& cands = inst.candidates();
    if (moat.moat.size() != cands.size()) throw Error("moat flags must cover every candidate");

    for (const auto& a : inst.clients()) client_u.push_back(dis.shifted(a));
    for (const auto& c : cands) cand_u.push_back(dis.shifted(c.position));

    in_solution.assign(cands.size(), 0);
    for (int c : current.open) in_solution[static_cast<std::size_t>(c)] = 1;
    removable.resize(cands.size());
    addable.resize(cands.size());
    for (std::size_t c = 0; c < cands.size(); ++c) {
      removable[c] = in_solution[c] && !moat.moat[c];
      addable[c] = !in_solution[c] && !moat.moat[c];
    }

    double wmin = kInf;
    for (const auto& c : cands)
      if (c.opening_cost > 0.0) wmin = std::min(wmin, c.opening_cost);
    wclass.resize(cands.size(), 0);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const double w = cands[c].opening_cost;
      if (w > 0.0) {
        wclass[c] = 1 + static_cast<int>(std::floor(
                            std::log(w / wmin) / std::log(cfg.weight_ladder_base) + 1e-9));
        n_classes = std::max(n_classes, wclass[c] + 1);
      }
    }
    occupancy.resize(dis.regions().size());
  }

  const Occupancy& occ(int region) {
    auto& slot = occupancy[static_cast<std::size_t>(region)];
    if (!slot) {
      slot = std::make_unique<Occupancy>();
      const Region& r = dis.region(region);
      for (int c : r.candidates) {
        if (!addable[static_cast<std::size_t>(c)]) continue;
        auto key = cell_of(r, cand_u[static_cast<std::size_t>(c)], rho);
        key.insert(key.begin(), wclass[static_cast<std::size_t>(c)]);
        (*slot)[key].push_back(c);
      }
      for (auto& [k, v] : *slot) std::sort(v.begin(), v.end());
    }
    return *slot;
  }

  const std::vector<int>* occupants(int region, const InSlot& s) {
    std::vector<std::int64_t> key = s.cell;
    key.insert(key.begin(), s.cls);
    const auto& o = occ(region);
    auto it = o.find(key);
    return it == o.end() ? nullptr : &it->second;
  }

  void select(std::span<const int> rem) {
    removed.assign(rem.begin(), rem.end());
    std::sort(removed.begin(), removed.end());
    kept.clear();
    for (int c : current.open)
      if (!std::binary_search(removed.begin(), removed.end(), c)) kept.push_back(c);
    const auto& clients = inst.clients();
    const auto& cands = inst.candidates();
    base.assign(clients.size(), kInf);
    for (std::size_t a = 0; a < clients.size(); ++a)
      for (int c : kept)
        base[a] = std::min(base[a], power_distance(squared_distance(
                                        clients[a], cands[static_cast<std::size_t>(c)].position), p));
    const auto nr = dis.regions().size();
    base_sum.assign(nr, std::numeric_limits<double>::quiet_NaN());
    base_max.assign(nr, std::numeric_limits<double>::quiet_NaN());
    memo.assign(nr, Memo{});
    links.clear();
  }

  void region_base(int region) {
    const auto id = static_cast<std::size_t>(region);
    if (!std::isnan(base_sum[id])) return;
    double s = 0.0, m = 0.0;
    for (int a : dis.region(region).clients) {
      s += base[static_cast<std::size_t>(a)];
      m = std::max(m, base[static_cast<std::size_t>(a)]);
    }
    base_sum[id] = s;
    base_max[id] = m;
  }

  // Could an added center at shifted position u serve some client of the
  // region more cheaply than its kept centers?
  bool relevant(int region, std::span<const double> u) {
    const Region& r = dis.region(region);
    if (r.clients.empty()) return false;
    region_base(region);
    if (power_distance(distance_to_region(r, u, L), p) >= base_max[static_cast<std::size_t>(region)])
      return false;
    for (int a : r.clients)
      if (power_distance(torus_distance(client_u[static_cast<std::size_t>(a)], u, L), p) <
          base[static_cast<std::size_t>(a)])
        return true;
    return false;
  }

  std::vector<double> out_position(int region, const OutSlot& s) const {
    const Region& r = dis.region(region);
    const double floor = cfg.ladder_floor(r.side);
    std::vector<double> u(d);
    for (std::size_t ax = 0; ax < d; ++ax)
      u[ax] = r.center(ax) + ladder_value(s.rung[ax], floor, cfg.ladder_base);
    return u;
  }

  // Outside view of position u from `region`; nullopt when irrelevant.
  std::optional<OutSlot> view(int region, std::span<const double> u, int cls) {
    OutSlot s;
    s.cls = cls;
    s.rung = round_position(dis, region, u, cfg, false).index;
    if (!relevant(region, out_position(region, s))) return std::nullopt;
    return s;
  }

  bool assign_inside(int region, const std::vector<InSlot>& in, std::vector<int>& ids,
                     bool match_cells) {
    ids.clear();
    const Region& r = dis.region(region);
    for (const auto& s : in) {
      int pick = -1;
      if (match_cells) {
        if (const auto* occs = occupants(region, s))
          for (int c : *occs)
            if (std::find(ids.begin(), ids.end(), c) == ids.end()) {
              pick = c;
              break;
            }
      } else {
        for (int c : r.candidates) {
          const auto cu = static_cast<std::size_t>(c);
          if (!addable[cu] || wclass[cu] != s.cls) continue;
          if (std::find(ids.begin(), ids.end(), c) != ids.end()) continue;
          if (cell_of(r, cand_u[cu], rho) != s.cell) continue;
          pick = c;
          break;
        }
      }
      if (pick < 0) return false;
      ids.push_back(pick);
    }
    return true;
  }

  const Entry& solve(int region, const Key& key) {
    auto& m = memo[static_cast<std::size_t>(region)];
    auto enc = key.encode();
    if (auto it = m.find(enc); it != m.end()) return it->second;
    Entry e = compute(region, key);
    return m.emplace(std::move(enc), std::move(e)).first->second;
  }

  Entry compute(int region, const Key& key) {
    Entry e;
    const Region& r = dis.region(region);
    if (r.clients.empty()) {
      if (assign_inside(region, key.in, e.ids, true)) e.cost = 0.0;
      return e;
    }
    if (key.in.empty() && key.out.empty()) {
      region_base(region);
      e.cost = base_sum[static_cast<std::size_t>(region)];
      return e;
    }
    // without inside slots nothing is left to choose below this region, so
    // its clients are charged here against the region's own rounding
    if (r.is_leaf() || key.in.empty()) return direct(region, key);
    return merge(region, key);
  }

  Entry direct(int region, const Key& key) {
    Entry e;
    const Region& r = dis.region(region);
    if (!assign_inside(region, key.in, e.ids, false)) return e;
    std::vector<std::vector<double>> out_pos;
    for (const auto& s : key.out) out_pos.push_back(out_position(region, s));
    const auto& clients = inst.clients();
    const auto& cands = inst.candidates();
    double total = 0.0;
    for (int a : r.clients) {
      const auto au = static_cast<std::size_t>(a);
      double best = base[au];
      for (int c : e.ids)
        best = std::min(best, power_distance(squared_distance(
                                  clients[au], cands[static_cast<std::size_t>(c)].position), p));
      for (const auto& u : out_pos)
        best = std::min(best, power_distance(torus_distance(client_u[au], u, L), p));
      total += best;
    }
    e.cost = total;
    return e;
  }

  Entry merge(int region, const Key& key) {
    Entry best;
    const Region& r = dis.region(region);
    const int fan = dis.children_per_node();
    const std::size_t n_in = key.in.size();

    // child and sub-cell options of each inside slot
    std::vector<int> in_child(n_in);
    std::vector<std::vector<InSlot>> options(n_in);
    std::vector<std::vector<double>> in_center(n_in);
    for (std::size_t i = 0; i < n_in; ++i) {
      const InSlot& s = key.in[i];
      int bits = 0;
      std::vector<std::int64_t> local(d);
      for (std::size_t ax = 0; ax < d; ++ax) {
        const bool upper = s.cell[ax] >= rho / 2;
        if (upper) bits |= 1 << ax;
        local[ax] = s.cell[ax] - (upper ? rho / 2 : 0);
      }
      in_child[i] = r.first_child + bits;
      in_center[i] = cell_center(r, s.cell, rho);
      for (int b = 0; b < fan; ++b) {
        InSlot sub;
        sub.cls = s.cls;
        sub.cell.resize(d);
        for (std::size_t ax = 0; ax < d; ++ax) sub.cell[ax] = 2 * local[ax] + ((b >> ax) & 1);
        if (occupants(in_child[i], sub)) options[i].push_back(std::move(sub));
      }
      if (options[i].empty()) return best;
    }

    // outside views per child (fixed across sub-cell choices); remember the
    // parent slot each view came from for link recording
    std::vector<std::vector<OutSlot>> outs(static_cast<std::size_t>(fan));
    std::vector<std::vector<std::optional<OutSlot>>> views(static_cast<std::size_t>(fan));
    std::vector<std::vector<double>> out_pos;
    for (const auto& s : key.out) out_pos.push_back(out_position(region, s));
    for (int b = 0; b < fan; ++b) {
      const int child = r.first_child + b;
      auto& v = views[static_cast<std::size_t>(b)];
      v.assign(n_in + key.out.size(), std::nullopt);
      for (std::size_t i = 0; i < n_in; ++i)
        if (in_child[i] != child) v[i] = view(child, in_center[i], key.in[i].cls);
      for (std::size_t j = 0; j < key.out.size(); ++j)
        v[n_in + j] = view(child, out_pos[j], key.out[j].cls);
      for (const auto& o : v)
        if (o) outs[static_cast<std::size_t>(b)].push_back(*o);
      std::sort(outs[static_cast<std::size_t>(b)].begin(), outs[static_cast<std::size_t>(b)].end());
    }

    std::vector<std::size_t> choice(n_in, 0);
    std::vector<Key> best_keys;
    while (true) {
      std::vector<Key> child_keys(static_cast<std::size_t>(fan));
      std::vector<std::vector<std::size_t>> origin(static_cast<std::size_t>(fan));
      for (int b = 0; b < fan; ++b) child_keys[static_cast<std::size_t>(b)].out = outs[static_cast<std::size_t>(b)];
      for (std::size_t i = 0; i < n_in; ++i) {
        const auto b = static_cast<std::size_t>(in_child[i] - r.first_child);
        child_keys[b].in.push_back(options[i][choice[i]]);
        origin[b].push_back(i);
      }
      double total = 0.0;
      std::vector<int> ids(n_in, -1);
      for (int b = 0; b < fan && total < kInf; ++b) {
        auto& ck = child_keys[static_cast<std::size_t>(b)];
        const auto order = sort_order(ck.in);
        Key sorted;
        sorted.out = ck.out;
        for (auto o : order) sorted.in.push_back(ck.in[o]);
        const Entry& ce = solve(r.first_child + b, sorted);
        total += ce.cost;
        if (!(ce.cost < kInf)) break;
        for (std::size_t q = 0; q < order.size(); ++q)
          ids[origin[static_cast<std::size_t>(b)][order[q]]] = ce.ids[q];
        ck = std::move(sorted);
      }
      if (total < kInf) {
        // the same candidate cannot fill two slots
        auto sorted_ids = ids;
        std::sort(sorted_ids.begin(), sorted_ids.end());
        const bool distinct =
            std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) == sorted_ids.end();
        if (distinct && (total < best.cost || (total == best.cost && ids < best.ids))) {
          best.cost = total;
          best.ids = ids;
          if (cfg.record_links) best_keys = child_keys;
        }
      }

      std::size_t i = 0;
      while (i < n_in) {
        if (++choice[i] < options[i].size()) break;
        choice[i] = 0;
        ++i;
      }
      if (i == n_in) break;
    }

    if (cfg.record_links && best.cost < kInf) record(region, key, best, views, best_keys);
    return best;
  }

  // --- export helpers -----------------------------------------------------

  SketchSlot removed_slot(int region, int c) const {
    SketchSlot s;
    s.added = false;
    s.resolved = c;
    s.weight_class = wclass[static_cast<std::size_t>(c)];
    const auto& u = cand_u[static_cast<std::size_t>(c)];
    s.coord = round_position(dis, region, u, cfg, dis.contains(region, u));
    return s;
  }

  SwapSketch sketch(int region, const Key& key, const std::vector<int>& ids) const {
    SwapSketch sk;
    sk.region = region;
    for (int c : removed) sk.slots.push_back(removed_slot(region, c));
    for (std::size_t i = 0; i < key.in.size(); ++i) {
      SketchSlot s;
      s.added = true;
      s.weight_class = key.in[i].cls;
      s.coord.region = region;
      s.coord.inside = true;
      s.coord.index = key.in[i].cell;
      s.resolved = i < ids.size() ? ids[i] : -1;
      sk.slots.push_back(std::move(s));
    }
    for (const auto& o : key.out) {
      SketchSlot s;
      s.added = true;
      s.weight_class = o.cls;
      s.coord.region = region;
      s.coord.index = o.rung;
      sk.slots.push_back(std::move(s));
    }
    return sk;
  }

  void record(int region, const Key& key, const Entry& best,
              const std::vector<std::vector<std::optional<OutSlot>>>& views,
              const std::vector<Key>& child_keys) {
    const Region& r = dis.region(region);
    const int fan = dis.children_per_node();
    DpEntry parent{sketch(region, key, best.ids), best.cost};
    std::vector<DpEntry> kids;
    const std::size_t n_in = key.in.size();
    for (int b = 0; b < fan; ++b) {
      const int child = r.first_child + b;
      const Key& ck = child_keys[static_cast<std::size_t>(b)];
      const Entry& ce = memo[static_cast<std::size_t>(child)].at(ck.encode());
      DpEntry kid;
      kid.sketch.region = child;
      kid.service_cost = ce.cost;
      for (int c : removed) kid.sketch.slots.push_back(removed_slot(child, c));
      for (std::size_t i = 0; i < n_in + key.out.size(); ++i) {
        SketchSlot s;
        s.added = true;
        s.weight_class = i < n_in ? key.in[i].cls : key.out[i - n_in].cls;
        s.coord.region = child;
        const auto& v = views[static_cast<std::size_t>(b)][i];
        const bool here = i < n_in && dis.contains(child, cell_center(r, key.in[i].cell, rho));
        if (here) {
          // find the chosen sub-cell: the inside slot of ck resolved to best.ids[i]
          for (std::size_t q = 0; q < ck.in.size(); ++q)
            if (ce.ids[q] == best.ids[i]) {
              s.coord.inside = true;
              s.coord.index = ck.in[q].cell;
              s.resolved = best.ids[i];
            }
        } else if (v) {
          s.coord.index = v->rung;
        } else {
          s.coord.far = true;
        }
        kid.sketch.slots.push_back(std::move(s));
      }
      kids.push_back(std::move(kid));
    }
    links.emplace_back(std::move(parent), std::move(kids));
  }

  // --- planted-solution hooks ----------------------------------------------

  Key induced_key(int region, std::span<const int> added) {
    std::vector<int> path;
    for (int at = region; at >= 0; at = dis.region(at).parent) path.push_back(at);
    std::reverse(path.begin(), path.end());

    struct State {
      int mode = 0;  // 0 inside, 1 outside, 2 dropped
      std::vector<std::int64_t> cell;
      OutSlot out;
    };
    std::vector<State> st(added.size());
    const int root = path.front();
    for (std::size_t i = 0; i < added.size(); ++i) {
      const auto c = static_cast<std::size_t>(added[i]);
      if (!addable[c]) throw Error("induced_key: candidate cannot be added");
      st[i].cell = cell_of(dis.region(root), cand_u[c], rho);
    }
    for (std::size_t step = 1; step < path.size(); ++step) {
      const int parent = path[step - 1];
      const int child = path[step];
      for (std::size_t i = 0; i < added.size(); ++i) {
        const auto c = static_cast<std::size_t>(added[i]);
        State& s = st[i];
        if (s.mode == 2) continue;
        if (s.mode == 0) {
          if (dis.contains(child, cand_u[c])) {
            s.cell = cell_of(dis.region(child), cand_u[c], rho);
            continue;
          }
          const auto centre = cell_center(dis.region(parent), s.cell, rho);
          auto v = view(child, centre, wclass[c]);
          if (v) {
            s.mode = 1;
            s.out = *v;
          } else {
            s.mode = 2;
          }
          continue;
        }
        auto v = view(child, out_position(parent, s.out), wclass[c]);
        if (v) {
          s.out = *v;
        } else {
          s.mode = 2;
        }
      }
    }
    Key k;
    for (std::size_t i = 0; i < added.size(); ++i) {
      const auto c = static_cast<std::size_t>(added[i]);
      if (st[i].mode == 0) k.in.push_back({wclass[c], st[i].cell});
      if (st[i].mode == 1) k.out.push_back(st[i].out);
    }
    std::sort(k.in.begin(), k.in.end());
    std::sort(k.out.begin(), k.out.end());
    return k;
  }

  // --- driver ----------------------------------------------------------------

  struct Best {
    ImprovementResult res;
    double best_total = 0.0;
    double tol = 0.0;
  };

  void consider(Best& b, std::vector<int> open, const std::vector<int>& rem,
                const std::vector<int>& add) {
    if (open.empty()) return;
    ++stats.exact_evaluations;
    Solution s = eval_cost(inst, open);
    if (s.total() < b.best_total - b.tol) {
      b.best_total = s.total();
      b.res.solution = std::move(s);
      b.res.removed = rem;
      b.res.added = add;
    }
  }

  Best start_best() {
    Best b;
    b.res.solution = eval_cost(inst, current.open);
    b.best_total = b.res.solution.total();
    b.tol = 1e-12 * std::max(1.0, std::abs(b.best_total));
    return b;
  }

  // Every root key of the selected removal set; each resolved swap is
  // evaluated exactly.
  void search_removal(Best& b) {
    const int r = static_cast<int>(removed.size());
    const int budget = std::min(cfg.delta - r, inst.k() - static_cast<int>(kept.size()));
    if (r > 0) consider(b, kept, removed, {});
    if (budget <= 0) return;

    // root keys: multisets of occupied (class, cell) pairs of the root grid
    const int root = 0;
    std::vector<std::pair<InSlot, std::size_t>> root_occ;
    for (const auto& [key, ids] : occ(root)) {
      InSlot s;
      s.cls = static_cast<int>(key[0]);
      s.cell.assign(key.begin() + 1, key.end());
      root_occ.emplace_back(std::move(s), ids.size());
    }
    std::sort(root_occ.begin(), root_occ.end());

    std::vector<std::size_t> pick;
    std::vector<std::size_t> used(root_occ.size(), 0);
    auto enumerate = [&](auto&& self, std::size_t from) -> void {
      if (!pick.empty()) {
        Key key;
        for (auto i : pick) key.in.push_back(root_occ[i].first);
        const Entry& e = solve(root, key);
        ++stats.root_entries;
        if (e.cost < kInf) {
          std::vector<int> open = kept;
          open.insert(open.end(), e.ids.begin(), e.ids.end());
          consider(b, std::move(open), removed, e.ids);
        }
      }
      if (static_cast<int>(pick.size()) >= budget) return;
      for (std::size_t i = from; i < root_occ.size(); ++i) {
        if (used[i] >= root_occ[i].second) continue;
        ++used[i];
        pick.push_back(i);
        self(self, i);
        pick.pop_back();
        --used[i];
      }
    };
    enumerate(enumerate, 0);
  }

  ImprovementResult finish(Best& b) {
    b.res.improvement = current_total() - b.res.solution.total();
    b.res.stats = stats;
    return std::move(b.res);
  }

  double current_total() const { return eval_cost(inst, current.open).total(); }

  ImprovementResult run() {
    Best b = start_best();
    if (cfg.delta == 0) return finish(b);
    std::vector<int> rem_pool;
    for (int c : current.open)
      if (removable[static_cast<std::size_t>(c)]) rem_pool.push_back(c);
    for (int r = 0; r <= std::min<int>(cfg.delta, static_cast<int>(rem_pool.size())); ++r) {
      for_each_combination(static_cast<int>(rem_pool.size()), r, [&](const std::vector<int>& idx) {
        std::vector<int> rem;
        for (int i : idx) rem.push_back(rem_pool[static_cast<std::size_t>(i)]);
        select(rem);
        ++stats.removal_sets;
        search_removal(b);
        flush_stats();
        return true;
      });
    }
    return finish(b);
  }

  ImprovementResult run_removal(std::span<const int> rem) {
    Best b = start_best();
    select(rem);
    ++stats.removal_sets;
    if (static_cast<int>(removed.size()) <= cfg.delta) search_removal(b);
    flush_stats();
    return finish(b);
  }

  void flush_stats() {
    for (const auto& m : memo) {
      stats.table_entries += m.size();
      stats.max_entries_per_region = std::max(stats.max_entries_per_region, m.size());
    }
  }
};

ImprovementDp::ImprovementDp(const Instance& instance, const Solution& current,
                             const Dissection& dissection, const MoatFlags& candidate_moat,
                             const DpConfig& config)
    : impl_(std::make_unique<Impl>(instance, current, dissection, candidate_moat, config)) {}

ImprovementDp::~ImprovementDp() = default;

ImprovementResult ImprovementDp::run() { return impl_->run(); }

ImprovementResult ImprovementDp::run_removal(std::span<const int> removed) {
  for (int c : removed)
    if (!impl_->removable.at(static_cast<std::size_t>(c)))
      throw Error("run_removal: candidate is not a removable center");
  return impl_->run_removal(removed);
}

void ImprovementDp::select_removal(std::span<const int> removed) {
  for (int c : removed)
    if (!impl_->removable.at(static_cast<std::size_t>(c)))
      throw Error("select_removal: candidate is not a removable center");
  impl_->select(removed);
}

double ImprovementDp::induced_cost(int region, std::span<const int> added) {
  return impl_->solve(region, impl_->induced_key(region, added)).cost;
}

double ImprovementDp::exact_region_cost(int region, std::span<const int> added) const {
  const auto& im = *impl_;
  const auto& clients = im.inst.clients();
  const auto& cands = im.inst.candidates();
  double total = 0.0;
  for (int a : im.dis.region(region).clients) {
    const auto au = static_cast<std::size_t>(a);
    double best = im.base[au];
    for (int c : added)
      best = std::min(best, power_distance(squared_distance(
                                clients[au], cands[static_cast<std::size_t>(c)].position), im.p));
    total += best;
  }
  return total;
}

std::vector<DpEntry> ImprovementDp::entries(int region) const {
  std::vector<DpEntry> out;
  for (const auto& [enc, e] : impl_->memo[static_cast<std::size_t>(region)]) {
    const Key key = decode(enc, impl_->d);
    out.push_back({impl_->sketch(region, key, e.ids), e.cost});
  }
  return out;
}

std::size_t ImprovementDp::entry_count(int region) const {
  return impl_->memo[static_cast<std::size_t>(region)].size();
}

const std::vector<std::pair<DpEntry, std::vector<DpEntry>>>& ImprovementDp::links() const {
  return impl_->links;
}

int ImprovementDp::weight_class(int candidate) const {
  return impl_->wclass.at(static_cast<std::size_t>(candidate));
}

std::size_t ImprovementDp::weight_class_count() const {
  return static_cast<std::size_t>(impl_->n_classes);
}

bool ImprovementDp::removable(int candidate) const {
  return impl_->removable.at(static_cast<std::size_t>(candidate)) != 0;
}

bool ImprovementDp::addable(int candidate) const {
  return impl_->addable.at(static_cast<std::size_t>(candidate)) != 0;
}

ImprovementResult find_improvement(const Instance& instance, const Solution& current,
                                   const Dissection& dissection,
                                   const MoatFlags& candidate_moat, const DpConfig& config) {
  ImprovementDp dp(instance, current, dissection, candidate_moat, config);
  return dp.run();
}

}  // namespace fls
