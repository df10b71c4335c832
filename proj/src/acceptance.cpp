#include "fls/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "fls/bench.hpp"
#include "fls/dissection.hpp"
#include "fls/driver.hpp"
#include "fls/find_improvement.hpp"
#include "fls/oracles.hpp"
#include "fls/rng.hpp"
#include "fls/seeding.hpp"

namespace fls::acceptance {
namespace {

// Pinned tolerances and gates.
constexpr double kEpsilon = 0.5;
constexpr int kDelta = 2;
constexpr int kTinyInstances = 100;
constexpr double kRatioGate = 1.5;
constexpr int kRatioGateCount = 95;
constexpr double kRatioCap = 2.0;
constexpr int kDpCases = 50;
constexpr double kCostRelTol = 1e-9;
constexpr int kMoatSamples = 20000;
constexpr int kMoatLogL = 10;
constexpr double kIterationFactor = 4.0;
constexpr int kWeightedSolutions = 100;
constexpr int kBuilds = 1000;
constexpr double kSlopeLo = 0.8;
constexpr double kSlopeHi = 1.6;
constexpr int kSeedRuns = 100;
constexpr double kSeedGate = 3.0;
constexpr std::uint64_t kFamilySeed = 20240601;

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

struct TinyRun {
  double opt = 0.0;
  DriverResult result;
};

const std::vector<TinyRun>& tiny_runs() {
  static const std::vector<TinyRun> runs = [] {
    std::vector<TinyRun> out;
    for (int i = 0; i < kTinyInstances; ++i) {
      const Instance inst = tiny_instance(derive_seed(kFamilySeed, static_cast<std::uint64_t>(i)));
      DriverConfig cfg;
      cfg.epsilon = kEpsilon;
      cfg.delta = kDelta;
      cfg.profile = DpProfile::Desk;
      cfg.seed = static_cast<std::uint64_t>(i) + 1;
      TinyRun r;
      r.opt = exact_opt(inst).total();
      r.result = run_local_search(inst, cfg);
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

std::vector<Point> distinct_points(std::mt19937_64& rng, int count, int d, int side,
                                   std::set<Point>& taken) {
  std::uniform_int_distribution<Coord> u(0, side - 1);
  std::vector<Point> out;
  while (static_cast<int>(out.size()) < count) {
    Point p;
    for (int i = 0; i < d; ++i) p.coords.push_back(u(rng));
    if (taken.insert(p).second) out.push_back(p);
  }
  return out;
}

// Small random instance: distinct clients, candidates partly on clients.
Instance small_instance(std::uint64_t seed, int d, int n, int m, int k, int side) {
  auto rng = make_rng(seed, 0x5A11);
  std::set<Point> taken;
  std::vector<Point> clients = distinct_points(rng, n, d, side, taken);
  std::vector<Candidate> cands;
  std::uniform_int_distribution<int> coin(0, 1);
  std::set<Point> cset;
  for (const auto& p : clients)
    if (static_cast<int>(cset.size()) < m / 2 && coin(rng)) cset.insert(p);
  std::set<Point> none;
  while (static_cast<int>(cset.size()) < m) {
    auto extra = distinct_points(rng, 1, d, side, none);
    cset.insert(extra[0]);
  }
  for (const auto& p : cset) cands.push_back({p, 0.0});
  return Instance(std::move(clients), std::move(cands), k, kEpsilon, 2);
}

}  // namespace

Instance tiny_instance(std::uint64_t seed) {
  auto rng = make_rng(seed, 0x7111);
  std::uniform_int_distribution<int> kd(1, 3);
  const int k = kd(rng);
  std::uniform_int_distribution<int> nd(k + 3, 12);
  std::uniform_int_distribution<int> md(std::max(k, 4), 10);
  const int n = nd(rng);
  const int m = md(rng);
  return small_instance(rng(), 2, n, m, k, 16);
}

CriterionResult approximation_vs_opt() {
  CriterionResult r{1, "approximation vs exact OPT", false, ""};
  const auto t0 = std::chrono::steady_clock::now();
  const auto& runs = tiny_runs();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  int within = 0;
  double worst = 1.0;
  bool capped = true;
  for (const auto& run : runs) {
    const double cost = run.result.solution.total();
    const double ratio = run.opt > 0.0 ? cost / run.opt : (cost > 0.0 ? INFINITY : 1.0);
    worst = std::max(worst, ratio);
    if (ratio <= kRatioGate * (1 + kCostRelTol)) ++within;
    if (!(ratio <= kRatioCap * (1 + kCostRelTol))) capped = false;
  }
  r.passed = within >= kRatioGateCount && capped;
  r.detail = std::to_string(within) + "/" + std::to_string(runs.size()) + " within 1.5x, worst " +
             fmt(worst) + "x, " + fmt(secs, 3) + " s";
  return r;
}

CriterionResult dp_near_optimality() {
  CriterionResult r{2, "DP near-optimality vs exact delta-swap", false, ""};
  int ok = 0, equal_required = 0, equal_met = 0, positive = 0;
  double worst_share = 1.0;
  for (int i = 0; i < kDpCases; ++i) {
    const std::uint64_t seed = derive_seed(kFamilySeed + 2, static_cast<std::uint64_t>(i));
    auto rng = make_rng(seed);
    std::uniform_int_distribution<int> kd(1, 3), nd(8, 20), md(6, 12);
    const int k = kd(rng);
    const int n = nd(rng);
    const int m = std::max(md(rng), k + 1);
    const int delta = 1 + i % 2;
    const Instance inst = small_instance(rng(), 2, n, m, k, 16);
    SeedConfig sc;
    sc.seed = seed;
    const Solution cur = dsquared_seed(inst, sc);
    const Dissection dis = build_dissection(inst, seed);
    const double gamma = i < kDpCases / 2 ? default_gamma(kEpsilon, inst.log_n()) : 0.05;
    const MoatFlags moat = classify_candidates(dis, inst, gamma);
    std::vector<int> forbidden;
    for (std::size_t c = 0; c < moat.moat.size(); ++c)
      if (moat.moat[c]) forbidden.push_back(static_cast<int>(c));
    const DpConfig cfg = DpConfig::desk(kEpsilon, inst.log_n(), delta);
    const ImprovementResult dp = find_improvement(inst, cur, dis, moat, cfg);
    const DeltaOptimum oracle = exact_opt_delta(inst, cur.open, delta, forbidden);

    const double tol = kCostRelTol * std::max(1.0, cur.total());
    if (oracle.improvement > 0) {
      ++positive;
      worst_share = std::min(worst_share, dp.improvement / oracle.improvement);
    }
    if (dp.improvement >= (1.0 - kEpsilon) * oracle.improvement - tol) ++ok;

    // swap candidates clear of every region boundary by one ladder floor
    bool clear = true;
    std::vector<int> swapped = oracle.removed;
    swapped.insert(swapped.end(), oracle.added.begin(), oracle.added.end());
    const double L = static_cast<double>(inst.grid_side());
    for (int c : swapped) {
      const auto u = dis.shifted(inst.candidates()[static_cast<std::size_t>(c)].position);
      for (int lvl = 0; lvl <= dis.depth() && clear; ++lvl) {
        const double side = std::ldexp(L, -lvl);
        for (double x : u) {
          const double rem = std::fmod(x, side);
          if (std::min(rem, side - rem) <= cfg.ladder_floor(side)) clear = false;
        }
      }
    }
    if (clear) {
      ++equal_required;
      if (std::abs(dp.improvement - oracle.improvement) <= tol) ++equal_met;
    }
  }
  r.passed = ok == kDpCases && equal_met == equal_required;
  r.detail = std::to_string(ok) + "/" + std::to_string(kDpCases) + " within (1-eps), " +
             std::to_string(equal_met) + "/" + std::to_string(equal_required) +
             " exact where required, " + std::to_string(positive) +
             " with positive oracle gain, min share " + fmt(worst_share);
  return r;
}

CriterionResult moat_probability() {
  CriterionResult r{3, "moat probability Monte Carlo", true, ""};
  const Coord L = Coord{1} << kMoatLogL;
  const double logL = kMoatLogL;
  std::ostringstream detail;
  for (int d : {1, 2}) {
    for (double gamma : {0.001, 0.01, 0.05}) {
      auto rng = make_rng(kFamilySeed + 3, static_cast<std::uint64_t>(d * 1000 + gamma * 1e4));
      std::uniform_int_distribution<Coord> u(0, L - 1);
      int hits = 0;
      for (int s = 0; s < kMoatSamples; ++s) {
        std::vector<double> pos(static_cast<std::size_t>(d));
        for (auto& x : pos) {
          // point and shift drawn independently
          Coord y = (u(rng) - u(rng)) % L;
          if (y < 0) y += L;
          x = static_cast<double>(y) + 0.5;
        }
        if (moat_level(pos, gamma, static_cast<double>(L), kMoatLogL) >= 0) ++hits;
      }
      const double freq = static_cast<double>(hits) / kMoatSamples;
      // union over the d axes of the per-axis bound gamma * log L
      const double mean = d * gamma * logL;
      const double bound = mean + 3.0 * std::sqrt(mean / kMoatSamples);
      const bool ok = freq <= bound;
      r.passed = r.passed && ok;
      detail << "d=" << d << " g=" << gamma << ": " << fmt(freq, 3) << (ok ? "<=" : ">")
             << fmt(bound, 3) << "; ";
    }
  }
  r.detail = detail.str();
  return r;
}

CriterionResult termination_bound() {
  CriterionResult r{4, "termination bound and loop guard", false, ""};
  int bound_ok = 0, guard_ok = 0, terminal_moves = 0;
  int worst_iters = 0;
  const auto& runs = tiny_runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& tr = runs[i].result.trace;
    const int k = tiny_instance(derive_seed(kFamilySeed, i)).k();
    const int iters = static_cast<int>(tr.iterations.size());
    worst_iters = std::max(worst_iters, iters);
    double bound = INFINITY;
    const double first = tr.iterations.empty() ? 0.0 : tr.iterations.front().cost_before;
    const double last = tr.iterations.empty() ? 0.0 : tr.iterations.back().cost_after;
    if (last > 0.0) bound = kIterationFactor * k * std::log(first / last) + 1.0;
    if (iters <= bound + 1e-12) ++bound_ok;
    // the loop goes on exactly when the step beat eps * cost / k
    bool guard = true;
    for (std::size_t t = 0; t < tr.iterations.size(); ++t) {
      const auto& it = tr.iterations[t];
      const bool above = it.cost_before - it.cost_after > kEpsilon * it.cost_before / k;
      const bool last = t + 1 == tr.iterations.size();
      if (it.continued != above || it.continued == last) guard = false;
      if (last && it.applied) ++terminal_moves;
    }
    if (guard) ++guard_ok;
  }
  const auto n = static_cast<int>(runs.size());
  r.passed = bound_ok == n && guard_ok == n;
  r.detail = std::to_string(bound_ok) + "/" + std::to_string(n) + " within iteration bound, " +
             std::to_string(guard_ok) + "/" + std::to_string(n) +
             " with guarded steps, max iterations " + std::to_string(worst_iters) + ", " +
             std::to_string(terminal_moves) + " runs moved on the stopping iteration";
  return r;
}

CriterionResult weight_rounding() {
  CriterionResult r{5, "weight rounding bounds", false, ""};
  int ok = 0;
  double worst_excess = 0.0;
  for (int i = 0; i < kWeightedSolutions; ++i) {
    auto rng = make_rng(kFamilySeed + 5, static_cast<std::uint64_t>(i));
    std::uniform_int_distribution<int> kd(1, 4);
    const int k = kd(rng);
    Instance base = small_instance(rng(), 2, 10, 8, k, 32);
    std::uniform_real_distribution<double> wd(0.0, 200.0);
    std::uniform_int_distribution<int> zero(0, 4);
    std::vector<double> w;
    for (std::size_t c = 0; c < base.candidates().size(); ++c)
      w.push_back(zero(rng) == 0 ? 0.0 : wd(rng));
    const Instance inst = base.with_weights(w);
    SeedConfig sc;
    sc.seed = rng();
    const Solution ref = dsquared_seed(inst, sc);
    const double reference = ref.total();
    const Instance rounded = round_weights(inst, reference);

    std::vector<int> all(inst.candidates().size());
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = static_cast<int>(c);
    std::shuffle(all.begin(), all.end(), rng);
    std::uniform_int_distribution<int> sd(1, k);
    std::vector<int> open(all.begin(), all.begin() + sd(rng));
    const double orig = eval_cost(inst, open).total();
    const double after = eval_cost(rounded, open).total();
    const double n = static_cast<double>(inst.size_n());
    const double hi = (1.0 + kEpsilon) * orig + k * kEpsilon * reference / n;
    const double tol = kCostRelTol * std::max(1.0, orig);
    if (after >= orig - tol && after <= hi + tol) ++ok;
    worst_excess = std::max(worst_excess, (after - orig) / std::max(hi - orig, 1e-300));
  }
  r.passed = ok == kWeightedSolutions;
  r.detail = std::to_string(ok) + "/" + std::to_string(kWeightedSolutions) +
             " within bounds, max used share of slack " + fmt(worst_excess);
  return r;
}

CriterionResult structural_invariants() {
  CriterionResult r{6, "dissection and DP invariants", false, ""};
  int structure_ok = 0, dp_ok = 0;
  std::string first_failure;
  for (int i = 0; i < kBuilds; ++i) {
    const std::uint64_t seed = derive_seed(kFamilySeed + 6, static_cast<std::uint64_t>(i));
    auto rng = make_rng(seed);
    const int d = 1 + i % 3;
    std::uniform_int_distribution<int> nd(1, 16), kd(1, 3);
    const int side = d == 3 ? 8 : 32;
    const int n = nd(rng);
    const int m = std::max(3, nd(rng) / 2 + 2);
    const int k = std::min(kd(rng), m);
    const Instance inst = small_instance(rng(), d, n, m, k, side);
    const LeafRule rule = i % 4 == 3 ? LeafRule::UnitSide : LeafRule::OneCandidate;
    const Dissection dis = build_dissection(inst, seed, rule);

    bool ok = dis.depth() <= dis.max_level();
    const auto& regs = dis.regions();
    for (std::size_t id = 0; id < regs.size() && ok; ++id) {
      const Region& reg = regs[id];
      if (reg.is_leaf()) {
        const bool empty = reg.clients.empty() && reg.candidates.empty();
        const bool rule_ok = rule == LeafRule::OneCandidate ? reg.candidates.size() <= 1
                                                            : false;
        ok = empty || reg.side <= 1.0 || rule_ok;
        continue;
      }
      std::vector<int> cl, ca;
      for (int c = 0; c < dis.children_per_node(); ++c) {
        const Region& ch = dis.region(reg.first_child + c);
        if (ch.parent != static_cast<int>(id) || ch.side * 2 != reg.side) ok = false;
        for (std::size_t ax = 0; ax < inst.dimension(); ++ax) {
          const double lo = ch.corner[ax] - reg.corner[ax];
          if (lo != 0.0 && lo != ch.side) ok = false;
        }
        cl.insert(cl.end(), ch.clients.begin(), ch.clients.end());
        ca.insert(ca.end(), ch.candidates.begin(), ch.candidates.end());
        for (int a : ch.clients)
          if (!dis.contains(reg.first_child + c, dis.shifted(inst.clients()[static_cast<std::size_t>(a)])))
            ok = false;
      }
      std::sort(cl.begin(), cl.end());
      std::sort(ca.begin(), ca.end());
      auto pc = reg.clients, pa = reg.candidates;
      std::sort(pc.begin(), pc.end());
      std::sort(pa.begin(), pa.end());
      if (cl != pc || ca != pa) ok = false;
    }
    if (ok) ++structure_ok;
    else if (first_failure.empty()) first_failure = "structure at build " + std::to_string(i);

    SeedConfig sc;
    sc.seed = seed;
    const Solution cur = dsquared_seed(inst, sc);
    const double gamma = i % 2 ? 0.05 : default_gamma(kEpsilon, inst.log_n());
    const MoatFlags moat = classify_candidates(dis, inst, gamma);
    const ImprovementResult res =
        find_improvement(inst, cur, dis, moat, DpConfig::desk(kEpsilon, inst.log_n(), 1 + i % 2));
    bool good = static_cast<int>(res.solution.open.size()) <= inst.k() && !res.solution.open.empty();
    std::set<int> before(cur.open.begin(), cur.open.end()), after(res.solution.open.begin(), res.solution.open.end());
    for (int c : before)
      if (!after.count(c) && moat.moat[static_cast<std::size_t>(c)]) good = false;
    for (int c : after)
      if (!before.count(c) && moat.moat[static_cast<std::size_t>(c)]) good = false;
    const Solution check = eval_cost(inst, res.solution.open);
    if (!close_rel(check.total(), res.solution.total(), kCostRelTol)) good = false;
    if (res.solution.total() > cur.total() * (1 + kCostRelTol)) good = false;
    if (good) ++dp_ok;
    else if (first_failure.empty()) first_failure = "dp output at build " + std::to_string(i);
  }
  r.passed = structure_ok == kBuilds && dp_ok == kBuilds;
  r.detail = std::to_string(structure_ok) + "/" + std::to_string(kBuilds) + " builds valid, " +
             std::to_string(dp_ok) + "/" + std::to_string(kBuilds) + " DP outputs valid" +
             (first_failure.empty() ? "" : " (first failure: " + first_failure + ")");
  return r;
}

CriterionResult runtime_scaling() {
  CriterionResult r{7, "DP runtime scaling in n", false, ""};
  std::vector<double> xs, ys;
  std::ostringstream detail;
  for (int n : {100, 200, 400, 800}) {
    GeneratorSpec g;
    g.kind = GeneratorKind::Gaussian;
    g.d = 2;
    g.n = n;
    g.k = 5;
    g.epsilon = kEpsilon;
    g.components = 8;
    g.spread = 0.05;
    g.ring_candidates = false;
    const Instance inst = generate_instance(g, kFamilySeed + 7);
    SeedConfig sc;
    sc.seed = 7;
    const Solution cur = dsquared_seed(inst, sc);
    const DpConfig cfg = DpConfig::desk(kEpsilon, inst.log_n(), kDelta);
    std::vector<double> times;
    for (int t = 0; t < 3; ++t) {
      const Dissection dis = build_dissection(inst, 100 + static_cast<std::uint64_t>(t));
      const MoatFlags moat = classify_candidates(dis, inst, default_gamma(kEpsilon, inst.log_n()));
      const auto t0 = std::chrono::steady_clock::now();
      (void)find_improvement(inst, cur, dis, moat, cfg);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    const double med = times[1];
    const double size = static_cast<double>(inst.size_n());
    xs.push_back(std::log(size));
    ys.push_back(std::log(med));
    detail << "n=" << n << "(" << inst.size_n() << "):" << fmt(med * 1e3, 3) << "ms ";
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  r.passed = slope >= kSlopeLo && slope <= kSlopeHi;
  r.detail = "slope " + fmt(slope, 3) + " (" + detail.str() + ")";
  return r;
}

CriterionResult baseline_sanity() {
  CriterionResult r{8, "baseline sanity", false, ""};
  int seed_ok = 0, swap_ok = 0;
  double worst = 0.0;
  const auto& runs = tiny_runs();
  const int count = static_cast<int>(runs.size());
  for (int i = 0; i < count; ++i) {
    const Instance inst = tiny_instance(derive_seed(kFamilySeed, static_cast<std::uint64_t>(i)));
    const double opt = runs[static_cast<std::size_t>(i)].opt;
    double sum = 0.0;
    for (int s = 0; s < kSeedRuns; ++s) {
      SeedConfig sc;
      sc.seed = static_cast<std::uint64_t>(s) + 1;
      sum += dsquared_seed(inst, sc).total();
    }
    const double mean = sum / kSeedRuns;
    worst = std::max(worst, opt > 0 ? mean / opt : (mean > 0 ? INFINITY : 1.0));
    if (mean <= kSeedGate * opt * (1 + kCostRelTol)) ++seed_ok;

    SeedConfig sc;
    sc.seed = static_cast<std::uint64_t>(i) + 1;
    const int swap = 1 + i % 2;
    const SearchResult ls = exhaustive_swap_search(inst, dsquared_seed(inst, sc), swap, 0.0);
    const Move mv = best_swap_move(inst, ls.solution, swap);
    if (mv.improvement <= 1e-12 * std::abs(ls.solution.total())) ++swap_ok;
  }
  r.passed = seed_ok == count && swap_ok == count;
  r.detail = std::to_string(seed_ok) + "/" + std::to_string(count) +
             " instances with mean D2 cost <= 3x OPT (worst " + fmt(worst) + "x), " +
             std::to_string(swap_ok) + "/" + std::to_string(count) + " swap optima confirmed";
  return r;
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, approximation_vs_opt}, {2, dp_near_optimality}, {3, moat_probability},
      {4, termination_bound},    {5, weight_rounding},    {6, structural_invariants},
      {7, runtime_scaling},      {8, baseline_sanity}};
  return all;
}

std::vector<CriterionResult> run_all(const std::vector<int>& ids, std::ostream& out) {
  std::vector<CriterionResult> results;
  for (const auto& c : criteria()) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), c.id) == ids.end()) continue;
    CriterionResult res;
    try {
      res = c.run();
    } catch (const std::exception& e) {
      res = {c.id, "criterion " + std::to_string(c.id), false, std::string("exception: ") + e.what()};
    }
    out << (res.passed ? "PASS" : "FAIL") << " criterion " << res.id << ": " << res.title << " -- "
        << res.detail << std::endl;
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace fls::acceptance
