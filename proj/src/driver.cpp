#include "fls/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include <json.hpp>

#include "fls/rng.hpp"
#include "fls/seeding.hpp"

namespace fls {

int DriverTrace::applied_steps() const {
  int n = 0;
  for (const auto& it : iterations) n += it.applied ? 1 : 0;
  return n;
}

std::string DriverTrace::to_json() const {
  nlohmann::json j;
  j["initial_cost"] = initial_cost;
  j["final_cost"] = final_cost;
  j["gamma"] = gamma;
  j["retries"] = retries;
  auto& its = j["iterations"] = nlohmann::json::array();
  for (const auto& it : iterations) {
    its.push_back({{"iteration", it.iteration},
                   {"cost_before", it.cost_before},
                   {"trial_costs", it.trial_costs},
                   {"best_improvement", it.best_improvement},
                   {"threshold", it.threshold},
                   {"applied", it.applied},
                   {"continued", it.continued},
                   {"cost_after", it.cost_after},
                   {"removed", it.removed},
                   {"added", it.added},
                   {"wall_ms", it.wall_ms}});
  }
  return j.dump();
}

int default_retries(int k, double factor) {
  const double lg = std::log2(static_cast<double>(std::max(k, 1)));
  return std::max(3, static_cast<int>(std::ceil(factor * lg)));
}

DriverResult run_local_search_from(const Instance& instance, const Solution& start,
                                   const DriverConfig& config) {
  using clock = std::chrono::steady_clock;
  const double eps = config.epsilon.value_or(instance.epsilon());
  if (!(eps > 0.0 && eps <= 0.5)) throw Error("epsilon must lie in (0, 0.5]");
  const double log_n = instance.log_n();
  const double gamma = config.gamma.value_or(default_gamma(eps, log_n, config.gamma_exponent));
  const int retries = config.retries.value_or(default_retries(instance.k(), config.retries_factor));
  if (retries < 1) throw Error("retries must be at least 1");
  DpConfig dp = DpConfig::make(config.profile, eps, log_n, config.delta);

  DriverResult out;
  out.trace.gamma = gamma;
  out.trace.retries = retries;

  const Instance work = config.round_opening_costs && instance.weighted()
                            ? round_weights(instance, start.total())
                            : instance;
  Solution cur = eval_cost(work, start.open);
  out.trace.initial_cost = eval_cost(instance, start.open).total();

  for (int it = 0; it < config.max_iterations; ++it) {
    const auto t0 = clock::now();
    IterationRecord rec;
    rec.iteration = it;
    rec.cost_before = cur.total();
    rec.threshold = eps * cur.total() / instance.k();
    std::vector<ImprovementResult> trials(static_cast<std::size_t>(retries));
    auto trial = [&](int t) {
      const std::uint64_t s = derive_seed(
          config.seed, (static_cast<std::uint64_t>(it) << 20) | static_cast<std::uint64_t>(t));
      const Dissection dis = build_dissection(work, s, config.leaf_rule);
      const MoatFlags moat = classify_candidates(dis, work, gamma);
      trials[static_cast<std::size_t>(t)] = find_improvement(work, cur, dis, moat, dp);
    };
    const int workers = std::clamp(config.threads, 1, retries);
    if (workers == 1) {
      for (int t = 0; t < retries; ++t) trial(t);
    } else {
      std::atomic<int> next{0};
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            for (int t; (t = next++) < retries;) trial(t);
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    ImprovementResult best;
    best.solution = cur;
    for (auto& r : trials) {
      rec.trial_costs.push_back(r.solution.total());
      if (r.solution.total() < best.solution.total()) best = std::move(r);
    }
    rec.best_improvement = cur.total() - best.solution.total();
    rec.applied = rec.best_improvement > 0.0;
    rec.continued = rec.best_improvement > rec.threshold;
    if (rec.applied) {
      cur = std::move(best.solution);
      rec.removed = best.removed;
      rec.added = best.added;
    }
    rec.cost_after = cur.total();
    rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    out.trace.iterations.push_back(std::move(rec));
    if (!out.trace.iterations.back().continued) break;
  }

  out.rounded = cur;
  out.solution = eval_cost(instance, cur.open);
  out.trace.final_cost = out.solution.total();
  return out;
}

DriverResult run_local_search(const Instance& instance, const DriverConfig& config) {
  SeedConfig sc;
  sc.seed = config.seed;
  sc.trials = config.seed_trials;
  return run_local_search_from(instance, dsquared_seed(instance, sc), config);
}

double verify_local_optimality(const Instance& instance, const Solution& solution,
                               int swap_size, std::uint64_t move_budget) {
  return best_swap_move(instance, solution, swap_size, move_budget).improvement;
}

}  // namespace fls
