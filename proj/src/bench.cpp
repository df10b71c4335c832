#include "fls/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "fls/rng.hpp"
#include "fls/seeding.hpp"

namespace fls {

using nlohmann::json;

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Uniform: return "uniform";
    case GeneratorKind::Gaussian: return "gaussian";
    case GeneratorKind::GridClusters: return "grid_clusters";
  }
  return "uniform";
}

GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "uniform") return GeneratorKind::Uniform;
  if (s == "gaussian") return GeneratorKind::Gaussian;
  if (s == "grid_clusters") return GeneratorKind::GridClusters;
  throw Error("unknown generator kind: " + s);
}

std::string to_string(DpProfile profile) {
  return profile == DpProfile::Desk ? "desk" : "paper-faithful";
}

DpProfile profile_from_string(const std::string& s) {
  if (s == "desk") return DpProfile::Desk;
  if (s == "paper-faithful") return DpProfile::PaperFaithful;
  throw Error("unknown dp profile: " + s);
}

json GeneratorSpec::to_json() const {
  return {{"kind", to_string(kind)}, {"d", d}, {"n", n}, {"k", k}, {"epsilon", epsilon},
          {"p", p}, {"components", components}, {"spread", spread},
          {"ring_candidates", ring_candidates}, {"opening_cost", opening_cost}};
}

GeneratorSpec GeneratorSpec::from_json(const json& j) {
  GeneratorSpec s;
  s.kind = generator_kind_from_string(j.value("kind", std::string("uniform")));
  s.d = j.value("d", s.d);
  s.n = j.value("n", s.n);
  s.k = j.value("k", s.k);
  s.epsilon = j.value("epsilon", s.epsilon);
  s.p = j.value("p", s.p);
  s.components = j.value("components", s.components);
  s.spread = j.value("spread", s.spread);
  s.ring_candidates = j.value("ring_candidates", s.ring_candidates);
  s.opening_cost = j.value("opening_cost", s.opening_cost);
  return s;
}

Instance generate_instance(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.d < 1 || spec.n < 1 || spec.k < 1 || spec.p < 1)
    throw Error("generator: d, n, k and p must be positive");
  if (spec.components < 1 || spec.spread < 0.0 || spec.opening_cost < 0.0)
    throw Error("generator: invalid components, spread or opening cost");

  auto rng = make_rng(seed, 0x6E4E);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto d = static_cast<std::size_t>(spec.d);
  std::vector<std::vector<double>> raw;
  raw.reserve(static_cast<std::size_t>(spec.n));

  switch (spec.kind) {
    case GeneratorKind::Uniform:
      for (int i = 0; i < spec.n; ++i) {
        std::vector<double> x(d);
        for (auto& v : x) v = unit(rng);
        raw.push_back(std::move(x));
      }
      break;
    case GeneratorKind::Gaussian: {
      std::vector<std::vector<double>> centers(static_cast<std::size_t>(spec.components));
      for (auto& c : centers) {
        c.resize(d);
        for (auto& v : c) v = unit(rng);
      }
      std::normal_distribution<double> noise(0.0, spec.spread);
      std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
      for (int i = 0; i < spec.n; ++i) {
        std::vector<double> x = centers[pick(rng)];
        for (auto& v : x) v += noise(rng);
        raw.push_back(std::move(x));
      }
      break;
    }
    case GeneratorKind::GridClusters: {
      const int per_axis = static_cast<int>(
          std::ceil(std::pow(static_cast<double>(spec.components), 1.0 / spec.d) - 1e-9));
      std::uniform_real_distribution<double> jitter(-spec.spread, spec.spread);
      for (int i = 0; i < spec.n; ++i) {
        int cell = i % spec.components;
        std::vector<double> x(d);
        for (auto& v : x) {
          v = static_cast<double>(cell % per_axis) + jitter(rng);
          cell /= per_axis;
        }
        raw.push_back(std::move(x));
      }
      break;
    }
  }

  const SnappedPoints snapped = snap_to_grid(raw, spec.epsilon);
  std::vector<Point> cand_points;
  if (spec.ring_candidates) {
    cand_points = generate_candidates(snapped.points, spec.epsilon, snapped.grid_side);
  } else {
    std::set<Point> uniq(snapped.points.begin(), snapped.points.end());
    cand_points.assign(uniq.begin(), uniq.end());
  }
  std::vector<Candidate> cands;
  cands.reserve(cand_points.size());
  for (auto& p : cand_points) cands.push_back({std::move(p), spec.opening_cost});
  const int k = std::min<int>(spec.k, static_cast<int>(cands.size()));
  return Instance(snapped.points, std::move(cands), k, spec.epsilon, spec.p, snapped.grid_side);
}

json driver_config_to_json(const DriverConfig& c) {
  json j = {{"delta", c.delta},
            {"gamma_exponent", c.gamma_exponent},
            {"retries_factor", c.retries_factor},
            {"seed", c.seed},
            {"profile", to_string(c.profile)},
            {"seed_trials", c.seed_trials},
            {"max_iterations", c.max_iterations},
            {"leaf_rule", c.leaf_rule == LeafRule::OneCandidate ? "one_candidate" : "unit_side"},
            {"round_opening_costs", c.round_opening_costs},
            {"threads", c.threads}};
  j["epsilon"] = c.epsilon ? json(*c.epsilon) : json(nullptr);
  j["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  j["retries"] = c.retries ? json(*c.retries) : json(nullptr);
  return j;
}

DriverConfig driver_config_from_json(const json& j) {
  DriverConfig c;
  c.delta = j.value("delta", c.delta);
  c.gamma_exponent = j.value("gamma_exponent", c.gamma_exponent);
  c.retries_factor = j.value("retries_factor", c.retries_factor);
  c.seed = j.value("seed", c.seed);
  c.profile = profile_from_string(j.value("profile", std::string("desk")));
  c.seed_trials = j.value("seed_trials", c.seed_trials);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.leaf_rule = j.value("leaf_rule", std::string("one_candidate")) == "unit_side"
                    ? LeafRule::UnitSide
                    : LeafRule::OneCandidate;
  c.round_opening_costs = j.value("round_opening_costs", c.round_opening_costs);
  c.threads = j.value("threads", c.threads);
  if (j.contains("epsilon") && !j["epsilon"].is_null()) c.epsilon = j["epsilon"].get<double>();
  if (j.contains("gamma") && !j["gamma"].is_null()) c.gamma = j["gamma"].get<double>();
  if (j.contains("retries") && !j["retries"].is_null()) c.retries = j["retries"].get<int>();
  return c;
}

json ExperimentRecord::to_json() const {
  json j = {{"key", key},
            {"instance", instance},
            {"algorithm", algorithm},
            {"config", config},
            {"seed", seed},
            {"status", status},
            {"message", message},
            {"final_cost", final_cost},
            {"iterations", iterations},
            {"wall_ms", wall_ms},
            {"trace_ref", trace_ref}};
  j["oracle_cost"] = oracle_cost ? json(*oracle_cost) : json(nullptr);
  j["ratio"] = ratio ? json(*ratio) : json(nullptr);
  return j;
}

ExperimentRecord ExperimentRecord::from_json(const json& j) {
  ExperimentRecord r;
  r.key = j.at("key").get<std::string>();
  r.instance = j.at("instance");
  r.algorithm = j.at("algorithm").get<std::string>();
  r.config = j.at("config");
  r.seed = j.at("seed").get<std::uint64_t>();
  r.status = j.at("status").get<std::string>();
  r.message = j.value("message", std::string());
  r.final_cost = j.at("final_cost").get<double>();
  if (!j.at("oracle_cost").is_null()) r.oracle_cost = j["oracle_cost"].get<double>();
  if (!j.at("ratio").is_null()) r.ratio = j["ratio"].get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.trace_ref = j.value("trace_ref", std::string());
  return r;
}

json InstanceEntry::descriptor() const {
  json j = {{"name", name}, {"seed", seed}};
  if (generator) j["generator"] = generator->to_json();
  if (path) j["path"] = *path;
  return j;
}

Instance InstanceEntry::load() const {
  if (path) return load_instance(*path);
  if (!generator) throw Error("instance entry '" + name + "' has neither generator nor path");
  return generate_instance(*generator, seed);
}

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {"fls", "kmeanspp", "lloyd", "swap1", "swap2"};
  return names;
}

MatrixConfig MatrixConfig::from_json(const json& j) {
  MatrixConfig m;
  for (const auto& e : j.value("instances", json::array())) {
    InstanceEntry ie;
    ie.seed = e.value("seed", std::uint64_t{1});
    if (e.contains("path")) ie.path = e["path"].get<std::string>();
    if (e.contains("generator")) ie.generator = GeneratorSpec::from_json(e["generator"]);
    if (!ie.path && !ie.generator) throw Error("matrix instance needs 'generator' or 'path'");
    ie.name = e.value("name", std::string());
    if (ie.name.empty()) {
      if (ie.path) {
        ie.name = *ie.path;
      } else {
        const auto& g = *ie.generator;
        ie.name = to_string(g.kind) + "-d" + std::to_string(g.d) + "-n" + std::to_string(g.n) +
                  "-k" + std::to_string(g.k) + "-s" + std::to_string(ie.seed);
      }
    }
    m.instances.push_back(std::move(ie));
  }
  for (const auto& a : j.value("algorithms", json::array())) {
    const auto name = a.get<std::string>();
    const auto& known = known_algorithms();
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw Error("unknown algorithm: " + name);
    m.algorithms.push_back(name);
  }
  for (const auto& s : j.value("seeds", json::array())) m.seeds.push_back(s.get<std::uint64_t>());
  m.oracle = j.value("oracle", false);
  if (j.contains("oracle_budget")) {
    m.oracle_budget.max_subsets = j["oracle_budget"].value("max_subsets", m.oracle_budget.max_subsets);
    m.oracle_budget.time_limit_s = j["oracle_budget"].value("time_limit_s", m.oracle_budget.time_limit_s);
  }
  if (j.contains("driver")) m.driver = driver_config_from_json(j["driver"]);
  m.workers = j.value("workers", 1);
  if (m.workers < 1) throw Error("workers must be at least 1");
  return m;
}

std::string cell_key(const std::string& instance, const std::string& algorithm,
                     std::uint64_t seed) {
  return instance + "|" + algorithm + "|" + std::to_string(seed);
}

CellOutcome run_cell(const Instance& instance, const std::string& algorithm, std::uint64_t seed,
                     const DriverConfig& driver, std::optional<double> oracle_cost) {
  using clock = std::chrono::steady_clock;
  CellOutcome out;
  ExperimentRecord& r = out.record;
  r.algorithm = algorithm;
  r.seed = seed;
  DriverConfig dc = driver;
  dc.seed = seed;
  r.config = driver_config_to_json(dc);

  const auto t0 = clock::now();
  SeedConfig sc;
  sc.seed = seed;
  sc.trials = dc.seed_trials;
  Solution sol;
  if (algorithm == "fls") {
    DriverResult res = run_local_search(instance, dc);
    sol = res.solution;
    r.iterations = static_cast<int>(res.trace.iterations.size());
    out.trace = std::move(res.trace);
  } else if (algorithm == "kmeanspp") {
    sol = dsquared_seed(instance, sc);
  } else if (algorithm == "lloyd") {
    auto res = lloyd_refine(instance, dsquared_seed(instance, sc), dc.max_iterations);
    sol = res.solution;
    r.iterations = res.iterations;
  } else if (algorithm == "swap1" || algorithm == "swap2") {
    const double eps = dc.epsilon.value_or(instance.epsilon());
    auto res = exhaustive_swap_search(instance, dsquared_seed(instance, sc),
                                      algorithm == "swap1" ? 1 : 2, eps);
    sol = res.solution;
    r.iterations = res.iterations;
  } else {
    throw Error("unknown algorithm: " + algorithm);
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  r.final_cost = sol.total();
  if (oracle_cost) {
    r.oracle_cost = oracle_cost;
    if (*oracle_cost > 0.0) r.ratio = r.final_cost / *oracle_cost;
  }
  return out;
}

std::vector<ExperimentRecord> read_records(const std::string& jsonl_path) {
  std::vector<ExperimentRecord> out;
  std::ifstream in(jsonl_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // a torn final line from an interrupted run is ignored
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    out.push_back(ExperimentRecord::from_json(j));
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string num(double v) { return json(v).dump(); }

}  // namespace

void write_summary_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "key,instance,algorithm,seed,status,final_cost,oracle_cost,ratio,iterations,wall_ms\n";
  for (const auto& r : records) {
    out << csv_field(r.key) << ',' << csv_field(r.instance.value("name", std::string())) << ','
        << csv_field(r.algorithm) << ',' << r.seed << ',' << r.status << ','
        << num(r.final_cost) << ',' << (r.oracle_cost ? num(*r.oracle_cost) : "") << ','
        << (r.ratio ? num(*r.ratio) : "") << ',' << r.iterations << ',' << num(r.wall_ms)
        << '\n';
  }
}

std::vector<ExperimentRecord> run_matrix(const MatrixConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path dir(out_dir);
  const std::string results = (dir / "results.jsonl").string();
  const std::string traces = (dir / "traces.jsonl").string();

  std::set<std::string> done;
  for (const auto& r : read_records(results)) done.insert(r.key);

  struct Cell {
    std::size_t instance;
    std::string algorithm;
    std::uint64_t seed;
    std::string key;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < config.instances.size(); ++i)
    for (const auto& a : config.algorithms)
      for (auto s : config.seeds) {
        auto key = cell_key(config.instances[i].name, a, s);
        if (!done.count(key)) cells.push_back({i, a, s, std::move(key)});
      }

  // an interrupted run may leave a torn last line; start on a fresh one
  bool torn = false;
  {
    std::ifstream in(results, std::ios::binary);
    if (in && in.seekg(0, std::ios::end) && in.tellg() > 0) {
      in.seekg(-1, std::ios::end);
      torn = in.get() != '\n';
    }
  }
  std::ofstream res_out(results, std::ios::app);
  if (torn) res_out << '\n';
  std::ofstream trace_out(traces, std::ios::app);
  if (!res_out || !trace_out) throw Error("cannot write to output directory " + out_dir);

  // instances (and oracle values) are prepared outside the timed cells
  std::vector<std::optional<Instance>> instances(config.instances.size());
  std::vector<std::optional<double>> oracle(config.instances.size());
  std::vector<std::string> load_error(config.instances.size());
  std::vector<char> needed(config.instances.size(), 0);
  for (const auto& c : cells) needed[c.instance] = 1;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!needed[i]) continue;
    try {
      instances[i] = config.instances[i].load();
      if (config.oracle) {
        try {
          oracle[i] = exact_opt(*instances[i], config.oracle_budget).total();
        } catch (const BudgetExceeded&) {
        }
      }
    } catch (const std::exception& e) {
      load_error[i] = e.what();
    }
  }

  std::mutex mu;
  std::vector<ExperimentRecord> produced;
  auto append = [&](CellOutcome&& o) {
    std::lock_guard<std::mutex> lock(mu);
    if (o.trace) {
      json t = json::parse(o.trace->to_json());
      t["key"] = o.record.key;
      trace_out << t.dump() << '\n';
      trace_out.flush();
    }
    res_out << o.record.to_json().dump() << '\n';
    res_out.flush();
    produced.push_back(std::move(o.record));
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx; (idx = next++) < cells.size();) {
      const Cell& c = cells[idx];
      CellOutcome o;
      try {
        if (!instances[c.instance]) throw Error(load_error[c.instance]);
        o = run_cell(*instances[c.instance], c.algorithm, c.seed, config.driver, oracle[c.instance]);
      } catch (const BudgetExceeded& e) {
        o = CellOutcome{};
        o.record.status = "budget";
        o.record.message = e.what();
      } catch (const std::exception& e) {
        o = CellOutcome{};
        o.record.status = "error";
        o.record.message = e.what();
      }
      ExperimentRecord& r = o.record;
      r.key = c.key;
      r.instance = config.instances[c.instance].descriptor();
      r.algorithm = c.algorithm;
      r.seed = c.seed;
      if (r.config.is_null()) {
        DriverConfig dc = config.driver;
        dc.seed = c.seed;
        r.config = driver_config_to_json(dc);
      }
      if (o.trace) r.trace_ref = "traces.jsonl#" + c.key;
      append(std::move(o));
    }
  };
  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(cells.size())));
  if (workers == 1 || cells.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  res_out.close();
  trace_out.close();

  write_summary_csv(read_records(results), (dir / "summary.csv").string());
  std::sort(produced.begin(), produced.end(),
            [](const ExperimentRecord& a, const ExperimentRecord& b) { return a.key < b.key; });
  return produced;
}

}  // namespace fls
