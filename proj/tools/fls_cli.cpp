#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "fls/acceptance.hpp"
#include "fls/bench.hpp"
#include "fls/driver.hpp"
#include "fls/oracles.hpp"

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::optional<double> epsilon;
  int delta = 2;
  std::optional<double> gamma;
  std::string profile = "desk";
  int workers = 1;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed");
  app->add_option("--epsilon", c.epsilon, "Accuracy parameter in (0, 0.5]");
  app->add_option("--delta", c.delta, "Swap size bound");
  app->add_option("--gamma", c.gamma, "Moat width override");
  app->add_option("--profile", c.profile, "DP resolution profile")
      ->check(CLI::IsMember({"desk", "paper-faithful"}));
  app->add_option("--workers", c.workers, "Concurrent workers")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "Output path (stdout when omitted)");
}

fls::DriverConfig driver_config(const Common& c) {
  fls::DriverConfig d;
  d.seed = c.seed;
  d.epsilon = c.epsilon;
  d.delta = c.delta;
  d.gamma = c.gamma;
  d.profile = fls::profile_from_string(c.profile);
  d.threads = c.workers;
  return d;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw fls::Error("cannot write " + c.out);
  f << text;
}

nlohmann::json solution_json(const fls::Solution& s) {
  return {{"open", s.open},
          {"service_cost", s.service_cost},
          {"opening_cost", s.opening_cost},
          {"total", s.total()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local search for low-dimensional k-means"};
  app.require_subcommand(1);

  Common gen_c, run_c, matrix_c, verify_c, oracle_c;

  auto* gen = app.add_subcommand("gen", "Generate an instance file");
  add_common(gen, gen_c);
  fls::GeneratorSpec spec;
  std::string kind = "uniform";
  gen->add_option("--kind", kind)->check(CLI::IsMember({"uniform", "gaussian", "grid_clusters"}));
  gen->add_option("-d,--dim", spec.d);
  gen->add_option("-n,--clients", spec.n);
  gen->add_option("-k", spec.k);
  gen->add_option("-p,--exponent", spec.p);
  gen->add_option("--components", spec.components);
  gen->add_option("--spread", spec.spread);
  gen->add_option("--opening-cost", spec.opening_cost);
  bool clients_only = false;
  gen->add_flag("--clients-as-candidates", clients_only, "Use client points as the only candidates");

  auto* run = app.add_subcommand("run", "Run one algorithm on an instance file");
  add_common(run, run_c);
  std::string run_path, algorithm = "fls";
  bool with_oracle = false;
  run->add_option("instance", run_path)->required()->check(CLI::ExistingFile);
  run->add_option("-a,--algorithm", algorithm)->check(CLI::IsMember(fls::known_algorithms()));
  run->add_flag("--oracle", with_oracle, "Also compute the exact optimum");
  std::optional<int> retries;
  run->add_option("--retries", retries, "Dissections per iteration");

  auto* matrix = app.add_subcommand("matrix", "Run an experiment grid described by a JSON file");
  add_common(matrix, matrix_c);
  std::string matrix_path;
  matrix->add_option("config", matrix_path)->required()->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  add_common(verify, verify_c);
  std::vector<int> only;
  verify->add_option("--criterion", only, "Run only these criteria");

  auto* oracle = app.add_subcommand("oracle", "Exact optimum by enumeration");
  add_common(oracle, oracle_c);
  std::string oracle_path;
  fls::OracleBudget budget;
  oracle->add_option("instance", oracle_path)->required()->check(CLI::ExistingFile);
  oracle->add_option("--max-subsets", budget.max_subsets);
  oracle->add_option("--time-limit", budget.time_limit_s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version exit 0, every usage error maps to 1
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      spec.kind = fls::generator_kind_from_string(kind);
      if (gen_c.epsilon) spec.epsilon = *gen_c.epsilon;
      spec.ring_candidates = !clients_only;
      emit(gen_c, fls::format_instance(fls::generate_instance(spec, gen_c.seed)));
    } else if (*run) {
      const fls::Instance inst = fls::load_instance(run_path);
      std::optional<double> opt;
      if (with_oracle) opt = fls::exact_opt(inst).total();
      auto dc = driver_config(run_c);
      dc.retries = retries;
      auto cell = fls::run_cell(inst, algorithm, run_c.seed, dc, opt);
      cell.record.key = fls::cell_key(run_path, algorithm, run_c.seed);
      cell.record.instance = {{"name", run_path}, {"path", run_path}};
      nlohmann::json j = cell.record.to_json();
      if (cell.trace) j["trace"] = nlohmann::json::parse(cell.trace->to_json());
      emit(run_c, j.dump() + "\n");
    } else if (*matrix) {
      std::ifstream f(matrix_path);
      auto cfg = fls::MatrixConfig::from_json(nlohmann::json::parse(f));
      if (matrix->count("--workers")) cfg.workers = matrix_c.workers;
      if (matrix->count("--profile")) cfg.driver.profile = fls::profile_from_string(matrix_c.profile);
      if (matrix_c.epsilon) cfg.driver.epsilon = matrix_c.epsilon;
      if (matrix_c.gamma) cfg.driver.gamma = matrix_c.gamma;
      if (matrix->count("--delta")) cfg.driver.delta = matrix_c.delta;
      const std::string dir = matrix_c.out.empty() ? "results" : matrix_c.out;
      const auto recs = fls::run_matrix(cfg, dir);
      std::cout << recs.size() << " new records in " << dir << "\n";
      for (const auto& r : recs)
        if (r.status == "budget") return 2;
    } else if (*verify) {
      const auto results = fls::acceptance::run_all(only, std::cout);
      for (const auto& r : results)
        if (!r.passed) return 1;
    } else if (*oracle) {
      const fls::Instance inst = fls::load_instance(oracle_path);
      const fls::Solution s = fls::exact_opt(inst, budget);
      emit(oracle_c, solution_json(s).dump() + "\n");
    }
  } catch (const fls::BudgetExceeded& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
