#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fls/bench.hpp"
#include "fls/oracles.hpp"
#include "fls/seeding.hpp"

using namespace fls;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::path(FLS_TEST_SCRATCH) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++n;
  return n;
}

MatrixConfig tiny_matrix(std::vector<std::string> algorithms, std::vector<std::uint64_t> seeds) {
  GeneratorSpec g;
  g.n = 8;
  g.k = 2;
  g.ring_candidates = false;
  MatrixConfig m;
  m.instances.push_back({"tiny", g, 3, std::nullopt});
  m.algorithms = std::move(algorithms);
  m.seeds = std::move(seeds);
  return m;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FLS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("uniform generator with one client") {
  GeneratorSpec g;
  g.n = 1;
  g.k = 1;
  auto inst = generate_instance(g, 1);
  CHECK(inst.clients().size() == 1);
  CHECK(inst.k() == 1);
}

TEST_CASE("generator is deterministic") {
  for (auto kind : {GeneratorKind::Uniform, GeneratorKind::Gaussian, GeneratorKind::GridClusters}) {
    GeneratorSpec g;
    g.kind = kind;
    g.n = 40;
    g.k = 4;
    g.opening_cost = 2.5;
    CHECK(format_instance(generate_instance(g, 17)) == format_instance(generate_instance(g, 17)));
    CHECK(GeneratorSpec::from_json(g.to_json()).to_json() == g.to_json());
    auto inst = generate_instance(g, 17);
    for (const auto& a : inst.clients()) {
      bool found = false;
      for (const auto& c : inst.candidates()) found = found || c.position == a;
      CHECK(found);
    }
  }
}

TEST_CASE("generator rejects bad specs") {
  GeneratorSpec g;
  g.n = 0;
  CHECK_THROWS_AS(generate_instance(g, 1), Error);
  CHECK_THROWS_AS(generator_kind_from_string("spiral"), Error);
  CHECK_THROWS_AS(profile_from_string("fast"), Error);
}

TEST_CASE("tight mixture is almost solved by seeding") {
  GeneratorSpec g;
  g.kind = GeneratorKind::Gaussian;
  g.n = 12;
  g.k = 3;
  g.components = 3;
  g.spread = 0.001;
  g.ring_candidates = false;
  auto inst = generate_instance(g, 8);
  const double opt = exact_opt(inst).total();
  const double seeded = dsquared_seed(inst, {1, 5}).total();
  CHECK(seeded <= 1.5 * opt + 1e-9);
}

TEST_CASE("driver config json round trip") {
  DriverConfig c;
  c.epsilon = 0.25;
  c.delta = 3;
  c.gamma = 0.01;
  c.retries = 5;
  c.seed = 77;
  c.profile = DpProfile::PaperFaithful;
  c.threads = 2;
  auto back = driver_config_from_json(driver_config_to_json(c));
  CHECK(driver_config_to_json(back) == driver_config_to_json(c));
  CHECK(back.retries == 5);
  CHECK(back.profile == DpProfile::PaperFaithful);
}

TEST_CASE("empty matrix writes nothing") {
  auto dir = scratch("empty");
  auto recs = run_matrix(MatrixConfig{}, dir.string());
  CHECK(recs.empty());
  CHECK(line_count(dir / "results.jsonl") == 0);
  CHECK(line_count(dir / "summary.csv") == 1);
}

TEST_CASE("matrix cardinality, resume and csv") {
  auto dir = scratch("matrix");
  auto cfg = tiny_matrix({"kmeanspp", "lloyd"}, {1, 2, 3});
  cfg.workers = 3;
  auto recs = run_matrix(cfg, dir.string());
  CHECK(recs.size() == 6);
  CHECK(line_count(dir / "results.jsonl") == 6);
  CHECK(line_count(dir / "summary.csv") == 7);
  for (const auto& r : recs) CHECK(r.status == "ok");

  auto again = run_matrix(cfg, dir.string());
  CHECK(again.empty());
  CHECK(line_count(dir / "results.jsonl") == 6);

  // records parse back losslessly
  auto back = read_records((dir / "results.jsonl").string());
  REQUIRE(back.size() == 6);
  for (const auto& r : back) CHECK(ExperimentRecord::from_json(r.to_json()).to_json() == r.to_json());

  // a torn line is skipped and its cell rerun
  {
    std::ofstream out(dir / "results.jsonl", std::ios::app);
    out << "{\"key\": \"tin";
  }
  cfg.seeds.push_back(4);
  auto more = run_matrix(cfg, dir.string());
  CHECK(more.size() == 2);
  CHECK(line_count(dir / "summary.csv") == 9);
}

TEST_CASE("oracle ratios are at least one") {
  auto dir = scratch("oracle");
  auto cfg = tiny_matrix({"fls", "kmeanspp", "swap1"}, {1, 2});
  cfg.oracle = true;
  auto recs = run_matrix(cfg, dir.string());
  REQUIRE(recs.size() == 6);
  for (const auto& r : recs) {
    REQUIRE(r.ratio.has_value());
    CHECK(*r.ratio >= 1.0 - 1e-12);
    if (r.algorithm == "fls") CHECK(!r.trace_ref.empty());
  }
  CHECK(line_count(dir / "traces.jsonl") == 2);
}

TEST_CASE("per cell failures are recorded") {
  auto dir = scratch("failing");
  MatrixConfig cfg;
  cfg.instances.push_back({"missing", std::nullopt, 1, std::string("/nonexistent/instance.txt")});
  cfg.algorithms = {"kmeanspp"};
  cfg.seeds = {1};
  auto recs = run_matrix(cfg, dir.string());
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].status == "error");
}

TEST_CASE("matrix config parsing") {
  auto j = nlohmann::json::parse(R"({
    "instances": [{"name": "u", "seed": 2, "generator": {"kind": "uniform", "n": 10, "k": 2}}],
    "algorithms": ["fls"], "seeds": [1, 2], "oracle": true, "workers": 2,
    "driver": {"delta": 2, "profile": "desk"}
  })");
  auto m = MatrixConfig::from_json(j);
  CHECK(m.instances.size() == 1);
  CHECK(m.seeds.size() == 2);
  CHECK(m.oracle);
  CHECK(m.workers == 2);
  j["algorithms"] = {"magic"};
  CHECK_THROWS_AS(MatrixConfig::from_json(j), Error);
}

TEST_CASE("cli exit codes") {
  auto dir = scratch("cli");
  const std::string inst = (dir / "inst.txt").string();
  CHECK(run_cli("gen -n 9 -k 2 --seed 4 --clients-as-candidates --out " + inst) == 0);
  CHECK(fs::exists(inst));
  CHECK(run_cli("run " + inst + " -a fls --oracle --out " + (dir / "run.json").string()) == 0);
  auto rec = nlohmann::json::parse(std::ifstream(dir / "run.json"));
  CHECK(rec["ratio"].get<double>() >= 1.0 - 1e-12);
  CHECK(run_cli("oracle " + inst) == 0);
  CHECK(run_cli("oracle " + inst + " --max-subsets 1") == 2);
  CHECK(run_cli("run /nonexistent/file.txt") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("gen --kind spiral") == 1);
  CHECK(run_cli("--help") == 0);

  const std::string cfg = (dir / "matrix.json").string();
  std::ofstream(cfg) << R"({"instances": [{"name": "g", "generator": {"n": 8, "k": 2}}],
                           "algorithms": ["kmeanspp", "swap1"], "seeds": [1, 2, 3]})";
  CHECK(run_cli("matrix " + cfg + " --workers 2 --out " + (dir / "m").string()) == 0);
  CHECK(line_count(dir / "m" / "results.jsonl") == 6);
}
