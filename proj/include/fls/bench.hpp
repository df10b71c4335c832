#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fls/driver.hpp"
#include "fls/instance.hpp"
#include "fls/oracles.hpp"

namespace fls {

enum class GeneratorKind { Uniform, Gaussian, GridClusters };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Uniform;
  int d = 2;
  int n = 20;
  int k = 3;
  double epsilon = 0.5;
  int p = 2;
  int components = 3;  // mixture components / grid clusters
  double spread = 0.05;
  bool ring_candidates = true;  // false: candidates are the client points only
  double opening_cost = 0.0;    // uniform candidate weight

  nlohmann::json to_json() const;
  static GeneratorSpec from_json(const nlohmann::json& j);
};

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& s);
std::string to_string(DpProfile profile);
DpProfile profile_from_string(const std::string& s);

// Deterministic in (spec, seed). Raw points in the unit box are snapped
// to the integer grid; candidates come from generate_candidates.
Instance generate_instance(const GeneratorSpec& spec, std::uint64_t seed);

nlohmann::json driver_config_to_json(const DriverConfig& c);
DriverConfig driver_config_from_json(const nlohmann::json& j);

struct ExperimentRecord {
  std::string key;
  nlohmann::json instance;  // descriptor: name and generator spec or path
  std::string algorithm;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | budget | error
  std::string message;
  double final_cost = 0.0;
  std::optional<double> oracle_cost;
  std::optional<double> ratio;
  int iterations = 0;
  double wall_ms = 0.0;
  std::string trace_ref;

  nlohmann::json to_json() const;
  static ExperimentRecord from_json(const nlohmann::json& j);
};

struct InstanceEntry {
  std::string name;
  std::optional<GeneratorSpec> generator;
  std::uint64_t seed = 1;
  std::optional<std::string> path;  // instance file instead of a generator

  nlohmann::json descriptor() const;
  Instance load() const;
};

// Algorithms: fls, kmeanspp, lloyd, swap1, swap2.
const std::vector<std::string>& known_algorithms();

struct MatrixConfig {
  std::vector<InstanceEntry> instances;
  std::vector<std::string> algorithms;
  std::vector<std::uint64_t> seeds;
  bool oracle = false;
  OracleBudget oracle_budget;
  DriverConfig driver;
  int workers = 1;

  static MatrixConfig from_json(const nlohmann::json& j);
};

struct CellOutcome {
  ExperimentRecord record;
  std::optional<DriverTrace> trace;
};

// One algorithm on one instance; the oracle value, if known, fills the ratio.
CellOutcome run_cell(const Instance& instance, const std::string& algorithm, std::uint64_t seed,
                     const DriverConfig& driver, std::optional<double> oracle_cost);

std::string cell_key(const std::string& instance, const std::string& algorithm,
                     std::uint64_t seed);

// Runs every missing (instance, algorithm, seed) cell. Records are appended
// to out_dir/results.jsonl, traces to out_dir/traces.jsonl, and
// out_dir/summary.csv is regenerated from the full record file. Returns the
// records produced by this call.
std::vector<ExperimentRecord> run_matrix(const MatrixConfig& config, const std::string& out_dir);

std::vector<ExperimentRecord> read_records(const std::string& jsonl_path);
void write_summary_csv(const std::vector<ExperimentRecord>& records, const std::string& path);

}  // namespace fls
