#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "fls/dissection.hpp"
#include "fls/instance.hpp"

namespace fls {

enum class DpProfile { PaperFaithful, Desk };

// Resolution knobs of the improvement DP.
//
// Outside a region R, each axis of the vector c_R -> p is rounded to the
// signed ladder {0, +-f, +-f*b, +-f*b^2, ...} with b = ladder_base and
// f = eps^ladder_floor_exponent * side(R) / log n. Inside R, points snap to
// the centre of their cell in a rho_grid^d grid over R.
struct DpConfig {
  int delta = 2;
  std::int64_t rho_grid = 16;  // must be even so cells nest across levels
  double ladder_base = 1.125;
  double ladder_floor_exponent = 4.0;
  double weight_ladder_base = 1.5;
  DpProfile profile = DpProfile::Desk;
  double epsilon = 0.5;
  double log_n = 1.0;
  bool record_links = false;  // keep (parent, children) entry pairs for inspection

  double ladder_floor(double side) const;
  // Minimum distance from R for which outside rounding is defined.
  double outside_margin(double side) const;

  static DpConfig desk(double epsilon, double log_n, int delta);
  static DpConfig paper_faithful(double epsilon, double log_n, int delta);
  static DpConfig make(DpProfile profile, double epsilon, double log_n, int delta);
};

struct RoundedCoord {
  int region = 0;
  bool inside = false;
  bool far = false;  // outside slot irrelevant to every client of the region
  std::vector<std::int64_t> index;  // grid cell (inside) or signed ladder rungs (outside)

  bool operator==(const RoundedCoord&) const = default;
};

// Signed ladder index of x and its value.
std::int64_t ladder_index(double x, double floor, double base);
double ladder_value(std::int64_t index, double floor, double base);

RoundedCoord round_outside(const Dissection& dissection, int region, const Point& point,
                           const DpConfig& config);
RoundedCoord round_inside(const Dissection& dissection, int region, const Point& point,
                          std::int64_t rho_grid);

// Rounding of an arbitrary shifted-space position (no applicability checks).
RoundedCoord round_position(const Dissection& dissection, int region,
                            std::span<const double> u, const DpConfig& config, bool inside);

// Shifted-space point represented by a rounded coordinate.
std::vector<double> rounded_position(const Dissection& dissection, const RoundedCoord& rc,
                                     const DpConfig& config);

struct SketchSlot {
  RoundedCoord coord;
  int weight_class = 0;
  bool added = false;  // direction bit: false = removed from L, true = added
  int resolved = -1;   // candidate index once anchored

  bool operator==(const SketchSlot&) const = default;
};

struct SwapSketch {
  int region = 0;
  std::vector<SketchSlot> slots;
};

struct DpEntry {
  SwapSketch sketch;
  double service_cost = 0.0;
};

// Children must be the 2^d children of the parent region in child order,
// with slots aligned to the parent's slot order.
bool compatible(const Dissection& dissection, const DpConfig& config, const DpEntry& parent,
                std::span<const DpEntry> children);

struct DpStats {
  std::size_t removal_sets = 0;
  std::size_t root_entries = 0;
  std::size_t table_entries = 0;
  std::size_t max_entries_per_region = 0;
  std::size_t exact_evaluations = 0;
};

struct ImprovementResult {
  Solution solution;
  double improvement = 0.0;
  std::vector<int> removed;
  std::vector<int> added;
  DpStats stats;
};

// Dynamic program over the dissection tree finding a near-best swap of at
// most delta centers that touches no moat candidate.
class ImprovementDp {
 public:
  ImprovementDp(const Instance& instance, const Solution& current,
                const Dissection& dissection, const MoatFlags& candidate_moat,
                const DpConfig& config);
  ~ImprovementDp();
  ImprovementDp(const ImprovementDp&) = delete;
  ImprovementDp& operator=(const ImprovementDp&) = delete;

  ImprovementResult run();
  // Best swap that removes exactly `removed`; its tables stay available.
  ImprovementResult run_removal(std::span<const int> removed);

  // Table for a fixed removal set; the hooks below refer to it.
  void select_removal(std::span<const int> removed);

  // DP cost of the entry of `region` induced by adding `added` on top of
  // the selected removal, and the exact service cost of those clients.
  double induced_cost(int region, std::span<const int> added);
  double exact_region_cost(int region, std::span<const int> added) const;

  std::vector<DpEntry> entries(int region) const;
  std::size_t entry_count(int region) const;
  const std::vector<std::pair<DpEntry, std::vector<DpEntry>>>& links() const;

  int weight_class(int candidate) const;
  std::size_t weight_class_count() const;
  bool removable(int candidate) const;
  bool addable(int candidate) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// `candidate_moat` classifies every candidate (classify_candidates).
ImprovementResult find_improvement(const Instance& instance, const Solution& current,
                                   const Dissection& dissection,
                                   const MoatFlags& candidate_moat, const DpConfig& config);

}  // namespace fls
