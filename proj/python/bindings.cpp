#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <set>

#include <json.hpp>

#include "fls/bench.hpp"
#include "fls/dissection.hpp"
#include "fls/driver.hpp"
#include "fls/find_improvement.hpp"
#include "fls/instance.hpp"
#include "fls/oracles.hpp"
#include "fls/seeding.hpp"

namespace py = pybind11;

namespace {

using Coords = std::vector<std::vector<fls::Coord>>;

std::vector<fls::Point> to_points(const Coords& raw) {
  std::vector<fls::Point> out;
  out.reserve(raw.size());
  for (const auto& c : raw) out.push_back(fls::Point{c});
  return out;
}

Coords from_points(const std::vector<fls::Point>& pts) {
  Coords out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(p.coords);
  return out;
}

fls::Instance make_instance(const Coords& clients, const Coords& candidates, int k,
                            double epsilon, std::vector<double> weights, int p,
                            std::optional<fls::Coord> grid_side) {
  if (!weights.empty() && weights.size() != candidates.size())
    throw fls::Error("weights must match the candidate count");
  std::vector<fls::Candidate> cands;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    cands.push_back({fls::Point{candidates[i]}, weights.empty() ? 0.0 : weights[i]});
  return fls::Instance(to_points(clients), std::move(cands), k, epsilon, p, grid_side);
}

fls::DriverConfig driver_config(const py::dict& kw) {
  static const std::set<std::string> known = {
      "epsilon", "delta", "gamma", "gamma_exponent", "retries", "retries_factor", "seed",
      "profile", "seed_trials", "max_iterations", "leaf_rule", "round_opening_costs", "threads"};
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : kw) {
    const auto name = py::cast<std::string>(key);
    if (!known.count(name)) throw fls::Error("unknown driver option: " + name);
    if (py::isinstance<py::bool_>(value)) j[name] = py::cast<bool>(value);
    else if (py::isinstance<py::int_>(value)) j[name] = py::cast<long long>(value);
    else if (py::isinstance<py::float_>(value)) j[name] = py::cast<double>(value);
    else j[name] = py::cast<std::string>(value);
  }
  return fls::driver_config_from_json(j);
}

py::object json_to_py(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fast local search for low-dimensional weighted k-means";

  // translators run newest first, so the subclass is registered last
  py::register_exception<fls::Error>(m, "Error", PyExc_ValueError);
  py::register_exception<fls::BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);

  py::class_<fls::Instance>(m, "Instance")
      .def(py::init(&make_instance), py::arg("clients"), py::arg("candidates"), py::arg("k"),
           py::arg("epsilon") = 0.5, py::arg("weights") = std::vector<double>{},
           py::arg("p") = 2, py::arg("grid_side") = std::nullopt)
      .def_property_readonly("clients", [](const fls::Instance& i) { return from_points(i.clients()); })
      .def_property_readonly("candidates", [](const fls::Instance& i) {
        Coords out;
        for (const auto& c : i.candidates()) out.push_back(c.position.coords);
        return out;
      })
      .def_property_readonly("weights", [](const fls::Instance& i) {
        std::vector<double> w;
        for (const auto& c : i.candidates()) w.push_back(c.opening_cost);
        return w;
      })
      .def_property_readonly("k", &fls::Instance::k)
      .def_property_readonly("epsilon", &fls::Instance::epsilon)
      .def_property_readonly("p", &fls::Instance::exponent)
      .def_property_readonly("grid_side", &fls::Instance::grid_side)
      .def_property_readonly("dimension", &fls::Instance::dimension)
      .def_property_readonly("size_n", &fls::Instance::size_n)
      .def("with_k", &fls::Instance::with_k)
      .def("to_text", [](const fls::Instance& i) { return fls::format_instance(i); })
      .def_static("from_text", &fls::parse_instance)
      .def_static("load", &fls::load_instance)
      .def("save", [](const fls::Instance& i, const std::string& path) { fls::save_instance(path, i); });

  py::class_<fls::Solution>(m, "Solution")
      .def_readonly("open", &fls::Solution::open)
      .def_readonly("assignment", &fls::Solution::assignment)
      .def_readonly("service_cost", &fls::Solution::service_cost)
      .def_readonly("opening_cost", &fls::Solution::opening_cost)
      .def_property_readonly("total", &fls::Solution::total)
      .def("__repr__", [](const fls::Solution& s) {
        return "<Solution open=" + py::repr(py::cast(s.open)).cast<std::string>() +
               " total=" + std::to_string(s.total()) + ">";
      });

  m.def("eval_cost", [](const fls::Instance& i, const std::vector<int>& open) {
    return fls::eval_cost(i, open);
  }, py::arg("instance"), py::arg("open"));
  m.def("round_weights", &fls::round_weights, py::arg("instance"), py::arg("reference_cost"));
  m.def("round_weight", &fls::round_weight, py::arg("w"), py::arg("base"), py::arg("epsilon"));
  m.def("snap_to_grid", [](const std::vector<std::vector<double>>& raw, double eps) {
    auto s = fls::snap_to_grid(raw, eps);
    return py::make_tuple(from_points(s.points), s.grid_side, s.scale.factor, s.scale.origin);
  }, py::arg("points"), py::arg("epsilon"), "Returns (points, grid_side, factor, origin).");
  m.def("generate_candidates", [](const Coords& clients, double eps, fls::Coord side) {
    return from_points(fls::generate_candidates(to_points(clients), eps, side));
  }, py::arg("clients"), py::arg("epsilon"), py::arg("grid_side"));

  m.def("dsquared_seed", [](const fls::Instance& i, std::uint64_t seed, int trials) {
    return fls::dsquared_seed(i, {seed, trials});
  }, py::arg("instance"), py::arg("seed") = 1, py::arg("trials") = 1);
  m.def("lloyd_refine", [](const fls::Instance& i, const std::vector<int>& open, int iters) {
    auto r = fls::lloyd_refine(i, fls::eval_cost(i, open), iters);
    return py::make_tuple(r.solution, r.trajectory);
  }, py::arg("instance"), py::arg("open"), py::arg("max_iters") = 100);
  m.def("exhaustive_swap_search", [](const fls::Instance& i, const std::vector<int>& open,
                                     int swap, double stop) {
    auto r = fls::exhaustive_swap_search(i, fls::eval_cost(i, open), swap, stop);
    return py::make_tuple(r.solution, r.trajectory);
  }, py::arg("instance"), py::arg("open"), py::arg("swap_size") = 1, py::arg("stop_ratio") = 0.0);

  py::class_<fls::Dissection>(m, "Dissection")
      .def_property_readonly("shift", &fls::Dissection::shift)
      .def_property_readonly("max_level", &fls::Dissection::max_level)
      .def_property_readonly("depth", &fls::Dissection::depth)
      .def_property_readonly("region_count", [](const fls::Dissection& d) { return d.regions().size(); })
      .def("dump", [](const fls::Dissection& d) { return fls::dump_dissection(d); });
  m.def("build_dissection", [](const fls::Instance& i, std::uint64_t seed) {
    return fls::build_dissection(i, seed);
  }, py::arg("instance"), py::arg("seed"));
  m.def("moat_candidates", [](const fls::Dissection& d, const fls::Instance& i, double gamma) {
    return fls::classify_candidates(d, i, gamma).level;
  }, py::arg("dissection"), py::arg("instance"), py::arg("gamma"),
     "Lowest witnessing level per candidate, -1 when not moat.");
  m.def("moat_centers_of", [](const fls::Dissection& d, const fls::Instance& i,
                              const std::vector<int>& open, double gamma) {
    return fls::moat_centers_of(d, i, fls::eval_cost(i, open), gamma);
  }, py::arg("dissection"), py::arg("instance"), py::arg("open"), py::arg("gamma"));
  m.def("default_gamma", &fls::default_gamma, py::arg("epsilon"), py::arg("log_n"),
        py::arg("exponent") = 13, py::arg("gamma_max") = 0.05);

  m.def("find_improvement", [](const fls::Instance& i, const std::vector<int>& open,
                               const fls::Dissection& d, double gamma, int delta,
                               const std::string& profile) {
    auto moat = fls::classify_candidates(d, i, gamma);
    auto cfg = fls::DpConfig::make(fls::profile_from_string(profile), i.epsilon(), i.log_n(), delta);
    auto r = fls::find_improvement(i, fls::eval_cost(i, open), d, moat, cfg);
    py::dict out;
    out["solution"] = r.solution;
    out["improvement"] = r.improvement;
    out["removed"] = r.removed;
    out["added"] = r.added;
    return out;
  }, py::arg("instance"), py::arg("open"), py::arg("dissection"), py::arg("gamma"),
     py::arg("delta") = 2, py::arg("profile") = "desk");

  m.def("run_local_search", [](const fls::Instance& i, const py::kwargs& kw) {
    fls::DriverResult r;
    {
      const auto cfg = driver_config(kw);
      py::gil_scoped_release release;
      r = fls::run_local_search(i, cfg);
    }
    return py::make_tuple(r.solution, json_to_py(r.trace.to_json()));
  }, py::arg("instance"), "Keyword arguments follow the driver config JSON keys.");
  m.def("verify_local_optimality", [](const fls::Instance& i, const std::vector<int>& open,
                                      int swap, std::uint64_t budget) {
    return fls::verify_local_optimality(i, fls::eval_cost(i, open), swap, budget);
  }, py::arg("instance"), py::arg("open"), py::arg("swap_size") = 1,
     py::arg("move_budget") = 50'000'000);

  m.def("exact_opt", [](const fls::Instance& i, std::uint64_t max_subsets, double limit) {
    return fls::exact_opt(i, {max_subsets, limit});
  }, py::arg("instance"), py::arg("max_subsets") = 20'000'000, py::arg("time_limit_s") = 60.0);
  m.def("exact_opt_delta", [](const fls::Instance& i, const std::vector<int>& open, int delta,
                              const std::vector<int>& forbidden) {
    auto r = fls::exact_opt_delta(i, open, delta, forbidden);
    return py::make_tuple(r.solution, r.improvement);
  }, py::arg("instance"), py::arg("open"), py::arg("delta"), py::arg("forbidden") = std::vector<int>{});

  m.def("generate_instance", [](const std::string& spec_json, std::uint64_t seed) {
    return fls::generate_instance(fls::GeneratorSpec::from_json(nlohmann::json::parse(spec_json)), seed);
  }, py::arg("spec_json"), py::arg("seed"));
}
