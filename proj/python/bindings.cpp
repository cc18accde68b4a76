#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tcs/error.hpp"
#include "tcs/evaluation.hpp"
#include "tcs/extraction.hpp"
#include "tcs/label_space.hpp"
#include "tcs/srl.hpp"
#include "tcs/targets.hpp"
#include "tcs/tuple_io.hpp"

namespace py = pybind11;
using namespace tcs;

namespace {

DurationUnit require_unit(const std::string& name) {
  const auto u = parse_unit_name(name);
  if (!u) throw Error(ErrorKind::kInvalidArgument, "unknown unit '" + name + "'");
  return *u;
}

// Tuples cross the boundary as the same dicts the JSONL files hold.
py::list tuples_to_python(const std::vector<TemporalTuple>& tuples) {
  py::module_ json = py::module_::import("json");
  py::list out;
  for (const auto& t : tuples) out.append(json.attr("loads")(tuple_to_json(t).dump()));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings over the tcs_core C++ library.";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError,
                      (std::string(error_kind_name(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::list dims, units;
  for (Dimension d : kAllDimensions) dims.append(std::string(dimension_name(d)));
  for (DurationUnit u : kAllUnits) units.append(std::string(unit_name(u)));
  m.attr("DIMENSIONS") = py::tuple(dims);
  m.attr("UNITS") = py::tuple(units);

  m.def("labels", [](const std::string& dim) { return label_space(require_dimension(dim)).labels(); },
        py::arg("dimension"));
  m.def("logsec", [](const std::string& unit) { return logsec(require_unit(unit)); }, py::arg("unit"));
  m.def("nearest_unit", [](double seconds) { return std::string(unit_name(nearest_unit(seconds))); },
        py::arg("seconds"));
  m.def("circular_distance",
        [](const std::string& a, const std::string& b, const std::string& dim) {
          return circular_distance(a, b, label_space(require_dimension(dim)));
        },
        py::arg("a"), py::arg("b"), py::arg("dimension"));
  m.def("rank_distance",
        [](const std::string& pred, const std::string& gold, const std::string& dim) {
          return rank_distance(pred, gold, require_dimension(dim));
        },
        py::arg("pred"), py::arg("gold"), py::arg("dimension"));
  m.def("mean_distance",
        [](const std::vector<std::string>& pred, const std::vector<std::string>& gold,
           const std::string& dim) { return mean_distance(pred, gold, require_dimension(dim)); },
        py::arg("predictions"), py::arg("golds"), py::arg("dimension"));
  m.def("normalized_mean_distance",
        [](const std::vector<std::string>& pred, const std::vector<std::string>& gold,
           const std::string& dim) {
          return normalized_mean_distance(pred, gold, require_dimension(dim));
        },
        py::arg("predictions"), py::arg("golds"), py::arg("dimension"));
  m.def("build_soft_target",
        [](const std::string& dim, const std::string& gold, const std::string& mode) {
          return build_soft_target(require_dimension(dim), gold, parse_normalization_mode(mode)).probs;
        },
        py::arg("dimension"), py::arg("gold"), py::arg("norm_mode") = "normalize");
  m.def("instance_weight",
        [](const std::string& label, const std::map<std::string, std::uint64_t>& counts) {
          return instance_weight(label, counts);
        },
        py::arg("label"), py::arg("counts"));
  m.def("balance_dimensions",
        [](const std::map<std::string, std::uint64_t>& counts) {
          DimensionCounts dc;
          for (const auto& [k, v] : counts) dc[require_dimension(k)] = v;
          std::map<std::string, double> out;
          for (const auto& [d, p] : balance_dimensions(dc)) out[std::string(dimension_name(d))] = p;
          return out;
        },
        py::arg("counts"));
  m.def("extract_sentence",
        [](const py::object& record) {
          const std::string text = py::module_::import("json").attr("dumps")(record).cast<std::string>();
          return tuples_to_python(extract_sentence(sentence_from_json(nlohmann::json::parse(text))));
        },
        py::arg("record"), "Tuples of one SRL record (a dict in the JSONL schema).");
  m.def("extract_corpus",
        [](const std::string& jsonl, std::size_t workers) {
          std::istringstream in(jsonl);
          IngestStats stats;
          const auto sentences = read_corpus(in, &stats);
          py::dict info;
          info["records"] = stats.records;
          info["skipped"] = stats.skipped;
          return py::make_tuple(tuples_to_python(extract_corpus(sentences, workers)), info);
        },
        py::arg("jsonl"), py::arg("workers") = 1,
        "Extract from JSONL text; returns (tuples, {'records', 'skipped'}).");
}
