#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dcmn/cli.hpp"
#include "dcmn/crf.hpp"
#include "dcmn/mobility.hpp"
#include "dcmn/simulator.hpp"
#include "dcmn/training.hpp"

namespace py = pybind11;
using namespace dcmn;

namespace {

crf::TransitionMatrix transition_matrix(const Matrix& scores, const std::optional<Vector>& start) {
  crf::TransitionMatrix tm = crf::TransitionMatrix::zeros(static_cast<int>(scores.rows()));
  tm.scores = scores;
  if (start) tm.start = *start;
  return tm;
}

mobility::RoomSequence sequence(const std::vector<int>& rooms, std::optional<std::vector<double>> timestamps) {
  mobility::RoomSequence s;
  s.rooms = rooms;
  if (!timestamps) {
    timestamps.emplace();
    for (std::size_t i = 0; i < rooms.size(); ++i) timestamps->push_back(static_cast<double>(i));
  }
  s.timestamps = std::move(*timestamps);
  if (s.timestamps.size() != s.rooms.size()) throw DimensionError("timestamps and rooms differ in length");
  return s;
}

}  // namespace

PYBIND11_MODULE(_dcmn, m) {
  m.doc() = "Room-level localisation from wearable RSSI and accelerometer data";
  m.attr("__version__") = DCMN_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
      "Run one dcmn subcommand and return its exit code.");

  m.def(
      "simulate_csv",
      [](std::optional<std::string> config_json, std::optional<std::uint64_t> seed) {
        auto cfg = config_json ? sim::parse_sim_config(nlohmann::json::parse(*config_json)) : sim::default_sim_config();
        if (seed) cfg.seed = *seed;
        std::ostringstream out;
        data::write_recordings(out, sim::make_streams(cfg), cfg.floorplan.rooms);
        return out.str();
      },
      py::arg("config_json") = py::none(), py::arg("seed") = py::none(),
      "Simulated recordings as CSV text.");

  m.def(
      "crf_log_partition",
      [](const Matrix& emissions, const Matrix& transitions, std::optional<Vector> start) {
        return crf::log_partition(emissions, transition_matrix(transitions, start));
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start") = py::none());
  m.def(
      "crf_nll",
      [](const Matrix& emissions, const std::vector<int>& labels, const Matrix& transitions,
         std::optional<Vector> start) {
        return crf::nll(emissions, labels, transition_matrix(transitions, start));
      },
      py::arg("emissions"), py::arg("labels"), py::arg("transitions"), py::arg("start") = py::none());
  m.def(
      "crf_viterbi",
      [](const Matrix& emissions, const Matrix& transitions, std::optional<Vector> start) {
        const auto d = crf::viterbi(emissions, transition_matrix(transitions, start));
        return py::make_tuple(d.labels, d.score);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start") = py::none(),
      "(labels, score) of the best path.");

  m.def("huber", &training::huber, py::arg("prediction"), py::arg("target"), py::arg("tau") = 1.0);

  m.def(
      "daily_transitions",
      [](const std::vector<int>& rooms, std::optional<std::vector<double>> timestamps) {
        return mobility::count_daily_transitions(sequence(rooms, std::move(timestamps)));
      },
      py::arg("rooms"), py::arg("timestamps") = py::none());
  m.def(
      "pair_durations",
      [](const std::vector<int>& rooms, int a, int b, int hub, std::optional<std::vector<double>> timestamps) {
        return mobility::pair_transition_durations(sequence(rooms, std::move(timestamps)), a, b, hub);
      },
      py::arg("rooms"), py::arg("a"), py::arg("b"), py::arg("hub"), py::arg("timestamps") = py::none(),
      "Seconds spent in the hub between a and b, plus one, for each a-hub-b crossing.");
}
