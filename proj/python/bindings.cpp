#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wiball/channel.hpp"
#include "wiball/error.hpp"
#include "wiball/heading.hpp"
#include "wiball/motion.hpp"
#include "wiball/tracker.hpp"
#include "wiball/trrs.hpp"

namespace py = pybind11;
using namespace wiball;

namespace {

Vec2 to_vec2(const std::pair<double, double>& p) { return {p.first, p.second}; }
std::pair<double, double> from_vec2(Vec2 v) { return {v.x, v.y}; }

}  // namespace

PYBIND11_MODULE(_wiball, m) {
  m.doc() = "Core routines of the wiball tracking toolkit";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);

  m.attr("SPEED_OF_LIGHT") = kSpeedOfLight;

  py::class_<Scene>(m, "Scene")
      .def_property_readonly("scatterers",
                             [](const Scene& s) {
                               std::vector<std::pair<double, double>> out;
                               for (auto p : s.scatterers) out.push_back(from_vec2(p));
                               return out;
                             })
      .def_readonly("reflection_coeffs", &Scene::reflection_coeffs)
      .def_property_readonly("tx_pos", [](const Scene& s) { return from_vec2(s.tx_pos); })
      .def_property_readonly("rx_focal_pos", [](const Scene& s) { return from_vec2(s.rx_focal_pos); })
      .def_readonly("carrier_f0", &Scene::carrier_f0)
      .def_readonly("bandwidth", &Scene::bandwidth)
      .def_readonly("tap_count", &Scene::tap_count)
      .def_readwrite("direct_path", &Scene::direct_path)
      .def_property_readonly("wavelength", &Scene::wavelength);

  py::class_<Cir>(m, "Cir")
      .def(py::init([](std::vector<Complex> taps, double timestamp) {
             Cir c;
             c.taps = std::move(taps);
             c.timestamp = timestamp;
             return c;
           }),
           py::arg("taps"), py::arg("timestamp") = 0.0)
      .def_readwrite("taps", &Cir::taps)
      .def_readwrite("timestamp", &Cir::timestamp)
      .def_property_readonly("pose",
                             [](const Cir& c) -> std::optional<std::pair<double, double>> {
                               if (!c.pose) return std::nullopt;
                               return from_vec2(*c.pose);
                             })
      .def("energy", &Cir::energy);

  m.def(
      "generate_scene",
      [](std::uint64_t seed, std::size_t n, double side, double sep, double f0, double bw, bool direct_path,
         double roaming_radius) {
        SceneParams p;
        p.seed = seed;
        p.n_scatterers = n;
        p.region_side = side;
        p.tx_rx_separation = sep;
        p.carrier_f0 = f0;
        p.bandwidth = bw;
        p.direct_path = direct_path;
        p.roaming_radius = roaming_radius;
        return generate_scene(p);
      },
      py::arg("seed") = 1, py::arg("n_scatterers") = 200, py::arg("region_side") = 7.5,
      py::arg("tx_rx_separation") = 30.0, py::arg("carrier_f0") = 5.8e9, py::arg("bandwidth") = 500e6,
      py::arg("direct_path") = true, py::arg("roaming_radius") = 0.0);

  m.def(
      "synthesize_cir",
      [](const Scene& s, std::pair<double, double> rx, double t) { return synthesize_cir(s, to_vec2(rx), t); },
      py::arg("scene"), py::arg("rx_pos"), py::arg("timestamp") = 0.0);

  m.def(
      "synthesize_trajectory",
      [](const Scene& s, const std::vector<std::tuple<double, double, double>>& waypoints, double period,
         std::optional<double> snr_db, std::uint64_t noise_seed) {
        std::vector<Waypoint> w;
        for (const auto& [x, y, t] : waypoints) w.push_back({{x, y}, t});
        std::optional<NoiseModel> noise;
        if (snr_db) noise = NoiseModel{*snr_db, noise_seed};
        return synthesize_trajectory(s, w, period, noise);
      },
      py::arg("scene"), py::arg("waypoints"), py::arg("sample_period"), py::arg("snr_db") = py::none(),
      py::arg("noise_seed") = 0);

  m.def("trrs", py::overload_cast<const Cir&, const Cir&>(&trrs), py::arg("a"), py::arg("b"));
  m.def("bessel_j0", &bessel_j0, py::arg("x"));
  m.def("bessel_reference", &bessel_reference, py::arg("distance"), py::arg("wavelength"));

  m.def(
      "estimate_distance",
      [](const std::vector<Cir>& stream, double wavelength, double max_lag) {
        DistancePipelineConfig cfg;
        cfg.max_lag = max_lag;
        const auto r = estimate_distance(stream, wavelength, cfg);
        std::vector<std::tuple<double, double, double>> speeds;
        for (const auto& s : r.speeds) speeds.emplace_back(s.timestamp, s.speed, s.confidence);
        return py::make_tuple(r.track.cumulative_distance, speeds);
      },
      py::arg("stream"), py::arg("wavelength"), py::arg("max_lag") = 0.16,
      "Returns (distance, [(timestamp, speed, confidence), ...]).");

  m.def(
      "heading_delta",
      [](std::tuple<double, double, double> w, std::tuple<double, double, double> g, double dt) {
        const auto [wx, wy, wz] = w;
        const auto [gx, gy, gz] = g;
        return heading_delta({0.0, {wx, wy, wz}, {}}, {gx, gy, gz}, dt).delta_theta;
      },
      py::arg("angular_velocity"), py::arg("gravity"), py::arg("dt"));

  m.def(
      "dead_reckon",
      [](std::pair<double, double> start, double heading, const std::vector<std::pair<double, double>>& steps) {
        TrackerConfig cfg;
        cfg.initial_position = to_vec2(start);
        cfg.initial_heading = heading;
        cfg.scale_grid = {1.0};
        cfg.bias_grid = {0.0};
        TrackState s = initial_state(cfg);
        double t = 0;
        for (const auto& [d, dth] : steps) s = dead_reckon_step(std::move(s), t += 1.0, d, dth);
        return from_vec2(s.dominant().tip().pos);
      },
      py::arg("start"), py::arg("heading"), py::arg("steps"),
      "Folds (distance, heading change) steps from a start pose and returns the end point.");
}
