#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mgprot/io.hpp"
#include "mgprot/netsim.hpp"
#include "mgprot/relay.hpp"
#include "mgprot/scenario.hpp"
#include "mgprot/superimposed.hpp"

namespace py = pybind11;
using mgp::Complex;
using mgp::Phasor;

namespace {

using Triple = std::tuple<Complex, Complex, Complex>;

Triple triple(const mgp::SequenceSet& s) { return {s.zero.value(), s.positive.value(), s.negative.value()}; }
Triple triple(const mgp::ThreePhaseSet& s) { return {s.a.value(), s.b.value(), s.c.value()}; }

// Reports cross the boundary as parsed JSON so Python sees the same document the CLI writes.
py::object as_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

mgp::RunOptions options(std::optional<std::filesystem::path> out, std::optional<double> rate, std::uint64_t seed) {
    mgp::RunOptions o;
    o.out_dir = std::move(out);
    o.rate = rate;
    o.seed = seed;
    return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    py::register_exception<mgp::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<mgp::UndefinedRatio>(m, "UndefinedRatio", PyExc_ArithmeticError);
    py::register_exception<mgp::NetworkError>(m, "NetworkError", PyExc_RuntimeError);

    m.def("to_sequence", [](Complex a, Complex b, Complex c) { return triple(mgp::to_sequence({a, b, c})); },
          py::arg("a"), py::arg("b"), py::arg("c"), "Phase phasors to (zero, positive, negative).");
    m.def("from_sequence", [](Complex z, Complex p, Complex n) { return triple(mgp::from_sequence({z, p, n})); },
          py::arg("zero"), py::arg("positive"), py::arg("negative"));

    m.def("estimate_phasor",
          [](const std::vector<double>& window, std::size_t samples_per_cycle, double f_nominal) {
              mgp::EstimatorConfig c;
              c.samples_per_cycle = samples_per_cycle;
              c.f_nominal = f_nominal;
              c.validate();
              return mgp::estimate_phasor(window, c).value();
          },
          py::arg("window"), py::arg("samples_per_cycle") = 32, py::arg("f_nominal") = 60.0,
          "RMS phasor of one full-cycle window.");
    m.def("synthesize", [](Complex p, double rate, std::size_t cycles) { return mgp::synthesize_waveform(p, rate, cycles).samples; },
          py::arg("phasor"), py::arg("rate"), py::arg("cycles"));

    m.def("delta_y2",
          [](Complex v2f, Complex v2pre, Complex i2f, Complex i2pre) -> std::optional<Complex> {
              const auto y = mgp::delta_y2(v2f, v2pre, i2f, i2pre);
              if (!y.valid) return std::nullopt;
              return y.value.value();
          },
          py::arg("v2f"), py::arg("v2pre"), py::arg("i2f"), py::arg("i2pre"),
          "Superimposed negative-sequence admittance, None when the voltage change is too small.");
    m.def("impact_factor", [](Complex d, Complex pre) { return mgp::impact_factor(d, pre); }, py::arg("delta_i1f"),
          py::arg("i1pre"));
    m.def("adaptive_fault_current",
          [](Complex i1, Complex i2, Complex i0, double k) { return mgp::adaptive_fault_current(i1, i2, i0, k); },
          py::arg("i1f"), py::arg("i2f"), py::arg("i0f"), py::arg("k"));

    m.def("start_check",
          [](Complex i1, Complex i2, double ratio) {
              mgp::RelaySettings s;
              s.start_ratio = ratio;
              return mgp::start_check(i1, i2, s);
          },
          py::arg("i1"), py::arg("i2"), py::arg("ratio") = 0.1);
    m.def("classify",
          [](Complex y2, double y_set, double phi) {
              mgp::RelaySettings s;
              s.y_set = y_set;
              s.phi_deg = phi;
              mgp::AdmittanceMeasurement meas;
              meas.value = y2;
              meas.valid = true;
              return std::string(mgp::to_string(mgp::classify_direction(meas, s)));
          },
          py::arg("y2"), py::arg("y_set") = 10.0, py::arg("phi") = 20.0);

    m.def("thevenin",
          [](const std::filesystem::path& network) {
              const mgp::SequenceNetwork net(mgp::load_network(network));
              py::dict out;
              for (const auto& bus : net.model().buses) {
                  const auto k = net.model().bus_index(bus);
                  py::object z0 = py::none();
                  if (net.has_ground_path(k)) z0 = py::cast(net.thevenin_at(bus, mgp::Sequence::Zero));
                  out[py::str(bus)] = py::make_tuple(z0, net.thevenin_at(bus, mgp::Sequence::Positive),
                                                     net.thevenin_at(bus, mgp::Sequence::Negative));
              }
              return out;
          },
          py::arg("network"), "Per-bus (Z0, Z1, Z2) Thevenin impedances; Z0 is None for floating buses.");

    m.def("solve_fault",
          [](const std::filesystem::path& network, const std::string& bus, const std::string& kind,
             const std::string& phases, double rf) {
              const mgp::SequenceNetwork net(mgp::load_network(network));
              mgp::FaultSpec f;
              f.bus = bus;
              const auto k = mgp::parse_fault_kind(kind);
              if (!k) throw std::invalid_argument("unknown fault kind '" + kind + "'");
              f.kind = *k;
              f.phases = phases;
              f.rf = rf;
              const auto sol = mgp::apply_fault(net, f);
              py::dict out, pre, post;
              for (std::size_t b = 0; b < net.bus_count(); ++b) {
                  pre[py::str(net.model().buses[b])] = triple(sol.prefault.bus_v[b]);
                  post[py::str(net.model().buses[b])] = triple(sol.faulted.bus_v[b]);
              }
              out["prefault"] = pre;
              out["faulted"] = post;
              out["fault_current"] = triple(sol.fault_current);
              out["iterations"] = sol.faulted.iterations;
              out["warnings"] = sol.warnings;
              return out;
          },
          py::arg("network"), py::arg("bus"), py::arg("kind"), py::arg("phases") = "A", py::arg("rf") = 0.0,
          "Sequence bus voltages before and during a fault.");

    m.def("run_scenario",
          [](const std::filesystem::path& path, std::optional<std::filesystem::path> out, std::optional<double> rate,
             std::uint64_t seed) {
              const auto sc = mgp::load_scenario(path);
              mgp::RunReport r;
              {
                  py::gil_scoped_release release;
                  r = mgp::run_scenario(sc, options(std::move(out), rate, seed));
              }
              return as_python(mgp::to_json(r));
          },
          py::arg("path"), py::arg("out") = py::none(), py::arg("rate") = py::none(), py::arg("seed") = 0);
    m.def("run_suite",
          [](const std::filesystem::path& dir, std::optional<std::filesystem::path> out, std::optional<double> rate,
             std::uint64_t seed) {
              mgp::SuiteReport r;
              {
                  py::gil_scoped_release release;
                  r = mgp::run_suite(dir, options(std::move(out), rate, seed));
              }
              return as_python(mgp::to_json(r));
          },
          py::arg("directory"), py::arg("out") = py::none(), py::arg("rate") = py::none(), py::arg("seed") = 0);
}
