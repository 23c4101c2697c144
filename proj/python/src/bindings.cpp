#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <sstream>

#include "wqfl/bound.hpp"
#include "wqfl/channel.hpp"
#include "wqfl/lambert_w.hpp"
#include "wqfl/quant.hpp"
#include "wqfl/roundopt.hpp"
#include "wqfl/sim/config.hpp"
#include "wqfl/sim/experiment.hpp"

namespace py = pybind11;
using namespace wqfl;

namespace {

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

py::dict record_dict(const sim::RoundRecord& r) {
  py::dict d;
  d["round"] = r.round;
  d["sim_time"] = r.sim_time;
  d["latency"] = r.latency;
  d["l_c"] = r.l_c;
  d["epsilon"] = r.epsilon;
  d["c3_slack"] = r.c3_slack;
  d["train_loss"] = r.train_loss;
  d["test_loss"] = r.test_loss;
  d["test_accuracy"] = r.test_accuracy;
  d["bits"] = r.bits;
  d["slot"] = r.slot;
  d["energy"] = r.energy;
  d["freq"] = r.freq;
  d["gain"] = r.gain;
  d["delta"] = r.delta;
  return d;
}

py::dict run_dict(const sim::RunResult& r) {
  py::dict d;
  d["leg"] = r.leg;
  py::list rounds;
  for (const auto& rec : r.rounds) rounds.append(record_dict(rec));
  d["rounds"] = rounds;
  d["diagnostics"] = r.diagnostics;
  d["infeasible"] = r.infeasible;
  d["failed"] = r.failed;
  d["message"] = r.message;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantized federated learning over wireless links: quantizer, channel, round optimizer, bound, simulator";

  // Quantizer.
  py::class_<quant::QuantizedUpdate>(m, "QuantizedUpdate")
      .def_readonly("w_min", &quant::QuantizedUpdate::w_min)
      .def_readonly("w_max", &quant::QuantizedUpdate::w_max)
      .def_readonly("bits", &quant::QuantizedUpdate::bits)
      .def_readonly("levels", &quant::QuantizedUpdate::levels)
      .def_readonly("signs", &quant::QuantizedUpdate::signs)
      .def_readonly("payload_bits", &quant::QuantizedUpdate::payload_bits);
  m.def(
      "quantize",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& delta, int bits,
         std::uint64_t seed, std::int64_t header_bits) {
        Rng rng = derive_rng(seed, Stream::quantization);
        return quant::quantize(to_vector(delta), bits, rng, header_bits);
      },
      py::arg("delta"), py::arg("bits"), py::arg("seed") = 0, py::arg("header_bits") = quant::kDefaultHeaderBits);
  m.def("dequantize", [](const quant::QuantizedUpdate& q) {
    const auto v = quant::dequantize(q);
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
    return out;
  });
  m.def("variance_bound", &quant::variance_bound, py::arg("d"), py::arg("w_min"), py::arg("w_max"), py::arg("bits"));
  m.def("payload_bits", &quant::payload_bits, py::arg("d"), py::arg("bits"), py::arg("header_bits") = quant::kDefaultHeaderBits);

  m.def("lambert_w0", &lambert_w0, py::arg("x"));

  // Channel.
  py::class_<channel::PhysicsConfig>(m, "PhysicsConfig")
      .def(py::init<>())
      .def_readwrite("bandwidth_hz", &channel::PhysicsConfig::bandwidth_hz)
      .def_readwrite("noise_psd", &channel::PhysicsConfig::noise_psd)
      .def_readwrite("zeta", &channel::PhysicsConfig::zeta)
      .def_readwrite("tau", &channel::PhysicsConfig::tau)
      .def_readwrite("header_bits", &channel::PhysicsConfig::header_bits)
      .def_readwrite("pathloss_exponent", &channel::PhysicsConfig::pathloss_exponent);
  py::class_<channel::UserProfile>(m, "UserProfile")
      .def(py::init<>())
      .def_readwrite("id", &channel::UserProfile::id)
      .def_readwrite("cycles_per_bit", &channel::UserProfile::cycles_per_bit)
      .def_readwrite("workload_bits", &channel::UserProfile::workload_bits)
      .def_readwrite("f_max", &channel::UserProfile::f_max)
      .def_readwrite("e_max", &channel::UserProfile::e_max)
      .def_readwrite("weight", &channel::UserProfile::weight)
      .def_readwrite("distance", &channel::UserProfile::distance);
  m.def("uplink_bits", &channel::uplink_bits, py::arg("slot"), py::arg("energy"), py::arg("gain"),
        py::arg("physics") = channel::PhysicsConfig{});
  m.def("min_uplink_time", &channel::min_uplink_time, py::arg("payload"), py::arg("energy"), py::arg("gain"),
        py::arg("physics") = channel::PhysicsConfig{});
  m.def("pathloss", &channel::pathloss, py::arg("distance"), py::arg("exponent"));

  // Round optimizer.
  py::class_<roundopt::SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("b_cap", &roundopt::SolverOptions::b_cap)
      .def_readwrite("lc_rel_tol", &roundopt::SolverOptions::lc_rel_tol)
      .def_readwrite("c3_rel_tol", &roundopt::SolverOptions::c3_rel_tol)
      .def_readwrite("integer_search", &roundopt::SolverOptions::integer_search);
  py::class_<roundopt::RoundInputs>(m, "RoundInputs")
      .def(py::init<>())
      .def_readwrite("users", &roundopt::RoundInputs::users)
      .def_readwrite("gains", &roundopt::RoundInputs::gains)
      .def_readwrite("delta", &roundopt::RoundInputs::delta)
      .def_readwrite("epsilon", &roundopt::RoundInputs::epsilon)
      .def_readwrite("model_dim", &roundopt::RoundInputs::model_dim)
      .def_readwrite("physics", &roundopt::RoundInputs::physics)
      .def_readwrite("options", &roundopt::RoundInputs::options);
  py::enum_<roundopt::Status>(m, "Status")
      .value("ok", roundopt::Status::ok)
      .value("infeasible", roundopt::Status::infeasible)
      .value("epsilon_unreachable", roundopt::Status::epsilon_unreachable);
  py::class_<roundopt::RoundAllocation>(m, "RoundAllocation")
      .def_readonly("l_c", &roundopt::RoundAllocation::l_c)
      .def_readonly("freq", &roundopt::RoundAllocation::freq)
      .def_readonly("energy", &roundopt::RoundAllocation::energy)
      .def_readonly("slot", &roundopt::RoundAllocation::slot)
      .def_readonly("bits", &roundopt::RoundAllocation::bits)
      .def_readonly("latency", &roundopt::RoundAllocation::latency)
      .def_readonly("status", &roundopt::RoundAllocation::status)
      .def_readonly("message", &roundopt::RoundAllocation::message)
      .def_property_readonly("feasible", &roundopt::RoundAllocation::feasible);
  py::class_<roundopt::Multipliers>(m, "Multipliers")
      .def_readonly("lambda1", &roundopt::Multipliers::lambda1)
      .def_readonly("lambda2", &roundopt::Multipliers::lambda2)
      .def_readonly("lambda3", &roundopt::Multipliers::lambda3)
      .def_readonly("lambda4", &roundopt::Multipliers::lambda4)
      .def_readonly("lambda5", &roundopt::Multipliers::lambda5);
  m.def("solve_round", &roundopt::solve_round, py::arg("inputs"));
  m.def(
      "solve_round_continuous",
      [](const roundopt::RoundInputs& in) {
        const auto s = roundopt::solve_round_continuous(in);
        const double kkt = s.alloc.feasible() ? roundopt::kkt_residuals(s.alloc, s.mult, in).max() : 0.0;
        return py::make_tuple(s.alloc, s.mult, kkt);
      },
      py::arg("inputs"), "Returns (allocation, multipliers, max KKT residual).");
  m.def(
      "allocate_fixed_bits",
      [](const std::vector<double>& bits, const roundopt::RoundInputs& in) {
        return roundopt::allocate_fixed_bits(bits, in);
      },
      py::arg("bits"), py::arg("inputs"));
  m.def(
      "tolerance_usage",
      [](const std::vector<double>& bits, const roundopt::RoundInputs& in) {
        return roundopt::tolerance_usage(bits, in);
      },
      py::arg("bits"), py::arg("inputs"));
  m.def("baseline_fixed_bits", &roundopt::baseline_fixed_bits, py::arg("inputs"), py::arg("bits") = 16);
  m.def("baseline_equal_slots", py::overload_cast<const roundopt::RoundInputs&>(&roundopt::baseline_equal_slots),
        py::arg("inputs"));
  m.def("baseline_equal_energy", &roundopt::baseline_equal_energy, py::arg("inputs"));

  // Convergence bound.
  py::class_<bound::BoundConstants>(m, "BoundConstants")
      .def(py::init<>())
      .def_readwrite("L", &bound::BoundConstants::L)
      .def_readwrite("mu", &bound::BoundConstants::mu)
      .def_readwrite("G2", &bound::BoundConstants::G2)
      .def_readwrite("sigma2", &bound::BoundConstants::sigma2)
      .def_readwrite("Gamma", &bound::BoundConstants::Gamma)
      .def_readwrite("tau", &bound::BoundConstants::tau)
      .def_readwrite("gamma", &bound::BoundConstants::gamma)
      .def_readwrite("Delta0", &bound::BoundConstants::Delta0);
  m.def("compute_U", &bound::compute_U, py::arg("constants"));
  m.def("discount_weights", &bound::discount_weights, py::arg("T"), py::arg("gamma"));
  m.def(
      "convergence_bound",
      [](int T, const bound::BoundConstants& k, const bound::J2Schedule& j2, const std::vector<double>& p) {
        const auto b = bound::convergence_bound(T, k, j2, p);
        return py::make_tuple(b.first_term, b.gap_term, b.total);
      },
      py::arg("T"), py::arg("constants"), py::arg("j2"), py::arg("p"),
      "j2(round, user) -> quantization error. Returns (first_term, gap_term, total).");

  // Simulator.
  py::register_exception<sim::ConfigError>(m, "ConfigError", PyExc_ValueError);
  m.def("default_config", [] { return sim::dump_config(sim::reference_preset()); },
        "Reference configuration as a JSON string.");
  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::map<std::string, std::string>& overrides) {
        auto cfg = sim::parse_config(config_json);
        for (const auto& [k, v] : overrides) sim::apply_override(cfg, k, v);
        sim::RunResult r;
        {
          py::gil_scoped_release release;
          r = sim::run_experiment(cfg);
        }
        return run_dict(r);
      },
      py::arg("config_json") = "{}", py::arg("overrides") = std::map<std::string, std::string>{},
      "Runs one experiment. The config is JSON applied on top of the reference setup.");
  m.def(
      "metrics_csv",
      [](const std::string& config_json) {
        const auto cfg = sim::parse_config(config_json);
        const auto r = sim::run_experiment(cfg);
        std::ostringstream out;
        sim::write_metrics_header(out, cfg.n_users, false);
        sim::write_metrics_rows(out, r, false);
        return out.str();
      },
      py::arg("config_json") = "{}");
}
