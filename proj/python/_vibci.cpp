#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "vibci/config.hpp"
#include "vibci/dsp_filters.hpp"
#include "vibci/error.hpp"
#include "vibci/learner.hpp"
#include "vibci/metrics.hpp"
#include "vibci/pipeline.hpp"
#include "vibci/spectral.hpp"

namespace py = pybind11;
using namespace vibci;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

FilterKind parse_kind(const std::string& text) {
  if (text == "lowpass") return FilterKind::lowpass;
  if (text == "bandstop") return FilterKind::bandstop;
  if (text == "bandpass") return FilterKind::bandpass;
  throw ValidationError("unknown filter kind '" + text + "' (lowpass, bandstop, bandpass)");
}

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    Matrix m(1, a.shape(0));
    std::copy(a.data(), a.data() + a.size(), m.flat().begin());
    return m;
  }
  if (a.ndim() != 2) throw ValidationError("expected a 1-D or 2-D array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.flat().begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.flat().begin(), m.flat().end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::list trial_list(const SessionPlan& plan) {
  py::list out;
  for (const auto& t : plan.trials)
    out.append(py::make_tuple(t.label.name(), t.start_sample, t.duration_samples));
  return out;
}

class PyFilter {
public:
  PyFilter(const std::string& kind, int order, std::vector<double> edges, double rate)
      : filter_(design_butterworth({parse_kind(kind), order, std::move(edges), rate})) {}

  Array sos() const {
    Array out({filter_.sections.size(), std::size_t{6}});
    auto r = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < filter_.sections.size(); ++i) {
      const auto& s = filter_.sections[i];
      for (std::size_t j = 0; j < 3; ++j) {
        r(i, j) = s.b[j];
        r(i, j + 3) = s.a[j];
      }
    }
    return out;
  }

  double magnitude_db(double hz) const { return filter_.magnitude_db(hz); }
  double max_pole_radius() const { return filter_.max_pole_radius(); }

  Array filtfilt(const Array& x) const {
    Matrix m = to_matrix(x);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto y = vibci::filtfilt(filter_, m.row(r));
      std::copy(y.begin(), y.end(), m.row(r).begin());
    }
    if (x.ndim() == 1) return to_array(std::vector<double>(m.flat().begin(), m.flat().end()));
    return to_array(m);
  }

private:
  DesignedFilter filter_;
};

py::tuple welch(const Array& x, double rate, std::size_t seg_len, double overlap) {
  const auto psd = welch_psd(to_matrix(x), rate, {seg_len, overlap});
  if (x.ndim() == 1) {
    const auto row = psd.power.row(0);
    return py::make_tuple(to_array(psd.freqs), to_array(std::vector<double>(row.begin(), row.end())));
  }
  return py::make_tuple(to_array(psd.freqs), to_array(psd.power));
}

py::dict dual(const Array& x, const Array& y, double C, std::uint64_t seed, double tolerance,
              std::size_t max_epochs) {
  if (x.ndim() != 2) throw ValidationError("x must be 2-D");
  if (y.ndim() != 1) throw ValidationError("y must be 1-D");
  const std::vector<double> labels(y.data(), y.data() + y.size());
  const auto sol = solve_dual(to_matrix(x), labels, C, seed, {tolerance, max_epochs});
  py::dict out;
  out["weights"] = to_array(sol.weights);
  out["bias"] = sol.bias;
  out["alpha"] = to_array(sol.alpha);
  out["objective"] = sol.objective;
  out["kkt_violation"] = sol.kkt_violation;
  out["epochs"] = sol.epochs;
  out["converged"] = sol.converged;
  return out;
}

py::dict bitrate(std::size_t n_classes, double accuracy, double trial_seconds) {
  const auto b = wolpaw_bitrate(n_classes, accuracy, trial_seconds);
  py::dict out;
  out["bits_per_trial"] = b.bits_per_trial;
  out["bits_per_minute"] = b.bits_per_minute;
  out["below_chance"] = b.below_chance;
  return out;
}

py::list schedule(const std::string& protocol, std::uint64_t seed, double rate) {
  return trial_list(schedule_session(ProtocolSpec::builtin(parse_protocol_id(protocol)), rate, seed));
}

py::dict synthesize(const std::string& protocol, std::uint64_t seed, std::optional<std::string> id) {
  const auto spec = ProtocolSpec::builtin(parse_protocol_id(protocol));
  const auto session = synthesize_session(spec, SynthConfig{}, seed, id.value_or(protocol + "-" + std::to_string(seed)));
  py::dict out;
  out["data"] = to_array(session.recording.data());
  out["rate"] = session.recording.rate();
  out["channels"] = session.recording.layout().signal_names();
  out["trials"] = trial_list(session.manifest.plan);
  return out;
}

std::string run(std::optional<std::string> config, std::optional<std::uint64_t> seed,
                std::optional<std::string> protocol, std::optional<std::size_t> train_sessions,
                std::optional<std::size_t> test_sessions) {
  ExperimentConfig cfg = config ? load_config(*config) : ExperimentConfig{};
  if (seed) cfg.seed = *seed;
  if (protocol) cfg.protocol = ProtocolSpec::builtin(parse_protocol_id(*protocol));
  if (train_sessions) cfg.train_sessions = *train_sessions;
  if (test_sessions) cfg.test_sessions = *test_sessions;
  cfg.validate();
  return results_to_json(run_experiment(cfg));
}

}  // namespace

PYBIND11_MODULE(_vibci, m) {
  m.doc() = "Visual-imagery BCI pipeline core";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DesignError>(m, "DesignError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const StageError& e) {
      const auto module = py::module_::import("vibci._vibci");
      py::set_error(module.attr(e.is_validation() ? "ValidationError" : "Error"), e.what());
    }
  });

  py::class_<PyFilter>(m, "Filter", "Zero-phase Butterworth filter in second-order sections")
      .def(py::init<const std::string&, int, std::vector<double>, double>(), py::arg("kind"),
           py::arg("order"), py::arg("edges"), py::arg("rate") = 256.0)
      .def_property_readonly("sos", &PyFilter::sos, "Sections as rows [b0, b1, b2, 1, a1, a2]")
      .def("magnitude_db", &PyFilter::magnitude_db, py::arg("hz"))
      .def_property_readonly("max_pole_radius", &PyFilter::max_pole_radius)
      .def("filtfilt", &PyFilter::filtfilt, py::arg("x"), "Forward-backward filtering along the last axis");

  m.def("welch_psd", &welch, py::arg("x"), py::arg("rate") = 256.0, py::arg("seg_len") = 512,
        py::arg("overlap") = 0.5, "One-sided Welch PSD; returns (freqs, power)");
  m.def("solve_dual", &dual, py::arg("x"), py::arg("y"), py::arg("C"), py::arg("seed") = 0,
        py::arg("tolerance") = 1e-4, py::arg("max_epochs") = 10000,
        "Binary linear SVM with regularized bias by dual coordinate descent");
  m.def("wolpaw_bitrate", &bitrate, py::arg("n_classes"), py::arg("accuracy"), py::arg("trial_seconds"));
  m.def("schedule_session", &schedule, py::arg("protocol"), py::arg("seed"), py::arg("rate") = 256.0,
        "Trial list of (label, start_sample, duration_samples)");
  m.def("synthesize_session", &synthesize, py::arg("protocol"), py::arg("seed"), py::arg("session_id") = py::none());
  m.def("run_experiment_json", &run, py::arg("config") = py::none(), py::arg("seed") = py::none(),
        py::arg("protocol") = py::none(), py::arg("train_sessions") = py::none(),
        py::arg("test_sessions") = py::none());
  m.def("default_config_text", &default_config_text);
}
