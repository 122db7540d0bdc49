#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ltn/basis.hpp"
#include "ltn/contrastive.hpp"
#include "ltn/errors.hpp"
#include "ltn/evaluation.hpp"
#include "ltn/experiment.hpp"
#include "ltn/selftest.hpp"
#include "ltn/trainer.hpp"

namespace py = pybind11;
using namespace ltn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::dict metrics_dict(const StepMetrics& m) {
  py::dict d;
  d["step"] = m.step;
  d["loss"] = m.loss;
  d["queue_size"] = m.queue_size;
  d["basis_orthogonality_error"] = m.basis_orthogonality_error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Latent time navigation: time-parameterized contrastive pre-training";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  static py::exception<Error> ltn_error(m, "LtnError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    } catch (const Error& e) {
      py::set_error(ltn_error, e.what());
    }
  });

  m.def(
      "resolve_config", [](const std::string& text) { return parse_config(text).to_text(); }, py::arg("text") = "",
      "Parses `key = value` text, fills defaults, validates, and returns the canonical text.");

  py::class_<Trainer>(m, "Trainer")
      .def(py::init([](const std::string& text) { return Trainer(parse_config(text)); }), py::arg("config") = "")
      .def_static("load", &Trainer::load, py::arg("path"))
      .def("save", &Trainer::save, py::arg("path"))
      .def("step", [](Trainer& t) { return metrics_dict(t.step()); })
      .def(
          "run",
          [](Trainer& t, std::size_t steps) {
            py::list out;
            for (const StepMetrics& s : t.run(steps)) out.append(metrics_dict(s));
            return out;
          },
          py::arg("steps"))
      .def_property_readonly("steps_done", &Trainer::steps_done)
      .def_property_readonly("config", [](const Trainer& t) { return t.config().to_text(); })
      .def_property_readonly("seed", [](const Trainer& t) { return t.config().seed; })
      .def_property_readonly("queue_size", [](const Trainer& t) { return t.queue().size(); })
      .def_property_readonly("basis",
                             [](const Trainer& t) { return to_array(orthogonalize(t.online().basis.raw)); })
      .def("probe",
           [](const Trainer& t) {
             const ProbeResult r = linear_probe(t.online(), t.config());
             py::dict d;
             d["train_accuracy"] = r.train_accuracy;
             d["test_accuracy"] = r.test_accuracy;
             d["num_classes"] = r.num_classes;
             return d;
           })
      .def(
          "align",
          [](const Trainer& t, std::size_t stream_index, std::size_t segments) {
            const RunConfig& c = t.config();
            const AlignmentResult r =
                time_alignment(t.online(), c, analysis_stream(c, stream_index), segments ? segments : c.align_segments);
            py::dict d;
            d["rho"] = r.rho;
            d["rho_original"] = r.rho_original;
            d["degenerate"] = r.degenerate;
            d["t_start"] = r.t_start;
            d["coords"] = to_array(r.coords);
            return d;
          },
          py::arg("stream_index") = 0, py::arg("segments") = 0);

  m.def(
      "orthogonalize", [](const Array& a) { return to_array(orthogonalize(to_matrix(a))); }, py::arg("raw"),
      "Modified Gram-Schmidt on the columns; raises NumericalError on a dependent column.");
  m.def(
      "orthogonality_error", [](const Array& q) { return orthogonality_error(to_matrix(q)); }, py::arg("q"));
  m.def(
      "info_nce",
      [](const std::vector<double>& pos, const std::vector<double>& neg, const std::string& mode) {
        return info_nce(pos, neg, parse_denominator(mode));
      },
      py::arg("positive_sims"), py::arg("negative_sims"), py::arg("denominator") = "pos+neg",
      "Scalar loss for one query from temperature-scaled similarities.");
  m.def(
      "run_experiment",
      [](const std::string& text) {
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(parse_config(text));
        }
        py::dict d;
        d["probe_accuracy"] = r.probe_accuracy;
        d["rho_untrained"] = r.rho_untrained;
        d["rho_trained"] = r.rho_trained;
        d["final_loss"] = r.final_loss;
        d["steps"] = r.steps;
        d["seed"] = r.config.seed;
        return d;
      },
      py::arg("config") = "", "Pre-train, probe and measure time alignment for one config.");
  m.def("selftest", [] {
    py::list out;
    for (const SelftestCheck& c : run_selftest()) out.append(py::make_tuple(c.name, c.passed, c.detail));
    return out;
  });
}
