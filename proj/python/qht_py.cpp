#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "qht/dm_estimator.hpp"
#include "qht/error.hpp"
#include "qht/forward.hpp"
#include "qht/pattern.hpp"
#include "qht/sampler.hpp"
#include "qht/specfun.hpp"
#include "qht/state.hpp"
#include "qht/verify.hpp"
#include "qht/wigner_estimator.hpp"

namespace py = pybind11;

namespace {

qht::DensityMatrix from_numpy(const Eigen::MatrixXcd& m, bool raw) {
  return qht::DensityMatrix(m, raw);
}

py::array_t<double> column(const qht::Dataset& d, bool want_y) {
  py::array_t<double> out(static_cast<py::ssize_t>(d.size()));
  auto v = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < d.size(); ++i) {
    v(static_cast<py::ssize_t>(i)) = want_y ? d.records[i].y : d.records[i].phi;
  }
  return out;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_qht, m) {
  m.doc() = "Homodyne tomography: pattern-function and kernel estimators.";
  m.attr("__version__") = QHT_VERSION;

  auto base = py::register_exception<qht::Error>(m, "Error");
  py::register_exception<qht::DomainError>(m, "DomainError", base.ptr());
  py::register_exception<qht::NumericError>(m, "NumericError", base.ptr());

  m.def("hermite_fn", [](int k, double x) { return qht::specfun::hermite_fn(k, x); },
        py::arg("m"), py::arg("x"));
  m.def("laguerre", [](int n, int a, double x) { return qht::specfun::laguerre(n, a, x); },
        py::arg("n"), py::arg("alpha"), py::arg("x"));

  py::class_<qht::DensityMatrix>(m, "DensityMatrix")
      .def(py::init(&from_numpy), py::arg("entries"), py::arg("raw") = false)
      .def_property_readonly("dim", &qht::DensityMatrix::dim)
      .def_property_readonly("raw", &qht::DensityMatrix::raw)
      .def_property_readonly("matrix", &qht::DensityMatrix::entries)
      .def("trace_deficit", &qht::DensityMatrix::trace_deficit)
      .def("eigenvalues", &qht::DensityMatrix::eigenvalues)
      .def("__getitem__", [](const qht::DensityMatrix& r, std::pair<int, int> ij) {
        if (ij.first < 0 || ij.second < 0 || ij.first >= r.dim() || ij.second >= r.dim()) {
          throw py::index_error("index out of range");
        }
        return r(ij.first, ij.second);
      });

  m.def("fock", [](int k, int dim) { return qht::make_state(qht::state_kind::Fock{k}, dim); },
        py::arg("k"), py::arg("dim"));
  m.def("coherent",
        [](std::complex<double> a, int dim) {
          return qht::make_state(qht::state_kind::Coherent{a}, dim);
        },
        py::arg("alpha"), py::arg("dim"));
  m.def("thermal",
        [](double nbar, int dim) { return qht::make_state(qht::state_kind::Thermal{nbar}, dim); },
        py::arg("nbar"), py::arg("dim"));
  m.def("read_state", [](const std::string& p) { return qht::read_state_file(p); });

  m.def("wigner", &qht::wigner_eval, py::arg("rho"), py::arg("q"), py::arg("p"));
  m.def("quadrature_density", &qht::quadrature_density, py::arg("rho"), py::arg("x"),
        py::arg("phi"));

  py::class_<qht::Dataset>(m, "Dataset")
      .def_property_readonly("y", [](const qht::Dataset& d) { return column(d, true); })
      .def_property_readonly("phi", [](const qht::Dataset& d) { return column(d, false); })
      .def_readonly("eta", &qht::Dataset::eta)
      .def_readonly("seed", &qht::Dataset::seed)
      .def_readonly("source_state_id", &qht::Dataset::source_state_id)
      .def("__len__", &qht::Dataset::size)
      .def("write", [](const qht::Dataset& d, const std::string& p) { qht::write_dataset(p, d); });

  m.def("sample",
        [](const qht::DensityMatrix& rho, double eta, std::size_t n, std::uint64_t seed) {
          py::gil_scoped_release release;
          return qht::sample(rho, qht::NoiseModel::make(eta), n, seed);
        },
        py::arg("rho"), py::arg("eta"), py::arg("n"), py::arg("seed"));
  m.def("read_dataset", [](const std::string& p) { return qht::read_dataset(p); });

  m.def("select_tuning",
        [](double n, double eta, double B, double r) {
          const qht::DmTuning t =
              qht::select_tuning(n, qht::NoiseModel::make(eta), qht::StateClass::make(B, r));
          py::dict d;
          d["N"] = t.N;
          d["N_real"] = t.N_real;
          d["delta"] = t.delta ? py::cast(*t.delta) : py::none();
          d["residuals"] = t.residuals;
          return d;
        },
        py::arg("n"), py::arg("eta"), py::arg("B") = 1.0, py::arg("r") = 2.0);

  m.def("estimate_dm",
        [](const qht::Dataset& data, int N, std::optional<double> delta, bool project) {
          py::gil_scoped_release release;
          qht::DmTuning t;
          t.N = N;
          t.N_real = N;
          t.delta = delta;
          const qht::NoiseModel noise = qht::NoiseModel::make(data.eta);
          const qht::PatternTable table = qht::build_table(N, qht::regime_for(noise, t));
          qht::DensityMatrix rho = qht::estimate_dm(data, t, table);
          return project ? qht::project_physical(rho).rho : rho;
        },
        py::arg("data"), py::arg("N"), py::arg("delta") = std::nullopt,
        py::arg("project") = false);

  m.def("kernel", [](double u, double h, double eta) {
          return qht::kernel_eval(u, h, qht::NoiseModel::make(eta));
        },
        py::arg("u"), py::arg("h"), py::arg("eta"));

  m.def("estimate_wigner",
        [](const qht::Dataset& data, double h, double s_n, double step) {
          qht::WignerGrid g;
          {
            py::gil_scoped_release release;
            g = qht::estimate_wigner(data, qht::WignerTuning::make(h, s_n), {step, 0.0});
          }
          const auto c = static_cast<py::ssize_t>(g.count());
          py::array_t<double> values({c, c});
          std::copy(g.values().begin(), g.values().end(), values.mutable_data());
          py::array_t<double> axis(c);
          for (py::ssize_t i = 0; i < c; ++i) axis.mutable_at(i) = g.coord(static_cast<std::size_t>(i));
          return py::make_tuple(axis, values);
        },
        py::arg("data"), py::arg("h"), py::arg("s_n"), py::arg("step") = 0.0);

  m.def("verify",
        [](double perturb, bool norm_growth) {
          qht::VerifyOptions o;
          o.envelope_factor = perturb;
          o.include_norm_growth = norm_growth;
          nlohmann::json j;
          {
            py::gil_scoped_release release;
            j = qht::to_json(qht::run_verification(o));
          }
          return json_to_py(j);
        },
        py::arg("perturb") = 1.0, py::arg("norm_growth") = true);
}
