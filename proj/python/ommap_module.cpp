#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ommap/bip.hpp"
#include "ommap/counterexamples.hpp"
#include "ommap/errors.hpp"
#include "ommap/runner.hpp"

namespace py = pybind11;
using namespace ommap;

namespace {

py::dict map_dict(const MapSolution& s) {
    py::dict d;
    d["point"] = s.point;
    d["objective"] = s.objective;
    d["optimality_residual"] = s.optimality_residual;
    d["iterations"] = s.iterations;
    d["solver"] = s.solver;
    d["converged"] = s.converged;
    return d;
}

LinearObservation observation(const Matrix& o, const Vector& noise, const Vector& y) {
    return LinearObservation(o, SpectralOperator::diagonal(noise), y);
}

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_python(const py::object& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Onsager-Machlup functionals, MAP estimators and Gamma-convergence probes";

    const auto input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", input_error.ptr());
    py::register_exception<RegimeError>(m, "RegimeError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    m.def("kl_gaussians", &kl_gaussians, py::arg("sigma"));
    m.def("kl_gaussians_quadrature", &kl_gaussians_quadrature, py::arg("sigma"));
    m.def("spike_mode", &spike_mode, py::arg("n"));
    m.def("kl_spike", &kl_spike, py::arg("n"));
    m.def("spike_density", [](double n, double x) { return SpikeFamily(n).density(x); }, py::arg("n"), py::arg("x"));
    m.def("mixture_density", [](double t, double x, double r) { return MixtureFamily(t, r).density(x); }, py::arg("t"),
          py::arg("x"), py::arg("r") = 5.0);
    m.def("mixture_mode", [](double t, double r) { return mixture_modes(t, r).mode; }, py::arg("t"), py::arg("r") = 5.0);
    m.def("kl_mixture", &kl_mixture, py::arg("t"), py::arg("r") = 5.0);

    m.def("liminf_only_log2_delta_ratios", [](int n_max) {
        return liminf_only_ratios(LiminfOnlyMeasure(std::max(40, n_max + 2)), n_max).log2_delta_ratios;
    }, py::arg("n_max"));
    m.def("crosses_om_difference", [](const std::string& norm) {
        if (norm != "l1" && norm != "sup") throw InputError("norm must be 'l1' or 'sup'");
        return crosses_om_difference(norm == "l1" ? CrossNorm::one : CrossNorm::sup);
    }, py::arg("norm"));

    m.def("map_gaussian", [](const Vector& mean, const Vector& eigenvalues, const Matrix& o, const Vector& noise, const Vector& y) {
        return map_dict(map_solve_gaussian_linear(GaussianMeasure(mean, SpectralOperator::diagonal(eigenvalues)), observation(o, noise, y)));
    }, py::arg("mean"), py::arg("eigenvalues"), py::arg("matrix"), py::arg("noise"), py::arg("data"));
    m.def("map_besov", [](double s, int d, double eta, const Matrix& o, const Vector& noise, const Vector& y, double tol) {
        SolverOptions opts;
        opts.tol = tol;
        const BesovMeasure prior(s, d, eta, static_cast<int>(o.cols()));
        return map_dict(map_solve_besov(prior, quadratic_potential(observation(o, noise, y)), opts));
    }, py::arg("s"), py::arg("d"), py::arg("eta"), py::arg("matrix"), py::arg("noise"), py::arg("data"), py::arg("tol") = 1e-8);
    m.def("besov_gamma", [](double s, int d, double eta, int dim) { return BesovMeasure(s, d, eta, dim).gamma; },
          py::arg("s"), py::arg("d"), py::arg("eta"), py::arg("dim"));

    m.def("validate_config", [](const py::object& cfg) { validate_config(from_python(cfg)); }, py::arg("config"));
    m.def("run_config", [](const py::object& cfg, std::optional<std::uint64_t> seed, std::optional<std::string> out, int threads) {
        RunOptions opts;
        opts.seed = seed;
        if (out) opts.out = *out;
        opts.threads = threads;
        const json parsed = from_python(cfg);
        RunSummary r;
        {
            py::gil_scoped_release release;
            r = run_config(parsed, opts);
        }
        py::dict d;
        d["kind"] = r.kind;
        d["out_dir"] = r.out_dir.string();
        d["files"] = r.files;
        d["results"] = to_python(r.results);
        return d;
    }, py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(), py::arg("threads") = 0);
    m.def("reproduce_figure", &reproduce_figure, py::arg("figure_id"), py::arg("out_dir"));
    m.def("figure_ids", &figure_ids);
    m.def("experiment_kinds", &experiment_kinds);
}
