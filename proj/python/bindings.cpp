#include <pybind11/eigen.h>
#include <pybind11/iostream.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "stigp/cli.hpp"
#include "stigp/dataset.hpp"
#include "stigp/error.hpp"
#include "stigp/eval.hpp"
#include "stigp/forecaster.hpp"
#include "stigp/gp.hpp"
#include "stigp/sti.hpp"
#include "stigp/version.hpp"

namespace py = pybind11;
using namespace stigp;

namespace {

py::array_t<bool> missing_to_numpy(const Dataset& d) {
    py::array_t<bool> out({static_cast<py::ssize_t>(d.num_variables()), static_cast<py::ssize_t>(d.num_times())});
    auto view = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < view.shape(0); ++i)
        for (py::ssize_t t = 0; t < view.shape(1); ++t)
            view(i, t) = d.missing.size() > 0 && d.missing(i, t);
    return out;
}

void missing_from_numpy(Dataset& d, const py::object& obj) {
    if (obj.is_none()) {
        d.missing.resize(0, 0);
        return;
    }
    auto arr = py::array_t<bool, py::array::c_style | py::array::forcecast>::ensure(obj);
    if (!arr || arr.ndim() != 2) throw InvalidArgument("missing mask must be a 2-D boolean array");
    auto view = arr.unchecked<2>();
    d.missing.resize(view.shape(0), view.shape(1));
    for (py::ssize_t i = 0; i < view.shape(0); ++i)
        for (py::ssize_t t = 0; t < view.shape(1); ++t) d.missing(i, t) = view(i, t);
}

data::SystemSpec make_spec(data::SystemSpec spec, std::size_t n_units, std::size_t steps, std::uint64_t seed,
                           const py::kwargs& kw) {
    if (n_units) spec.n_units = n_units;
    spec.steps = steps;
    spec.seed = seed;
    if (kw.contains("dt")) spec.dt = kw["dt"].cast<double>();
    if (kw.contains("sample_every")) spec.sample_every = kw["sample_every"].cast<std::size_t>();
    if (kw.contains("coupling")) spec.coupling = kw["coupling"].cast<double>();
    if (kw.contains("drift_rate")) spec.drift_rate = kw["drift_rate"].cast<double>();
    if (kw.contains("transient")) spec.transient = kw["transient"].cast<std::size_t>();
    return spec;
}

py::dict metric_dict(const eval::MetricReport& r) {
    py::dict d;
    d["mae"] = r.mae;
    d["rmse"] = r.rmse;
    d["pcc"] = r.pcc ? py::object(py::float_(*r.pcc)) : py::object(py::none());
    d["horizon"] = r.horizon;
    d["per_step_abs_err"] = r.per_step_abs_err;
    return d;
}

py::dict forecast_dict(const forecast::Forecast& fc) {
    const std::size_t h = fc.steps.size();
    Vector mean(h), dispersion(h), mean_variance(h);
    std::vector<std::size_t> t(h), contributors(h);
    for (std::size_t k = 0; k < h; ++k) {
        const auto& s = fc.steps[k];
        t[k] = s.t;
        mean[static_cast<Eigen::Index>(k)] = s.mean;
        dispersion[static_cast<Eigen::Index>(k)] = s.dispersion;
        mean_variance[static_cast<Eigen::Index>(k)] = s.mean_variance;
        contributors[k] = s.contributors;
    }
    py::list raw;
    for (const auto& r : fc.raw)
        raw.append(py::dict(py::arg("row_l") = r.row, py::arg("t") = fc.train_len + r.step,
                            py::arg("mean") = r.mean, py::arg("variance") = r.variance));
    py::list blocks;
    for (const auto& b : fc.blocks)
        blocks.append(py::dict(py::arg("rows") = b.rows, py::arg("log_likelihood") = b.log_likelihood,
                               py::arg("restart") = b.restart, py::arg("iterations") = b.iterations,
                               py::arg("signal_var") = b.theta.signal_var,
                               py::arg("length_scales") = b.theta.length_scales,
                               py::arg("noise_var") = b.theta.noise_var, py::arg("coreg") = b.coreg));
    py::dict d;
    d["t"] = t;
    d["mean"] = mean;
    d["dispersion"] = dispersion;
    d["mean_variance"] = mean_variance;
    d["contributors"] = contributors;
    d["raw"] = raw;
    d["blocks"] = blocks;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-task GP forecasting over delay-embedding mapping matrices";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<IllConditionedError>(m, "IllConditionedError", PyExc_ArithmeticError);
    py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_ArithmeticError);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](const Matrix& values, std::optional<std::vector<std::string>> names,
                         std::optional<std::vector<double>> stamps, const py::object& missing) {
                 Dataset d = Dataset::from_matrix(values);
                 if (names) d.variable_names = *names;
                 if (stamps) d.time_stamps = *stamps;
                 missing_from_numpy(d, missing);
                 d.validate();
                 return d;
             }),
             py::arg("values"), py::arg("variable_names") = py::none(), py::arg("time_stamps") = py::none(),
             py::arg("missing") = py::none())
        .def_readwrite("values", &Dataset::values)
        .def_readwrite("variable_names", &Dataset::variable_names)
        .def_readwrite("time_stamps", &Dataset::time_stamps)
        .def_property("missing", &missing_to_numpy, &missing_from_numpy)
        .def_property_readonly("num_variables", &Dataset::num_variables)
        .def_property_readonly("num_times", &Dataset::num_times)
        .def("has_missing", &Dataset::has_missing)
        .def("find_variable", &Dataset::find_variable)
        .def("__repr__", [](const Dataset& d) {
            std::ostringstream os;
            os << "Dataset(N=" << d.num_variables() << ", T=" << d.num_times() << ", missing=" << d.missing_count() << ")";
            return os.str();
        });

    m.def(
        "generate_lorenz",
        [](std::size_t n_units, std::size_t steps, std::uint64_t seed, const py::kwargs& kw) {
            return data::gen_lorenz(make_spec(data::SystemSpec::lorenz_defaults(), n_units, steps, seed, kw));
        },
        py::arg("n_units") = 30, py::arg("steps") = 200, py::arg("seed") = 0,
        "Ring-coupled Lorenz oscillators; extra keywords: dt, sample_every, coupling, drift_rate, transient.");
    m.def(
        "generate_pendulum",
        [](std::size_t n_units, std::size_t steps, std::uint64_t seed, const py::kwargs& kw) {
            return data::gen_pendulum(make_spec(data::SystemSpec::pendulum_defaults(), n_units, steps, seed, kw));
        },
        py::arg("n_units") = 32, py::arg("steps") = 200, py::arg("seed") = 0);
    m.def("add_noise", &data::add_noise, py::arg("dataset"), py::arg("noise_std"), py::arg("seed") = 0);
    m.def("smooth", &data::smooth, py::arg("dataset"), py::arg("window"));
    m.def("impute", &data::impute, py::arg("dataset"));
    m.def("load_csv", &data::load_csv, py::arg("path"));
    m.def("save_csv", &data::save_csv, py::arg("dataset"), py::arg("path"));
    m.def("digest", &data::digest, py::arg("dataset"));

    m.def("block_rows", &sti::block_rows, py::arg("embedding"), py::arg("block_size"));
    m.def(
        "mapping_task",
        [](std::size_t train_len, std::size_t embedding, std::size_t row) {
            const sti::StiProblem p(1, train_len, 0, train_len, embedding);
            const sti::MappingTask t = p.mapping_task(row);
            auto rng = [](const sti::IndexRange& r) { return py::make_tuple(r.begin, r.end); };
            return py::dict(py::arg("row") = t.row, py::arg("train_inputs") = rng(t.train_inputs),
                            py::arg("train_targets") = rng(t.train_targets),
                            py::arg("predict_inputs") = rng(t.predict_inputs));
        },
        py::arg("train_len"), py::arg("embedding"), py::arg("row"),
        "0-based half-open column ranges of one mapping row.");

    py::class_<gp::KernelParams>(m, "KernelParams")
        .def(py::init([](double signal_var, const py::object& length_scale, double noise_var) {
                 gp::KernelParams p;
                 p.signal_var = signal_var;
                 p.noise_var = noise_var;
                 if (py::isinstance<py::float_>(length_scale) || py::isinstance<py::int_>(length_scale))
                     p.length_scales = Vector::Constant(1, length_scale.cast<double>());
                 else
                     p.length_scales = length_scale.cast<Vector>();
                 p.validate();
                 return p;
             }),
             py::arg("signal_var"), py::arg("length_scale"), py::arg("noise_var"))
        .def_readwrite("signal_var", &gp::KernelParams::signal_var)
        .def_readwrite("noise_var", &gp::KernelParams::noise_var)
        .def_readwrite("length_scales", &gp::KernelParams::length_scales);

    m.def("kernel_eval", &gp::kernel_eval, py::arg("x"), py::arg("x_prime"), py::arg("same_index"),
          py::arg("params"));
    m.def("gram", &gp::gram, py::arg("inputs"), py::arg("params"));
    m.def("log_marginal_likelihood", &gp::log_marginal_likelihood, py::arg("inputs"), py::arg("targets"),
          py::arg("params"));
    m.def("log_marginal_likelihood_grad", &gp::log_marginal_likelihood_grad, py::arg("inputs"),
          py::arg("targets"), py::arg("params"));

    py::class_<gp::GpModel>(m, "GpModel")
        .def_readonly("params", &gp::GpModel::params)
        .def_property_readonly("log_likelihood", [](const gp::GpModel& g) { return g.fit.log_likelihood; })
        .def("predict", [](const gp::GpModel& g, const Matrix& query) {
            const gp::Prediction p = gp::predict(g, query);
            return py::make_tuple(p.mean, p.var);
        });
    m.def(
        "gp_fit",
        [](const Matrix& inputs, const Vector& targets, int restarts, int max_iters, std::uint64_t seed, bool ard) {
            gp::OptimConfig config;
            config.max_run = restarts;
            config.max_iters = max_iters;
            return gp::fit(inputs, targets, config, seed, ard);
        },
        py::arg("inputs"), py::arg("targets"), py::arg("restarts") = 3, py::arg("max_iters") = 200,
        py::arg("seed") = 0, py::arg("ard") = false);

    m.def(
        "forecast",
        [](const Dataset& dataset, std::size_t target, std::size_t train_len, std::size_t horizon,
           std::size_t ntask, std::uint64_t seed, int restarts, int max_iters, bool ard) {
            forecast::ForecastConfig config;
            config.target = target;
            config.train_len = train_len;
            config.embedding = horizon + 1;
            config.block_size = ntask;
            config.seed = seed;
            config.optim.max_run = restarts;
            config.optim.max_iters = max_iters;
            config.ard = ard;
            py::gil_scoped_release release;
            forecast::Forecast fc = forecast::run(dataset, config);
            py::gil_scoped_acquire acquire;
            return forecast_dict(fc);
        },
        py::arg("dataset"), py::arg("target"), py::arg("train_len"), py::arg("horizon"), py::arg("ntask") = 5,
        py::arg("seed") = 0, py::arg("restarts") = 3, py::arg("max_iters") = 200, py::arg("ard") = false);

    m.def(
        "metrics",
        [](const std::vector<double>& truth, const std::vector<double>& predicted) {
            return metric_dict(eval::metrics(truth, predicted));
        },
        py::arg("truth"), py::arg("predicted"));
    m.def("baseline_persistence", &eval::baseline_persistence, py::arg("train_targets"), py::arg("horizon"));
    m.def("baseline_drift", &eval::baseline_drift, py::arg("train_targets"), py::arg("horizon"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a command line in-process; returns (exit_code, stdout, stderr).");
}
