#include "stigp/cli.hpp"

#include <chrono>
#include <charconv>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stigp/dataset.hpp"
#include "stigp/error.hpp"
#include "stigp/eval.hpp"
#include "stigp/forecaster.hpp"
#include "stigp/io.hpp"
#include "stigp/report.hpp"
#include "stigp/version.hpp"

namespace stigp::cli {

using nlohmann::json;

namespace {

// Raised for validation failures detected by the command layer itself.
struct UsageError : Error {
    using Error::Error;
};

std::filesystem::path manifest_path(const std::filesystem::path& out) {
    std::filesystem::path p = out;
    p += ".manifest.json";
    return p;
}

std::size_t resolve_target(const Dataset& d, const std::string& token) {
    const long by_name = d.find_variable(token);
    if (by_name >= 0) return static_cast<std::size_t>(by_name);
    std::size_t index = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), index);
    if (res.ec == std::errc() && res.ptr == token.data() + token.size()) {
        if (index >= d.num_variables())
            throw UsageError("target index " + token + " out of range (N = " + std::to_string(d.num_variables()) + ")");
        return index;
    }
    throw UsageError("unknown target '" + token + "'");
}

json base_manifest(const std::string& command, const json& config, std::uint64_t seed) {
    return {{"tool", "stigp"}, {"version", kVersion}, {"command", command}, {"config", config}, {"seed", seed}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct GenerateArgs {
    std::string system = "lorenz";
    std::size_t units = 0;
    std::size_t steps = 200;
    std::uint64_t seed = 0;
    double noise_std = 0.0;
    double dt = 0.01;
    std::size_t sample_every = 5;
    std::optional<double> coupling;
    std::optional<double> drift_rate;
    std::size_t transient = 2000;
    std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    data::SystemSpec spec =
        a.system == "lorenz" ? data::SystemSpec::lorenz_defaults() : data::SystemSpec::pendulum_defaults();
    if (a.units) spec.n_units = a.units;
    spec.steps = a.steps;
    spec.seed = a.seed;
    spec.dt = a.dt;
    spec.sample_every = a.sample_every;
    if (a.coupling) spec.coupling = *a.coupling;
    if (a.drift_rate) spec.drift_rate = *a.drift_rate;
    spec.transient = a.transient;

    Dataset d = data::generate(spec);
    if (a.noise_std > 0.0) d = data::add_noise(d, a.noise_std, a.seed ^ 0x9e3779b97f4a7c15ULL);

    const json config = {{"system", a.system}, {"units", spec.n_units}, {"steps", spec.steps},
                         {"dt", spec.dt}, {"sample_every", spec.sample_every}, {"coupling", spec.coupling},
                         {"drift_rate", spec.drift_rate}, {"transient", spec.transient},
                         {"noise_std", a.noise_std}, {"out", a.out}};
    json manifest = base_manifest("generate", config, a.seed);
    manifest["dataset_digest"] = data::digest(d);
    manifest["duration_s"] = seconds_since(start);

    data::save_csv(d, a.out);
    io::write_file_atomic(manifest_path(a.out), manifest.dump(2) + "\n");
    out << "wrote " << d.num_variables() << " variables x " << d.num_times() << " time points to " << a.out << "\n";
    return kOk;
}

struct PredictArgs {
    std::string data;
    std::string target;
    std::size_t train_len = 0;
    std::size_t horizon = 0;
    std::size_t ntask = 5;
    int restarts = 3;
    int max_iters = 200;
    std::uint64_t seed = 0;
    std::size_t smooth_window = 1;
    bool ard = false;
    unsigned threads = 1;
    std::string out;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset full = data::load_csv(a.data);
    const std::size_t target = resolve_target(full, a.target);
    if (a.train_len > full.num_times())
        throw UsageError("--train-len " + std::to_string(a.train_len) + " exceeds the " +
                         std::to_string(full.num_times()) + " rows of " + a.data);
    if (a.train_len < 2) throw UsageError("--train-len must be at least 2");

    // Only the training window is ever read, so preprocessing cannot see the future.
    Dataset window = full;
    const auto m = static_cast<Eigen::Index>(a.train_len);
    window.values = full.values.leftCols(m);
    window.time_stamps.resize(a.train_len);
    if (full.missing.size() > 0) window.missing = full.missing.leftCols(m);
    window = data::impute(window);
    if (a.smooth_window > a.train_len) throw UsageError("--smooth-window exceeds --train-len");
    window = data::smooth(window, a.smooth_window);

    forecast::ForecastConfig config;
    config.target = target;
    config.train_len = a.train_len;
    config.embedding = a.horizon + 1;
    config.block_size = a.ntask;
    config.optim.max_run = a.restarts;
    config.optim.max_iters = a.max_iters;
    config.seed = a.seed;
    config.ard = a.ard;
    config.threads = a.threads;

    const forecast::Forecast fc = forecast::run(window, config);

    const json flags = {{"data", a.data}, {"target", a.target}, {"train_len", a.train_len},
                        {"horizon", a.horizon}, {"ntask", a.ntask}, {"restarts", a.restarts},
                        {"max_iters", a.max_iters}, {"seed", a.seed}, {"smooth_window", a.smooth_window},
                        {"ard", a.ard}, {"out", a.out}};
    json manifest = base_manifest("predict", flags, a.seed);
    manifest["dataset_digest"] = data::digest(window);
    manifest["blocks"] = report::block_summaries(fc);
    if (!fc.standardizer.constant_variables.empty())
        manifest["constant_variables"] = fc.standardizer.constant_variables;
    manifest["duration_s"] = seconds_since(start);

    const std::string name = full.variable_names[target];
    const json doc = report::forecast_to_json(fc, name, manifest);
    io::write_file_atomic(a.out, doc.dump(2) + "\n");
    io::write_file_atomic(manifest_path(a.out), manifest.dump(2) + "\n");
    out << "forecast of " << name << ": " << fc.steps.size() << " steps in " << fc.blocks.size()
        << " blocks written to " << a.out << "\n";
    return kOk;
}

report::ForecastDoc read_forecast(const std::string& path) {
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
    return report::forecast_from_json(doc);
}

struct EvaluateArgs {
    std::string forecast;
    std::string truth;
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const report::ForecastDoc doc = read_forecast(a.forecast);
    const Dataset truth = data::load_csv(a.truth);
    const long var = truth.find_variable(doc.target);
    if (var < 0) throw UsageError("target '" + doc.target + "' not found in " + a.truth);
    if (truth.num_times() < doc.train_len)
        throw UsageError("truth file is shorter than the training window");
    const std::size_t future = truth.num_times() - doc.train_len;
    if (future != doc.horizon)
        throw UsageError("horizon mismatch: forecast has " + std::to_string(doc.horizon) +
                         " steps, truth file covers " + std::to_string(future));
    if (truth.missing.size() > 0 && truth.missing.row(var).any())
        throw UsageError("truth series for '" + doc.target + "' has missing cells");

    const auto row = truth.values.row(var);
    std::vector<double> train(doc.train_len), actual(doc.horizon), predicted(doc.horizon);
    for (std::size_t t = 0; t < doc.train_len; ++t) train[t] = row(static_cast<Eigen::Index>(t));
    for (std::size_t k = 0; k < doc.horizon; ++k) {
        actual[k] = row(static_cast<Eigen::Index>(doc.train_len + k));
        predicted[k] = doc.steps[k].mean;
    }

    const std::vector<std::pair<std::string, eval::MetricReport>> rows = {
        {"mt-gpr", eval::metrics(actual, predicted)},
        {"persistence", eval::metrics(actual, eval::baseline_persistence(train, doc.horizon))},
        {"drift", eval::metrics(actual, eval::baseline_drift(train, doc.horizon))},
    };
    json result = {{"schema", report::kSchemaVersion}, {"target", doc.target}, {"horizon", doc.horizon}};
    json methods = json::object();
    for (const auto& [name, r] : rows) methods[name] = report::metrics_to_json(r);
    result["methods"] = methods;

    if (!a.out.empty()) io::write_file_atomic(a.out, result.dump(2) + "\n");
    out << report::metrics_table(rows);
    return kOk;
}

struct ReportArgs {
    std::string forecast;
    std::string data;
    std::string truth;
    std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    const report::ForecastDoc doc = read_forecast(a.forecast);
    const Dataset history = data::load_csv(a.data);
    std::optional<Dataset> truth;
    if (!a.truth.empty()) truth = data::load_csv(a.truth);
    const std::string csv = report::plot_data_csv(doc, history, truth);
    io::write_file_atomic(a.out, csv);
    out << "wrote " << doc.train_len + doc.horizon << " rows to " << a.out << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-step forecasting of one variable from a short high-dimensional time series"};
    app.name("stigp");
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Simulate a coupled-oscillator dataset to CSV");
    generate->add_option("--system", gen.system, "lorenz or pendulum")->check(CLI::IsMember({"lorenz", "pendulum"}));
    generate->add_option("--units", gen.units, "Oscillator count (default 30 Lorenz, 32 pendulum)");
    generate->add_option("--steps", gen.steps, "Recorded time points")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    generate->add_option("--noise-std", gen.noise_std, "Std of added Gaussian observation noise")
        ->check(CLI::NonNegativeNumber);
    generate->add_option("--dt", gen.dt, "Integration step")->capture_default_str();
    generate->add_option("--sample-every", gen.sample_every, "Integration steps per recorded point")->capture_default_str();
    generate->add_option("--coupling", gen.coupling, "Coupling strength");
    generate->add_option("--drift-rate", gen.drift_rate, "Parameter drift per recorded point");
    generate->add_option("--transient", gen.transient, "Discarded warm-up steps")->capture_default_str();
    generate->add_option("--out", gen.out, "Output CSV")->required();

    PredictArgs pred;
    auto* predict = app.add_subcommand("predict", "Forecast a target variable");
    predict->add_option("--data", pred.data, "Input CSV")->required();
    predict->add_option("--target", pred.target, "Target column name or 0-based index")->required();
    predict->add_option("--train-len", pred.train_len, "Observed points used for training (M)")->required();
    predict->add_option("--horizon", pred.horizon, "Steps to predict (L-1)")->required()->check(CLI::PositiveNumber);
    predict->add_option("--ntask", pred.ntask, "Mappings fitted jointly per block (J)")->capture_default_str()
        ->check(CLI::PositiveNumber);
    predict->add_option("--restarts", pred.restarts, "Optimizer restarts per block")->capture_default_str()
        ->check(CLI::PositiveNumber);
    predict->add_option("--max-iters", pred.max_iters, "Iteration cap per restart")->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    predict->add_option("--seed", pred.seed, "Random seed")->capture_default_str();
    predict->add_option("--smooth-window", pred.smooth_window, "Centered moving-average window")
        ->capture_default_str()->check(CLI::PositiveNumber);
    predict->add_flag("--ard", pred.ard, "One length scale per input variable");
    predict->add_option("--threads", pred.threads, "Blocks fitted concurrently")->capture_default_str()
        ->check(CLI::PositiveNumber);
    predict->add_option("--out", pred.out, "Output forecast JSON")->required();

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Score a forecast against the observed continuation");
    evaluate->add_option("--forecast", ev.forecast, "Forecast JSON")->required();
    evaluate->add_option("--truth", ev.truth, "CSV holding exactly train-len + horizon rows")->required();
    evaluate->add_option("--out", ev.out, "Optional metrics JSON");

    ReportArgs rep;
    auto* rpt = app.add_subcommand("report", "Emit plot-data CSV for a forecast");
    rpt->add_option("--forecast", rep.forecast, "Forecast JSON")->required();
    rpt->add_option("--data", rep.data, "CSV used for the forecast")->required();
    rpt->add_option("--truth", rep.truth, "Optional CSV with the observed continuation");
    rpt->add_option("--out", rep.out, "Output CSV")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "stigp: " << (e.get_name() == "RequiredError" ? "usage error: " : "") << e.what() << "\n";
        for (auto* sub : app.get_subcommands()) err << sub->help();
        return kUsage;
    }

    try {
        if (*generate) return cmd_generate(gen, out);
        if (*predict) return cmd_predict(pred, out);
        if (*evaluate) return cmd_evaluate(ev, out);
        if (*rpt) return cmd_report(rep, out);
    } catch (const IllConditionedError& e) {
        err << "stigp: numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const IntegrationError& e) {
        err << "stigp: integration failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const Error& e) {
        err << "stigp: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace stigp::cli
