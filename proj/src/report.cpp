#include "stigp/report.hpp"

#include <cstdio>
#include <sstream>

#include "stigp/error.hpp"
#include "stigp/io.hpp"

namespace stigp::report {

using nlohmann::json;

namespace {

json theta_json(const gp::KernelParams& theta) {
    json out;
    out["signal_var"] = theta.signal_var;
    if (theta.ard()) {
        out["length_scale"] = std::vector<double>(theta.length_scales.data(),
                                                  theta.length_scales.data() + theta.length_scales.size());
    } else {
        out["length_scale"] = theta.length_scales[0];
    }
    out["noise_var"] = theta.noise_var;
    return out;
}

template <class T>
T required(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) throw ParseError(std::string("forecast json: missing field '") + key + "'", 0);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("forecast json: bad field '") + key + "': " + e.what(), 0);
    }
}

}  // namespace

json forecast_to_json(const forecast::Forecast& forecast, const std::string& target_name,
                      const json& manifest) {
    json doc;
    doc["schema"] = kSchemaVersion;
    doc["target"] = target_name;
    doc["train_len"] = forecast.train_len;
    doc["horizon"] = forecast.horizon();

    json steps = json::array();
    for (const auto& s : forecast.steps) {
        steps.push_back({{"t", s.t},
                         {"mean", s.mean},
                         {"dispersion", s.dispersion},
                         {"mean_variance", s.mean_variance},
                         {"contributors", s.contributors}});
    }
    doc["steps"] = std::move(steps);

    json raw = json::array();
    for (const auto& r : forecast.raw)
        raw.push_back({{"row_l", r.row}, {"t", forecast.train_len + r.step}, {"mean", r.mean}, {"variance", r.variance}});
    doc["raw"] = std::move(raw);

    json blocks = json::array();
    for (const auto& b : forecast.blocks) {
        std::vector<double> diag(static_cast<std::size_t>(b.coreg.rows()));
        for (Eigen::Index i = 0; i < b.coreg.rows(); ++i) diag[static_cast<std::size_t>(i)] = b.coreg(i, i);
        blocks.push_back({{"rows", b.rows},
                          {"nlml", -b.log_likelihood},
                          {"restart", b.restart},
                          {"theta", theta_json(b.theta)},
                          {"coreg_diag", diag}});
    }
    doc["blocks"] = std::move(blocks);
    doc["manifest"] = manifest;
    return doc;
}

json block_summaries(const forecast::Forecast& forecast) {
    json out = json::array();
    for (const auto& b : forecast.blocks)
        out.push_back({{"block", b.block_index},
                       {"rows", b.rows},
                       {"nlml", -b.log_likelihood},
                       {"iterations", b.iterations},
                       {"restart", b.restart},
                       {"converged", b.converged}});
    return out;
}

ForecastDoc forecast_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("forecast json: top level is not an object", 0);
    const int schema = required<int>(doc, "schema");
    if (schema != kSchemaVersion)
        throw ParseError("forecast json: unsupported schema " + std::to_string(schema), 0);
    ForecastDoc out;
    out.target = required<std::string>(doc, "target");
    out.train_len = required<std::size_t>(doc, "train_len");
    out.horizon = required<std::size_t>(doc, "horizon");
    const json steps = required<json>(doc, "steps");
    if (!steps.is_array()) throw ParseError("forecast json: 'steps' is not an array", 0);
    for (const json& s : steps) {
        forecast::StepForecast step;
        step.t = required<std::size_t>(s, "t");
        step.mean = required<double>(s, "mean");
        step.dispersion = required<double>(s, "dispersion");
        step.mean_variance = required<double>(s, "mean_variance");
        step.contributors = required<std::size_t>(s, "contributors");
        if (step.t <= out.train_len) throw ParseError("forecast json: step inside the training window", 0);
        step.step = step.t - out.train_len;
        out.steps.push_back(step);
    }
    if (out.steps.size() != out.horizon)
        throw ParseError("forecast json: step count does not match horizon", 0);
    for (std::size_t k = 0; k < out.steps.size(); ++k)
        if (out.steps[k].step != k + 1) throw ParseError("forecast json: steps out of order", 0);
    return out;
}

json metrics_to_json(const eval::MetricReport& report) {
    json out;
    out["mae"] = report.mae;
    out["rmse"] = report.rmse;
    out["pcc"] = report.pcc ? json(*report.pcc) : json(nullptr);
    out["horizon"] = report.horizon;
    out["per_step_abs_err"] = report.per_step_abs_err;
    return out;
}

std::string metrics_table(const std::vector<std::pair<std::string, eval::MetricReport>>& rows) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %14s %14s %10s\n", "method", "MAE", "RMSE", "PCC");
    os << line;
    for (const auto& [name, r] : rows) {
        char pcc[32];
        if (r.pcc)
            std::snprintf(pcc, sizeof(pcc), "%10.4f", *r.pcc);
        else
            std::snprintf(pcc, sizeof(pcc), "%10s", "n/a");
        std::snprintf(line, sizeof(line), "%-14s %14.6g %14.6g %s\n", name.c_str(), r.mae, r.rmse, pcc);
        os << line;
    }
    return os.str();
}

std::string plot_data_csv(const ForecastDoc& doc, const Dataset& history, const std::optional<Dataset>& truth) {
    const long hist_index = history.find_variable(doc.target);
    if (hist_index < 0) throw InvalidArgument("report: target '" + doc.target + "' not found in data file");
    if (history.num_times() < doc.train_len)
        throw InvalidArgument("report: data file is shorter than the training window");
    long truth_index = -1;
    if (truth) {
        truth_index = truth->find_variable(doc.target);
        if (truth_index < 0) throw InvalidArgument("report: target '" + doc.target + "' not found in truth file");
    }
    auto cell = [](const Dataset& d, long var, std::size_t col) -> std::string {
        const auto i = static_cast<Eigen::Index>(var);
        const auto t = static_cast<Eigen::Index>(col);
        if (d.missing.size() > 0 && d.missing(i, t)) return "";
        return io::format_double(d.values(i, t));
    };

    std::string out = "t,truth,predicted,dispersion,split\n";
    for (std::size_t t = 1; t <= doc.train_len; ++t)
        out += std::to_string(t) + "," + cell(history, hist_index, t - 1) + ",,,train\n";
    for (const auto& s : doc.steps) {
        std::string truth_cell;
        if (truth && s.t <= truth->num_times()) truth_cell = cell(*truth, truth_index, s.t - 1);
        out += std::to_string(s.t) + "," + truth_cell + "," + io::format_double(s.mean) + "," +
               io::format_double(s.dispersion) + ",forecast\n";
    }
    return out;
}

}  // namespace stigp::report
