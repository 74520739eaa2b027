#include "stigp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string_view>

#include "stigp/error.hpp"
#include "stigp/io.hpp"

namespace stigp {

long Dataset::find_variable(const std::string& name) const {
    const auto it = std::find(variable_names.begin(), variable_names.end(), name);
    return it == variable_names.end() ? -1 : static_cast<long>(it - variable_names.begin());
}

void Dataset::validate() const {
    if (values.rows() < 1) throw InvalidArgument("dataset: need at least one variable");
    if (values.cols() < 2) throw InvalidArgument("dataset: need at least two time points");
    if (variable_names.size() != num_variables())
        throw InvalidArgument("dataset: variable name count does not match N");
    if (time_stamps.size() != num_times())
        throw InvalidArgument("dataset: time stamp count does not match T");
    for (std::size_t t = 1; t < time_stamps.size(); ++t)
        if (!(time_stamps[t] > time_stamps[t - 1]))
            throw InvalidArgument("dataset: time stamps must strictly increase");
    if (missing.size() != 0 && (missing.rows() != values.rows() || missing.cols() != values.cols()))
        throw InvalidArgument("dataset: missing mask shape does not match values");
}

Dataset Dataset::from_matrix(Matrix values) {
    Dataset d;
    d.values = std::move(values);
    for (Eigen::Index i = 0; i < d.values.rows(); ++i) d.variable_names.push_back("v" + std::to_string(i + 1));
    for (Eigen::Index t = 0; t < d.values.cols(); ++t) d.time_stamps.push_back(static_cast<double>(t));
    return d;
}

}  // namespace stigp

namespace stigp::data {

namespace {

using State = Eigen::VectorXd;

template <class Deriv>
void rk4_step(State& s, double t, double h, const Deriv& f) {
    const State k1 = f(s, t);
    const State k2 = f(s + 0.5 * h * k1, t + 0.5 * h);
    const State k3 = f(s + 0.5 * h * k2, t + 0.5 * h);
    const State k4 = f(s + h * k3, t + h);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrates, discards the transient and records every `sample_every`-th state.
// The derivative receives the drift clock: recorded samples elapsed, 0 during
// the transient.
template <class Deriv>
Matrix integrate(const SystemSpec& spec, State state, const Deriv& f) {
    const long total = static_cast<long>(spec.transient + (spec.steps - 1) * spec.sample_every);
    Matrix out(state.size(), static_cast<Eigen::Index>(spec.steps));
    const double per_step = 1.0 / static_cast<double>(spec.sample_every);
    auto clock = [&](long step) {
        return step <= static_cast<long>(spec.transient)
                   ? 0.0
                   : static_cast<double>(step - static_cast<long>(spec.transient)) * per_step;
    };
    Eigen::Index recorded = 0;
    for (long step = 0;; ++step) {
        if (step >= static_cast<long>(spec.transient) &&
            (step - static_cast<long>(spec.transient)) % static_cast<long>(spec.sample_every) == 0) {
            out.col(recorded++) = state;
            if (recorded == out.cols()) break;
        }
        if (step >= total) break;
        // RK4 stages sit at fractions 0, 1/2, 1 of the step; the drift clock follows.
        const double c0 = clock(step);
        const double c1 = clock(step + 1);
        rk4_step(state, 0.0, 1.0, [&](const State& s, double frac) {
            return State(spec.dt * f(s, c0 + frac * (c1 - c0)));
        });
        if (!state.allFinite()) throw IntegrationError("non-finite state", step + 1);
    }
    return out;
}

std::vector<double> index_stamps(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i);
    return t;
}

}  // namespace

void SystemSpec::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("system: dt must be positive");
    if (n_units < 2) throw InvalidArgument("system: need at least two units");
    if (steps < 2) throw InvalidArgument("system: need at least two recorded steps");
    if (sample_every < 1) throw InvalidArgument("system: sample_every must be at least 1");
    if (!std::isfinite(coupling) || !std::isfinite(drift_rate))
        throw InvalidArgument("system: coupling and drift_rate must be finite");
    const std::size_t dim = kind == SystemKind::lorenz ? 3 * n_units : 2 * n_units;
    if (perturb != 0.0 && perturb_index >= dim) throw InvalidArgument("system: perturb_index out of range");
}

SystemSpec SystemSpec::lorenz_defaults() { return SystemSpec{}; }

SystemSpec SystemSpec::pendulum_defaults() {
    SystemSpec s;
    s.kind = SystemKind::pendulum;
    s.n_units = 32;
    s.coupling = 0.5;
    s.drift_rate = 0.0005;
    return s;
}

Dataset gen_lorenz(const SystemSpec& spec) {
    if (spec.kind != SystemKind::lorenz) throw InvalidArgument("gen_lorenz: spec is not a Lorenz system");
    spec.validate();
    const std::size_t n = spec.n_units;
    constexpr double sigma = 10.0;
    constexpr double beta = 8.0 / 3.0;

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    State init(3 * n);
    for (Eigen::Index i = 0; i < init.size(); ++i) init[i] = unit(rng);
    if (spec.perturb != 0.0) init[static_cast<Eigen::Index>(spec.perturb_index)] += spec.perturb;

    const auto deriv = [&](const State& s, double clock) {
        const double rho = 28.0 + spec.drift_rate * clock;
        State d(s.size());
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t prev = (i + n - 1) % n;
            const double x = s[3 * i], y = s[3 * i + 1], z = s[3 * i + 2];
            d[3 * i] = sigma * (y - x) + spec.coupling * s[3 * prev];
            d[3 * i + 1] = x * (rho - z) - y;
            d[3 * i + 2] = x * y - beta * z;
        }
        return d;
    };

    Dataset out;
    out.values = integrate(spec, init, deriv);
    for (std::size_t i = 1; i <= n; ++i)
        for (const char* c : {"x", "y", "z"}) out.variable_names.push_back(c + std::to_string(i));
    out.time_stamps = index_stamps(spec.steps);
    return out;
}

Dataset gen_pendulum(const SystemSpec& spec) {
    if (spec.kind != SystemKind::pendulum)
        throw InvalidArgument("gen_pendulum: spec is not a pendulum system");
    spec.validate();
    const std::size_t n = spec.n_units;
    constexpr double g_over_l = 9.8;

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> angle(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
    State init = State::Zero(2 * n);
    for (std::size_t i = 0; i < n; ++i) init[2 * i] = angle(rng);
    if (spec.perturb != 0.0) init[static_cast<Eigen::Index>(spec.perturb_index)] += spec.perturb;

    const auto deriv = [&](const State& s, double clock) {
        const double gamma = 0.05 + spec.drift_rate * clock;
        State d(s.size());
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t prev = (i + n - 1) % n;
            const std::size_t next = (i + 1) % n;
            const double theta = s[2 * i], omega = s[2 * i + 1];
            d[2 * i] = omega;
            d[2 * i + 1] = -g_over_l * std::sin(theta) - gamma * omega +
                           spec.coupling * (s[2 * next] - 2.0 * theta + s[2 * prev]);
        }
        return d;
    };

    Dataset out;
    out.values = integrate(spec, init, deriv);
    for (std::size_t i = 1; i <= n; ++i) {
        out.variable_names.push_back("theta" + std::to_string(i));
        out.variable_names.push_back("omega" + std::to_string(i));
    }
    out.time_stamps = index_stamps(spec.steps);
    return out;
}

Dataset generate(const SystemSpec& spec) {
    return spec.kind == SystemKind::lorenz ? gen_lorenz(spec) : gen_pendulum(spec);
}

Dataset add_noise(const Dataset& dataset, double noise_std, std::uint64_t seed) {
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
        throw InvalidArgument("add_noise: noise_std must be finite and non-negative");
    Dataset out = dataset;
    if (noise_std == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    for (Eigen::Index t = 0; t < out.values.cols(); ++t)
        for (Eigen::Index i = 0; i < out.values.rows(); ++i) out.values(i, t) += noise(rng);
    return out;
}

Dataset smooth(const Dataset& dataset, std::size_t window) {
    const std::size_t t_count = dataset.num_times();
    if (window < 1 || window > t_count)
        throw InvalidArgument("smooth: window must lie in [1, T]");
    Dataset out = dataset;
    if (window == 1) return out;
    const bool masked = dataset.missing.size() > 0;
    const std::size_t left = (window - 1) / 2;
    const std::size_t right = window / 2;
    for (Eigen::Index i = 0; i < dataset.values.rows(); ++i) {
        for (std::size_t t = 0; t < t_count; ++t) {
            const std::size_t lo = t >= left ? t - left : 0;
            const std::size_t hi = std::min(t_count - 1, t + right);
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t s = lo; s <= hi; ++s) {
                const auto col = static_cast<Eigen::Index>(s);
                if (masked && dataset.missing(i, col)) continue;
                sum += dataset.values(i, col);
                ++count;
            }
            const auto col = static_cast<Eigen::Index>(t);
            if (count == 0) continue;  // stays missing
            out.values(i, col) = sum / static_cast<double>(count);
            if (masked) out.missing(i, col) = false;
        }
    }
    return out;
}

Dataset impute(const Dataset& dataset) {
    Dataset out = dataset;
    if (dataset.missing.size() == 0) return out;
    const Eigen::Index t_count = dataset.values.cols();
    for (Eigen::Index i = 0; i < dataset.values.rows(); ++i) {
        std::vector<Eigen::Index> seen;
        for (Eigen::Index t = 0; t < t_count; ++t)
            if (!dataset.missing(i, t)) seen.push_back(t);
        if (seen.empty())
            throw InvalidArgument("impute: variable '" + dataset.variable_names.at(static_cast<std::size_t>(i)) +
                                  "' has no observed values");
        std::size_t k = 0;
        for (Eigen::Index t = 0; t < t_count; ++t) {
            if (!dataset.missing(i, t)) continue;
            while (k < seen.size() && seen[k] < t) ++k;
            if (k == 0) {
                out.values(i, t) = dataset.values(i, seen.front());
            } else if (k == seen.size()) {
                out.values(i, t) = dataset.values(i, seen.back());
            } else {
                const Eigen::Index a = seen[k - 1], b = seen[k];
                const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
                out.values(i, t) = (1.0 - w) * dataset.values(i, a) + w * dataset.values(i, b);
            }
        }
    }
    out.missing.resize(0, 0);
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_number(std::string_view field, double& value) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    return res.ec == std::errc() && res.ptr == field.data() + field.size() && std::isfinite(value);
}

}  // namespace

Dataset parse_csv(const std::string& text) {
    std::vector<std::string_view> lines;
    {
        std::string_view rest(text);
        while (!rest.empty()) {
            const std::size_t nl = rest.find('\n');
            lines.push_back(rest.substr(0, nl));
            if (nl == std::string_view::npos) break;
            rest.remove_prefix(nl + 1);
        }
    }
    std::size_t first = 0;
    // Skip a UTF-8 byte-order mark.
    if (!lines.empty() && lines[0].substr(0, 3) == "\xEF\xBB\xBF") lines[0].remove_prefix(3);
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    if (first == lines.size()) throw ParseError("csv: empty input", 0);

    const auto header = split(lines[first]);
    if (header.size() < 2) throw ParseError("csv: header needs a time column and at least one variable", first + 1);
    Dataset d;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty()) throw ParseError("csv: empty variable name in header", first + 1);
        d.variable_names.emplace_back(header[c]);
    }
    const std::size_t n = d.variable_names.size();

    std::vector<std::vector<double>> rows;
    std::vector<std::vector<bool>> holes;
    bool any_missing = false;
    for (std::size_t li = first + 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const std::size_t line_no = li + 1;
        const auto fields = split(lines[li]);
        if (fields.size() != header.size())
            throw ParseError("csv: row has " + std::to_string(fields.size()) + " fields, header has " +
                                 std::to_string(header.size()),
                             line_no);
        double stamp = 0.0;
        if (!parse_number(fields[0], stamp)) throw ParseError("csv: invalid time value", line_no);
        if (!d.time_stamps.empty() && !(stamp > d.time_stamps.back()))
            throw ParseError("csv: time column is not strictly increasing", line_no);
        d.time_stamps.push_back(stamp);
        std::vector<double> row(n, 0.0);
        std::vector<bool> hole(n, false);
        for (std::size_t c = 0; c < n; ++c) {
            const auto field = fields[c + 1];
            if (field.empty()) {
                hole[c] = true;
                any_missing = true;
                continue;
            }
            if (!parse_number(field, row[c]))
                throw ParseError("csv: non-numeric value '" + std::string(field) + "' in column " +
                                     d.variable_names[c],
                                 line_no);
        }
        rows.push_back(std::move(row));
        holes.push_back(std::move(hole));
    }

    const auto t_count = static_cast<Eigen::Index>(rows.size());
    d.values.resize(static_cast<Eigen::Index>(n), t_count);
    if (any_missing) d.missing.setConstant(static_cast<Eigen::Index>(n), t_count, false);
    for (Eigen::Index t = 0; t < t_count; ++t)
        for (std::size_t c = 0; c < n; ++c) {
            const auto i = static_cast<Eigen::Index>(c);
            d.values(i, t) = rows[static_cast<std::size_t>(t)][c];
            if (any_missing) d.missing(i, t) = holes[static_cast<std::size_t>(t)][c];
        }
    try {
        d.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("csv: ") + e.what(), 0);
    }
    return d;
}

Dataset load_csv(const std::filesystem::path& path) {
    try {
        return parse_csv(io::read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
}

std::string format_csv(const Dataset& dataset) {
    dataset.validate();
    for (const auto& name : dataset.variable_names)
        if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos)
            throw InvalidArgument("csv: variable name '" + name + "' contains a separator");
    std::string out = "t";
    for (const auto& name : dataset.variable_names) out += "," + name;
    out += '\n';
    const bool masked = dataset.missing.size() > 0;
    for (Eigen::Index t = 0; t < dataset.values.cols(); ++t) {
        out += io::format_double(dataset.time_stamps[static_cast<std::size_t>(t)]);
        for (Eigen::Index i = 0; i < dataset.values.rows(); ++i) {
            out += ',';
            if (!(masked && dataset.missing(i, t))) out += io::format_double(dataset.values(i, t));
        }
        out += '\n';
    }
    return out;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    io::write_file_atomic(path, format_csv(dataset));
}

std::string digest(const Dataset& dataset) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : format_csv(dataset)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace stigp::data
