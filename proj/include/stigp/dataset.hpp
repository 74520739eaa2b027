#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stigp/linalg.hpp"

namespace stigp {

/// N variables observed at T time points. `values` is variable-major (N x T),
/// so column t is the snapshot X(t). `missing` is either empty (fully observed)
/// or N x T with true marking an unobserved cell; the value stored in a
/// missing cell is meaningless.
struct Dataset {
    Matrix values;
    std::vector<std::string> variable_names;
    std::vector<double> time_stamps;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;

    std::size_t num_variables() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t num_times() const { return static_cast<std::size_t>(values.cols()); }
    bool has_missing() const { return missing.size() > 0 && missing.any(); }
    std::size_t missing_count() const { return missing.size() ? static_cast<std::size_t>(missing.count()) : 0; }

    /// Index of the variable called `name`, or -1.
    long find_variable(const std::string& name) const;

    /// Throws InvalidArgument unless N >= 1, T >= 2, names and stamps match the
    /// matrix shape and stamps strictly increase.
    void validate() const;

    /// Builds a dataset with names v1..vN and stamps 0..T-1.
    static Dataset from_matrix(Matrix values);
};

}  // namespace stigp

namespace stigp::data {

enum class SystemKind { lorenz, pendulum };

/// Parameters of a synthetic coupled-oscillator system.
struct SystemSpec {
    SystemKind kind = SystemKind::lorenz;
    std::size_t n_units = 30;
    std::size_t steps = 200;  // recorded samples (T)
    double dt = 0.01;
    std::size_t sample_every = 5;
    double coupling = 0.1;
    // Per recorded sample; the drifting parameter is constant during the transient.
    double drift_rate = 0.02;
    std::size_t transient = 2000;
    std::uint64_t seed = 0;
    // Optional perturbation of one initial-state coordinate (twin-run experiments).
    std::size_t perturb_index = 0;
    double perturb = 0.0;

    void validate() const;

    static SystemSpec lorenz_defaults();
    static SystemSpec pendulum_defaults();
};

/// Ring of Lorenz oscillators, variables x1,y1,z1,x2,... (N = 3 n_units):
///   x_i' = s (y_i - x_i) + C x_{i-1},  y_i' = x_i (rho(t) - z_i) - y_i,  z_i' = x_i y_i - b z_i
/// with s = 10, b = 8/3, rho(t) = 28 + drift_rate t. Fixed-step RK4.
Dataset gen_lorenz(const SystemSpec& spec);

/// Ring of damped pendulums, variables theta1,omega1,... (N = 2 n_units):
///   theta_i' = omega_i
///   omega_i' = -(g/l) sin theta_i - gamma(t) omega_i + C (theta_{i+1} - 2 theta_i + theta_{i-1})
/// with g/l = 9.8, gamma(t) = 0.05 + drift_rate t. Fixed-step RK4.
Dataset gen_pendulum(const SystemSpec& spec);

Dataset generate(const SystemSpec& spec);

/// Adds i.i.d. N(0, noise_std^2) to every cell.
Dataset add_noise(const Dataset& dataset, double noise_std, std::uint64_t seed);

/// Centered moving average per variable; windows are truncated at the ends.
Dataset smooth(const Dataset& dataset, std::size_t window);

/// Linear interpolation in time between observed neighbours, nearest-value
/// extension at the ends. Clears the missing mask.
Dataset impute(const Dataset& dataset);

/// CSV: header `t,<name1>,...,<nameN>`, one row per time point, empty field = missing.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text);
std::string format_csv(const Dataset& dataset);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// FNV-1a digest over names, stamps, values and missing flags.
std::string digest(const Dataset& dataset);

}  // namespace stigp::data
