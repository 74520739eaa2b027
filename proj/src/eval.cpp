#include "stigp/eval.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

#include "stigp/error.hpp"

namespace stigp::eval {

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidArgument("pearson: length mismatch");
    if (a.size() < 2) throw InvalidArgument("pearson: need at least two points");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    // Rounding in the mean leaves a constant series with a tiny nonzero spread;
    // treat anything at that level as zero variance.
    auto flat = [n](const std::vector<double>& v, double ss) {
        double scale = 0.0;
        for (double x : v) scale = std::max(scale, std::abs(x));
        const double tol = 64.0 * std::numeric_limits<double>::epsilon() * scale;
        return !(ss > n * tol * tol);
    };
    if (flat(a, saa) || flat(b, sbb)) return std::nullopt;
    const double r = sab / std::sqrt(saa * sbb);
    return std::clamp(r, -1.0, 1.0);
}

MetricReport metrics(const std::vector<double>& truth, const std::vector<double>& predicted) {
    if (truth.size() != predicted.size()) throw InvalidArgument("metrics: truth and prediction lengths differ");
    if (truth.size() < 2) throw InvalidArgument("metrics: need at least two points");
    MetricReport r;
    r.horizon = truth.size();
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = predicted[i] - truth[i];
        r.per_step_abs_err.push_back(std::abs(e));
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    const double n = static_cast<double>(truth.size());
    r.mae = abs_sum / n;
    r.rmse = std::sqrt(sq_sum / n);
    r.pcc = pearson(truth, predicted);
    return r;
}

std::vector<double> baseline_persistence(const std::vector<double>& train_targets, std::size_t horizon) {
    if (train_targets.empty()) throw InvalidArgument("persistence: no training values");
    return std::vector<double>(horizon, train_targets.back());
}

std::vector<double> baseline_drift(const std::vector<double>& train_targets, std::size_t horizon) {
    if (train_targets.size() < 2) throw InvalidArgument("drift: need at least two training values");
    const double last = train_targets.back();
    const double slope = (last - train_targets.front()) / static_cast<double>(train_targets.size() - 1);
    std::vector<double> out(horizon);
    for (std::size_t h = 0; h < horizon; ++h) out[h] = last + slope * static_cast<double>(h + 1);
    return out;
}

}  // namespace stigp::eval
