#include "mrcdm/metrics.hpp"

#include <cmath>
#include <string>

#include "mrcdm/errors.hpp"

namespace mrcdm {

MetricReport compute_metrics(const TimeSeries& pred, const TimeSeries& truth) {
    if (pred.length() != truth.length())
        throw DataError("compute_metrics: length mismatch " + std::to_string(pred.length()) +
                        " vs " + std::to_string(truth.length()));
    if (pred.length() == 0) throw DataError("compute_metrics: empty series");

    double se = 0.0, ae = 0.0;
    for (std::size_t t = 0; t < pred.length(); ++t) {
        const double e = pred.values[t] - truth.values[t];
        se += e * e;
        ae += std::abs(e);
    }
    const auto n = static_cast<double>(pred.length());
    MetricReport r;
    r.mse = se / n;
    r.mae = ae / n;
    r.rmse = std::sqrt(r.mse);
    r.n_windows = 1;
    return r;
}

MetricReport average_reports(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw DataError("average_reports: no reports");
    MetricReport out;
    for (const auto& r : reports) {
        out.mse += r.mse;
        out.mae += r.mae;
        out.n_windows += r.n_windows;
    }
    out.mse /= static_cast<double>(reports.size());
    out.mae /= static_cast<double>(reports.size());
    out.rmse = std::sqrt(out.mse);
    return out;
}

}  // namespace mrcdm
