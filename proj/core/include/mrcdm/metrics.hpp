#pragma once

#include <cstddef>

#include "mrcdm/timeseries.hpp"

namespace mrcdm {

struct MetricReport {
    double mse = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n_windows = 0;
};

/// Pointwise error metrics over equal-length series.
MetricReport compute_metrics(const TimeSeries& pred, const TimeSeries& truth);

/// Average of per-window reports; rmse is recomputed as sqrt(mean mse).
MetricReport average_reports(const std::vector<MetricReport>& reports);

}  // namespace mrcdm
