#pragma once

#include <array>
#include <cstddef>

#include "mrcdm/rng.hpp"
#include "mrcdm/timeseries.hpp"

namespace mrcdm {

/// ARIMA(2,1,2) fitted by conditional sum of squares on the once-differenced
/// series. Estimation runs a Nelder-Mead simplex from zero initialization in
/// a transformed space that keeps the AR polynomial stationary and the MA
/// polynomial invertible, so forecasts stay finite for any finite input.
struct ArimaModel {
    std::array<double, 2> ar{0.0, 0.0};
    std::array<double, 2> ma{0.0, 0.0};
    double intercept = 0.0;
    double sigma2 = 0.0;
    bool converged = false;
    bool degenerate = false;  ///< zero-variance differenced series
};

struct ArimaForecast {
    TimeSeries point;
    TimeSeries std_band;  ///< per-step innovation std from Monte Carlo draws
};

/// Fit on a training segment (length >= 50). Parameter tolerance 1e-6,
/// at most 2000 simplex iterations; non-convergence returns the best-found
/// parameters with converged = false.
ArimaModel arima_fit(const TimeSeries& train);

/// Point path iterates the recursion with zero future innovations; the band
/// is the per-step std over `draws` Monte Carlo innovation paths. History is
/// filtered through the model to obtain the launch state, then levels are
/// rebuilt by undifferencing.
ArimaForecast arima_forecast(const ArimaModel& m, const TimeSeries& history, std::size_t horizon,
                             Rng& rng, std::size_t draws = 100);

/// Persistence control: repeats the last observed value.
TimeSeries naive_last(const TimeSeries& history, std::size_t horizon);

/// Repeats the last full seasonal period (default: daily cycle).
TimeSeries seasonal_naive(const TimeSeries& history, std::size_t horizon, std::size_t period = 24);

}  // namespace mrcdm
