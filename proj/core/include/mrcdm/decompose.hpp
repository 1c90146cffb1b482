#pragma once

#include <array>
#include <cstddef>

#include "mrcdm/timeseries.hpp"

namespace mrcdm {

/// Default moving-average window sizes (hours): roughly 5 h, 1 day, 2 days.
inline constexpr std::array<std::size_t, 3> kDefaultTrendWindows{5, 25, 51};

/// The four decomposed series. Construction is telescoping, so
/// trend1 + trend2 + trend3 + residual recomposes the input exactly:
///   residual = x - MA5      (high-frequency)
///   trend1   = MA5 - MA25   (short-term band)
///   trend2   = MA25 - MA51  (medium-term band)
///   trend3   = MA51         (long-term trend)
struct TrendComponents {
    TimeSeries trend1;
    TimeSeries trend2;
    TimeSeries trend3;
    TimeSeries residual;
    std::array<std::size_t, 3> windows = kDefaultTrendWindows;
};

/// Centered moving average with replicate (edge-value) padding of (w-1)/2 on
/// each side; output length equals input length. w must be odd and <= L.
TimeSeries moving_average(const TimeSeries& x, std::size_t w);

/// Three-level multi-scale decomposition on the raw input. Requires
/// L >= max window.
TrendComponents decompose(const TimeSeries& x,
                          const std::array<std::size_t, 3>& windows = kDefaultTrendWindows);

/// Elementwise sum of the four components.
TimeSeries recompose(const TrendComponents& c);

}  // namespace mrcdm
