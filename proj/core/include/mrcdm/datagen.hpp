#pragma once

#include <cstdint>
#include <vector>

#include "mrcdm/timeseries.hpp"

namespace mrcdm {

/// Synthetic ETT-like load series: daily and weekly sinusoids with seeded
/// phases, a linear trend, a multiplicative daytime boost over hours 8-20,
/// and Gaussian noise, affinely rescaled to the target mean/std.
struct SynthConfig {
    std::size_t n_points = 17420;
    std::uint64_t seed = 42;
    double target_mean = 8.0;
    double target_std = 2.0;
    double amp_daily = 1.0;
    double amp_weekly = 0.4;
    double trend_slope = 5e-5;  ///< per hour, before rescaling
    double noise_std = 0.45;
    double daytime_boost = 1.2;
    double missing_frac = 0.0;  ///< random drop mask for ingestion tests
};

TimeSeries synthesize(const SynthConfig& cfg);

/// Base channel plus k_extra channels sharing the standardized base signal
/// with weight rho and independent noise with weight sqrt(1-rho^2).
std::vector<TimeSeries> synthesize_correlated(const SynthConfig& cfg, std::size_t k_extra,
                                              double rho);

}  // namespace mrcdm
