#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace mrcdm {

/// Ordered real-valued samples with sampling metadata. The universal carrier
/// between pipeline stages; values are in dataset-native units unless a
/// Normalizer has been applied.
struct TimeSeries {
    std::vector<double> values;
    /// true where the value was observed (false = missing).
    std::vector<std::uint8_t> observed;
    /// Sampling interval in hours (1.0 for ETT-like data).
    double step_hours = 1.0;

    TimeSeries() = default;
    explicit TimeSeries(std::vector<double> v, double step = 1.0);
    TimeSeries(std::vector<double> v, std::vector<std::uint8_t> obs, double step = 1.0);

    std::size_t length() const { return values.size(); }
    bool fully_observed() const;

    TimeSeries slice(std::size_t begin, std::size_t count) const;
};

/// Chronological split fractions; must sum to 1 within 1e-9.
struct SplitSpec {
    double train_frac = 0.7;
    double val_frac = 0.1;
    double test_frac = 0.2;
};

/// Z-score statistics fitted on a training segment (population denominator).
struct Normalizer {
    double mean = 0.0;
    double std = 1.0;
};

/// Fills missing samples: interior gaps by linear interpolation between the
/// nearest observed neighbours, leading/trailing gaps by constant extension.
/// Throws DataError when fewer than two samples are observed.
TimeSeries interpolate_missing(const TimeSeries& series);

/// Clamps values outside [mean-3*std, mean+3*std] to the nearest bound, using
/// the statistics of the input segment (single pass, population std). A
/// zero-variance series is returned unchanged.
TimeSeries clip_outliers_3sigma(const TimeSeries& series);

/// Population mean/std of the training segment. Throws DataError on length
/// < 2 or zero variance.
Normalizer fit_normalizer(const TimeSeries& train);

TimeSeries normalize(const TimeSeries& series, const Normalizer& n);
TimeSeries denormalize(const TimeSeries& series, const Normalizer& n);

/// Contiguous order-preserving split. train and val get floor(L*frac)
/// samples, the remainder goes to test.
struct Splits {
    TimeSeries train;
    TimeSeries val;
    TimeSeries test;
};
Splits chronological_split(const TimeSeries& series, const SplitSpec& spec);

/// One (history, target) training/evaluation pair.
struct Window {
    TimeSeries history;
    TimeSeries target;
    std::size_t start = 0;  ///< index of the first history sample
};

/// Sliding (history, target) extraction: pair t is
/// (x[t-seq_len, t), x[t, t+horizon)) with t advancing by stride.
/// Count = floor((L - seq_len - horizon) / stride) + 1.
std::vector<Window> make_windows(const TimeSeries& series, std::size_t seq_len,
                                 std::size_t horizon, std::size_t stride);

/// Population statistics helpers shared across modules.
double series_mean(const std::vector<double>& v);
double series_population_std(const std::vector<double>& v);

}  // namespace mrcdm
