#include "mrcdm/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "mrcdm/errors.hpp"

namespace mrcdm {

TimeSeries::TimeSeries(std::vector<double> v, double step)
    : values(std::move(v)), observed(values.size(), 1), step_hours(step) {}

TimeSeries::TimeSeries(std::vector<double> v, std::vector<std::uint8_t> obs, double step)
    : values(std::move(v)), observed(std::move(obs)), step_hours(step) {
    if (values.size() != observed.size())
        throw DataError("TimeSeries: values and observed mask differ in length");
}

bool TimeSeries::fully_observed() const {
    return std::all_of(observed.begin(), observed.end(), [](std::uint8_t o) { return o != 0; });
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t count) const {
    if (begin + count > values.size()) throw DataError("TimeSeries::slice out of range");
    TimeSeries out;
    out.values.assign(values.begin() + begin, values.begin() + begin + count);
    out.observed.assign(observed.begin() + begin, observed.begin() + begin + count);
    out.step_hours = step_hours;
    return out;
}

double series_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double series_population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = series_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

TimeSeries interpolate_missing(const TimeSeries& series) {
    const std::size_t n = series.length();
    std::vector<std::size_t> obs_idx;
    obs_idx.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (series.observed[i] && std::isfinite(series.values[i])) obs_idx.push_back(i);
    }
    if (obs_idx.size() < 2)
        throw DataError("interpolate_missing: need at least two observed samples, got " +
                        std::to_string(obs_idx.size()));

    TimeSeries out = series;
    // Leading/trailing gaps: constant extension.
    for (std::size_t i = 0; i < obs_idx.front(); ++i) out.values[i] = series.values[obs_idx.front()];
    for (std::size_t i = obs_idx.back() + 1; i < n; ++i) out.values[i] = series.values[obs_idx.back()];
    // Interior gaps: linear between nearest observed neighbours.
    for (std::size_t k = 0; k + 1 < obs_idx.size(); ++k) {
        const std::size_t a = obs_idx[k];
        const std::size_t b = obs_idx[k + 1];
        const double ya = series.values[a];
        const double yb = series.values[b];
        for (std::size_t i = a + 1; i < b; ++i) {
            const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
            out.values[i] = ya + t * (yb - ya);
        }
    }
    std::fill(out.observed.begin(), out.observed.end(), std::uint8_t{1});
    return out;
}

TimeSeries clip_outliers_3sigma(const TimeSeries& series) {
    if (!series.fully_observed())
        throw DataError("clip_outliers_3sigma: series must be fully observed");
    const double mean = series_mean(series.values);
    const double std = series_population_std(series.values);
    if (std <= 1e-12 * std::max(1.0, std::abs(mean))) return series;  // no outliers definable

    const double lo = mean - 3.0 * std;
    const double hi = mean + 3.0 * std;
    TimeSeries out = series;
    for (double& x : out.values) x = std::clamp(x, lo, hi);
    return out;
}

Normalizer fit_normalizer(const TimeSeries& train) {
    if (train.length() < 2) throw DataError("fit_normalizer: need at least two samples");
    const double mean = series_mean(train.values);
    const double std = series_population_std(train.values);
    if (std <= 1e-12 * std::max(1.0, std::abs(mean)))
        throw DataError("fit_normalizer: zero-variance training segment");
    return Normalizer{mean, std};
}

TimeSeries normalize(const TimeSeries& series, const Normalizer& n) {
    TimeSeries out = series;
    for (double& x : out.values) x = (x - n.mean) / n.std;
    return out;
}

TimeSeries denormalize(const TimeSeries& series, const Normalizer& n) {
    TimeSeries out = series;
    for (double& x : out.values) x = x * n.std + n.mean;
    return out;
}

Splits chronological_split(const TimeSeries& series, const SplitSpec& spec) {
    const double sum = spec.train_frac + spec.val_frac + spec.test_frac;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("chronological_split: fractions sum to " + std::to_string(sum));
    if (spec.train_frac <= 0 || spec.val_frac <= 0 || spec.test_frac <= 0)
        throw ConfigError("chronological_split: fractions must be in (0,1)");

    const std::size_t n = series.length();
    const auto n_train = static_cast<std::size_t>(static_cast<double>(n) * spec.train_frac);
    const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * spec.val_frac);
    const std::size_t n_test = n - n_train - n_val;  // remainder goes to test
    return Splits{series.slice(0, n_train), series.slice(n_train, n_val),
                  series.slice(n_train + n_val, n_test)};
}

std::vector<Window> make_windows(const TimeSeries& series, std::size_t seq_len,
                                 std::size_t horizon, std::size_t stride) {
    const std::size_t n = series.length();
    if (seq_len == 0 || horizon == 0 || stride == 0)
        throw ConfigError("make_windows: seq_len, horizon and stride must be positive");
    if (seq_len + horizon > n)
        throw DataError("make_windows: seq_len + horizon = " + std::to_string(seq_len + horizon) +
                        " exceeds series length " + std::to_string(n));

    const std::size_t count = (n - seq_len - horizon) / stride + 1;
    std::vector<Window> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = w * stride;
        out.push_back(Window{series.slice(start, seq_len), series.slice(start + seq_len, horizon), start});
    }
    return out;
}

}  // namespace mrcdm
