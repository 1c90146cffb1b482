#include "mrcdm/decompose.hpp"

#include <algorithm>
#include <string>

#include "mrcdm/errors.hpp"

namespace mrcdm {

TimeSeries moving_average(const TimeSeries& x, std::size_t w) {
    const std::size_t n = x.length();
    if (w == 0 || w % 2 == 0)
        throw ConfigError("moving_average: window must be odd and positive, got " + std::to_string(w));
    if (w > n)
        throw DataError("moving_average: window " + std::to_string(w) + " exceeds length " +
                        std::to_string(n));

    const auto half = static_cast<std::ptrdiff_t>((w - 1) / 2);
    TimeSeries out = x;
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(n); ++t) {
        double sum = 0.0;
        for (std::ptrdiff_t j = t - half; j <= t + half; ++j) {
            const auto idx = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(n) - 1);
            sum += x.values[static_cast<std::size_t>(idx)];
        }
        out.values[static_cast<std::size_t>(t)] = sum / static_cast<double>(w);
    }
    return out;
}

TrendComponents decompose(const TimeSeries& x, const std::array<std::size_t, 3>& windows) {
    const std::size_t max_w = *std::max_element(windows.begin(), windows.end());
    if (x.length() < max_w)
        throw DataError("decompose: length " + std::to_string(x.length()) +
                        " below largest window " + std::to_string(max_w));

    const TimeSeries m_fine = moving_average(x, windows[0]);
    const TimeSeries m_mid = moving_average(x, windows[1]);
    const TimeSeries m_coarse = moving_average(x, windows[2]);

    TrendComponents c;
    c.windows = windows;
    c.trend1 = m_fine;
    c.trend2 = m_mid;
    c.trend3 = m_coarse;
    c.residual = x;
    for (std::size_t t = 0; t < x.length(); ++t) {
        c.residual.values[t] = x.values[t] - m_fine.values[t];
        c.trend1.values[t] = m_fine.values[t] - m_mid.values[t];
        c.trend2.values[t] = m_mid.values[t] - m_coarse.values[t];
        c.trend3.values[t] = m_coarse.values[t];
    }
    return c;
}

TimeSeries recompose(const TrendComponents& c) {
    TimeSeries out = c.trend1;
    for (std::size_t t = 0; t < out.length(); ++t) {
        out.values[t] = c.residual.values[t] + c.trend1.values[t] + c.trend2.values[t] +
                        c.trend3.values[t];
    }
    return out;
}

}  // namespace mrcdm
