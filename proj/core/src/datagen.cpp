#include "mrcdm/datagen.hpp"

#include <cmath>

#include "mrcdm/errors.hpp"
#include "mrcdm/rng.hpp"

namespace mrcdm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> raw_signal(const SynthConfig& cfg, Rng& rng) {
    const double phase_daily = rng.uniform(0.0, kTwoPi);
    const double phase_weekly = rng.uniform(0.0, kTwoPi);
    std::vector<double> x(cfg.n_points);
    for (std::size_t t = 0; t < cfg.n_points; ++t) {
        const double td = static_cast<double>(t);
        const double hour = static_cast<double>(t % 24);
        const double boost = (hour >= 8.0 && hour <= 20.0) ? cfg.daytime_boost : 1.0;
        const double base = cfg.amp_daily * std::sin(kTwoPi * td / 24.0 + phase_daily) +
                            cfg.amp_weekly * std::sin(kTwoPi * td / 168.0 + phase_weekly) +
                            cfg.trend_slope * td;
        x[t] = boost * base + rng.normal(0.0, cfg.noise_std);
    }
    return x;
}

/// Rescale so the sample mean/std match the targets exactly; a degenerate
/// (zero-variance) raw signal maps to the constant target mean.
void rescale_to_target(std::vector<double>& x, double target_mean, double target_std) {
    const double m = series_mean(x);
    const double s = series_population_std(x);
    if (s <= 1e-15 * std::max(1.0, std::abs(m))) {
        for (double& v : x) v = target_mean;
        return;
    }
    for (double& v : x) v = (v - m) / s * target_std + target_mean;
}

}  // namespace

TimeSeries synthesize(const SynthConfig& cfg) {
    if (cfg.n_points < 1000) throw ConfigError("synthesize: n_points must be >= 1000");
    if (cfg.noise_std < 0.0) throw ConfigError("synthesize: noise_std must be >= 0");
    if (cfg.daytime_boost < 1.0) throw ConfigError("synthesize: daytime_boost must be >= 1");
    if (cfg.missing_frac < 0.0 || cfg.missing_frac >= 1.0)
        throw ConfigError("synthesize: missing_frac must be in [0,1)");

    Rng rng(cfg.seed);
    auto x = raw_signal(cfg, rng);
    rescale_to_target(x, cfg.target_mean, cfg.target_std);

    TimeSeries out(std::move(x));
    if (cfg.missing_frac > 0.0) {
        Rng drop = rng.fork(0x4d495353ULL);  // independent of the value stream
        for (std::size_t t = 0; t < out.length(); ++t)
            if (drop.uniform01() < cfg.missing_frac) out.observed[t] = 0;
    }
    return out;
}

std::vector<TimeSeries> synthesize_correlated(const SynthConfig& cfg, std::size_t k_extra,
                                              double rho) {
    if (rho < -1.0 || rho > 1.0) throw ConfigError("synthesize_correlated: rho must be in [-1,1]");
    TimeSeries base = synthesize(cfg);

    // Standardized base drives the shared part of every extra channel.
    std::vector<double> z = base.values;
    const double m = series_mean(z);
    const double s = series_population_std(z);
    for (double& v : z) v = (v - m) / s;

    std::vector<TimeSeries> out;
    out.reserve(k_extra + 1);
    out.push_back(std::move(base));
    Rng rng(cfg.seed);
    for (std::size_t c = 0; c < k_extra; ++c) {
        Rng channel = rng.fork(0xC0 + c);
        std::vector<double> y(cfg.n_points);
        const double indep = std::sqrt(1.0 - rho * rho);
        for (std::size_t t = 0; t < cfg.n_points; ++t) y[t] = rho * z[t] + indep * channel.normal();
        rescale_to_target(y, cfg.target_mean, cfg.target_std);
        out.emplace_back(std::move(y));
    }
    return out;
}

}  // namespace mrcdm
