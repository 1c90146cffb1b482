#include "mrcdm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mrcdm/errors.hpp"

namespace mrcdm {

namespace {

/// Monahan map from unconstrained parameters to a stationary order-2 AR
/// polynomial: partial correlations r_i = tanh(u_i), then the Levinson step
/// phi1 = r1*(1 - r2), phi2 = r2. The invertible MA region is the mirror
/// image, so MA coefficients are the negated map.
std::array<double, 2> to_stationary(double u1, double u2) {
    const double r1 = std::tanh(u1);
    const double r2 = std::tanh(u2);
    return {r1 * (1.0 - r2), r2};
}

std::array<double, 2> to_invertible(double u1, double u2) {
    const auto p = to_stationary(u1, u2);
    return {-p[0], -p[1]};
}

std::vector<double> difference(const std::vector<double>& x) {
    std::vector<double> d(x.size() - 1);
    for (std::size_t t = 1; t < x.size(); ++t) d[t - 1] = x[t] - x[t - 1];
    return d;
}

/// Innovations of ARMA(2,2) with eps[t<0]=0 (conditional sum of squares).
void filter_innovations(const std::vector<double>& z, const std::array<double, 2>& ar,
                        const std::array<double, 2>& ma, double intercept,
                        std::vector<double>& eps) {
    const std::size_t n = z.size();
    eps.assign(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double pred = intercept;
        if (t >= 1) pred += ar[0] * z[t - 1] + ma[0] * eps[t - 1];
        if (t >= 2) pred += ar[1] * z[t - 2] + ma[1] * eps[t - 2];
        eps[t] = z[t] - pred;
    }
}

/// Conditional sum of squares plus a small ridge toward zero in the
/// transformed space. The ridge is negligible against any real fit
/// improvement but pins down the AR/MA cancellation ridge when the input is
/// unidentifiable (e.g. white noise).
double css_objective(const std::vector<double>& z, const std::vector<double>& u, double ridge,
                     std::vector<double>& eps_scratch) {
    const auto ar = to_stationary(u[0], u[1]);
    const auto ma = to_invertible(u[2], u[3]);
    filter_innovations(z, ar, ma, u[4], eps_scratch);
    double css = 0.0;
    for (double e : eps_scratch) css += e * e;
    double norm2 = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) norm2 += u[i] * u[i];
    return css + ridge * norm2;
}

/// Nelder-Mead with standard coefficients; terminates when the simplex
/// collapses below `tol` in both objective spread and parameter spread.
struct SimplexResult {
    std::vector<double> x;
    double fx = 0.0;
    bool converged = false;
};

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, double step, double tol, int max_iter) {
    const std::size_t dim = x0.size();
    std::vector<std::vector<double>> simplex(dim + 1, x0);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step;
    std::vector<double> fv(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) fv[i] = f(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });

        double param_spread = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 1; j <= dim; ++j)
                param_spread = std::max(param_spread,
                                        std::abs(simplex[order[j]][i] - simplex[order[0]][i]));
        }
        if (std::abs(fv[order[dim]] - fv[order[0]]) <= tol * (1.0 + std::abs(fv[order[0]])) &&
            param_spread <= tol) {
            converged = true;
            break;
        }

        const std::size_t worst = order[dim];
        std::vector<double> centroid(dim, 0.0);
        for (std::size_t j = 0; j <= dim; ++j) {
            if (j == worst) continue;
            for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[j][i];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        auto combine = [&](double coef) {
            std::vector<double> p(dim);
            for (std::size_t i = 0; i < dim; ++i)
                p[i] = centroid[i] + coef * (simplex[worst][i] - centroid[i]);
            return p;
        };

        auto reflected = combine(-1.0);
        const double fr = f(reflected);
        if (fr < fv[order[0]]) {
            auto expanded = combine(-2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                fv[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                fv[worst] = fr;
            }
        } else if (fr < fv[order[dim - 1]]) {
            simplex[worst] = std::move(reflected);
            fv[worst] = fr;
        } else {
            auto contracted = combine(fr < fv[worst] ? -0.5 : 0.5);
            const double fc = f(contracted);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = std::move(contracted);
                fv[worst] = fc;
            } else {  // shrink toward the best vertex
                for (std::size_t j = 0; j <= dim; ++j) {
                    if (j == order[0]) continue;
                    for (std::size_t i = 0; i < dim; ++i)
                        simplex[j][i] = simplex[order[0]][i] + 0.5 * (simplex[j][i] - simplex[order[0]][i]);
                    fv[j] = f(simplex[j]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= dim; ++i)
        if (fv[i] < fv[best]) best = i;
    return SimplexResult{simplex[best], fv[best], converged};
}

}  // namespace

ArimaModel arima_fit(const TimeSeries& train) {
    if (train.length() < 50)
        throw DataError("arima_fit: need at least 50 samples, got " + std::to_string(train.length()));
    if (!train.fully_observed()) throw DataError("arima_fit: series must be fully observed");

    const auto z = difference(train.values);
    ArimaModel m;
    const double z_std = series_population_std(z);
    if (z_std <= 1e-12 * std::max(1.0, std::abs(series_mean(z)))) {
        m.degenerate = true;
        m.converged = true;
        return m;  // constant series: all coefficients zero, sigma2 zero
    }

    std::vector<double> eps_scratch;
    double css_at_zero = 0.0;
    for (double v : z) css_at_zero += (v - series_mean(z)) * (v - series_mean(z));
    const double ridge = 1e-3 * css_at_zero;
    auto objective = [&](const std::vector<double>& u) {
        return css_objective(z, u, ridge, eps_scratch);
    };
    auto result = nelder_mead(objective, std::vector<double>(5, 0.0), 0.25, 1e-6, 2000);

    m.ar = to_stationary(result.x[0], result.x[1]);
    m.ma = to_invertible(result.x[2], result.x[3]);
    m.intercept = result.x[4];
    m.converged = result.converged;
    filter_innovations(z, m.ar, m.ma, m.intercept, eps_scratch);
    double css = 0.0;
    for (double e : eps_scratch) css += e * e;
    m.sigma2 = css / static_cast<double>(eps_scratch.size());
    return m;
}

ArimaForecast arima_forecast(const ArimaModel& m, const TimeSeries& history, std::size_t horizon,
                             Rng& rng, std::size_t draws) {
    if (history.length() < 3) throw DataError("arima_forecast: history too short");
    if (horizon == 0) throw ConfigError("arima_forecast: horizon must be positive");

    const double last_level = history.values.back();
    const auto z = difference(history.values);

    std::vector<double> eps;
    filter_innovations(z, m.ar, m.ma, m.intercept, eps);

    // Launch state: last two differences and innovations.
    auto run_path = [&](Rng* noise) {
        double z1 = z[z.size() - 1], z2 = z[z.size() - 2];
        double e1 = eps[eps.size() - 1], e2 = eps[eps.size() - 2];
        const double sigma = std::sqrt(std::max(0.0, m.sigma2));
        std::vector<double> levels(horizon);
        double level = last_level;
        for (std::size_t h = 0; h < horizon; ++h) {
            const double e0 = noise ? noise->normal(0.0, sigma) : 0.0;
            const double z0 = m.intercept + m.ar[0] * z1 + m.ar[1] * z2 + e0 + m.ma[0] * e1 +
                              m.ma[1] * e2;
            level += z0;
            levels[h] = level;
            z2 = z1;
            z1 = z0;
            e2 = e1;
            e1 = e0;
        }
        return levels;
    };

    ArimaForecast out;
    out.point = TimeSeries(run_path(nullptr), history.step_hours);

    std::vector<double> sum(horizon, 0.0), sum_sq(horizon, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
        Rng path = rng.fork(1000 + d);
        const auto levels = run_path(&path);
        for (std::size_t h = 0; h < horizon; ++h) {
            sum[h] += levels[h];
            sum_sq[h] += levels[h] * levels[h];
        }
    }
    std::vector<double> band(horizon, 0.0);
    if (draws > 1) {
        for (std::size_t h = 0; h < horizon; ++h) {
            const double mean = sum[h] / static_cast<double>(draws);
            band[h] = std::sqrt(std::max(0.0, sum_sq[h] / static_cast<double>(draws) - mean * mean));
        }
    }
    out.std_band = TimeSeries(std::move(band), history.step_hours);
    return out;
}

TimeSeries naive_last(const TimeSeries& history, std::size_t horizon) {
    if (history.length() == 0) throw DataError("naive_last: empty history");
    return TimeSeries(std::vector<double>(horizon, history.values.back()), history.step_hours);
}

TimeSeries seasonal_naive(const TimeSeries& history, std::size_t horizon, std::size_t period) {
    if (history.length() < period)
        throw DataError("seasonal_naive: history shorter than period " + std::to_string(period));
    std::vector<double> out(horizon);
    const std::size_t n = history.length();
    for (std::size_t h = 0; h < horizon; ++h)
        out[h] = history.values[n - period + (h % period)];
    return TimeSeries(std::move(out), history.step_hours);
}

}  // namespace mrcdm
