#include <doctest.h>

#include <cmath>

#include "mrcdm/baselines.hpp"
#include "mrcdm/errors.hpp"
#include "mrcdm/rng.hpp"

using namespace mrcdm;

namespace {

/// Simulate an AR(2) process and integrate once, so ARIMA(2,1,2) sees the
/// AR(2) after differencing.
TimeSeries simulate_integrated_ar2(double phi1, double phi2, double sigma, std::size_t n,
                                   std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> z(n, 0.0);
    for (std::size_t t = 2; t < n; ++t)
        z[t] = phi1 * z[t - 1] + phi2 * z[t - 2] + rng.normal(0.0, sigma);
    std::vector<double> level(n);
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        acc += z[t];
        level[t] = acc;
    }
    return TimeSeries(std::move(level));
}

}  // namespace

TEST_CASE("generate-and-refit recovers AR(2) coefficients") {
    auto train = simulate_integrated_ar2(0.5, -0.3, 0.1, 5000, 42);
    auto m = arima_fit(train);
    CHECK(std::abs(m.ar[0] - 0.5) < 0.1);
    CHECK(std::abs(m.ar[1] + 0.3) < 0.1);
    CHECK(std::abs(m.ma[0]) < 0.1);
    CHECK(std::abs(m.ma[1]) < 0.1);
    CHECK(m.sigma2 == doctest::Approx(0.01).epsilon(0.2));
}

TEST_CASE("white-noise input yields near-zero coefficients") {
    Rng rng(11);
    std::vector<double> v(3000);
    double acc = 0.0;
    for (auto& x : v) {
        acc += rng.normal(0.0, 1.0);
        x = acc;  // integrate so differencing recovers the white noise
    }
    auto m = arima_fit(TimeSeries(std::move(v)));
    CHECK(std::abs(m.ar[0]) < 0.1);
    CHECK(std::abs(m.ar[1]) < 0.1);
    CHECK(std::abs(m.ma[0]) < 0.1);
    CHECK(std::abs(m.ma[1]) < 0.1);
}

TEST_CASE("constant series degenerates cleanly") {
    TimeSeries c(std::vector<double>(100, 4.5));
    auto m = arima_fit(c);
    CHECK(m.degenerate);
    Rng rng(1);
    auto f = arima_forecast(m, c, 24, rng, 16);
    for (double v : f.point.values) CHECK(v == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("forecasts stay finite and bands are non-negative") {
    auto train = simulate_integrated_ar2(0.9, -0.5, 1.0, 800, 3);
    auto m = arima_fit(train);
    Rng rng(2);
    auto f = arima_forecast(m, train.slice(700, 100), 96, rng, 50);
    REQUIRE(f.point.length() == 96);
    for (double v : f.point.values) CHECK(std::isfinite(v));
    for (double v : f.std_band.values) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
}

TEST_CASE("arima_forecast is deterministic given the rng seed") {
    auto train = simulate_integrated_ar2(0.5, -0.3, 0.1, 600, 5);
    auto m = arima_fit(train);
    Rng rng_a(9), rng_b(9);
    auto fa = arima_forecast(m, train, 24, rng_a);
    auto fb = arima_forecast(m, train, 24, rng_b);
    CHECK(fa.point.values == fb.point.values);
    CHECK(fa.std_band.values == fb.std_band.values);
}

TEST_CASE("naive_last repeats the final value") {
    TimeSeries h({1.0, 2.0, 3.0});
    auto f = naive_last(h, 5);
    CHECK(f.length() == 5);
    for (double v : f.values) CHECK(v == 3.0);
    CHECK(naive_last(h, 1).values[0] == 3.0);
}

TEST_CASE("seasonal_naive repeats the last period") {
    std::vector<double> h(48);
    for (std::size_t t = 0; t < 48; ++t) h[t] = static_cast<double>(t);
    auto f = seasonal_naive(TimeSeries(h), 24, 24);
    for (std::size_t t = 0; t < 24; ++t) CHECK(f.values[t] == h[24 + t]);

    SUBCASE("horizon beyond one period cycles") {
        auto g = seasonal_naive(TimeSeries(h), 48, 24);
        for (std::size_t t = 0; t < 48; ++t) CHECK(g.values[t] == h[24 + (t % 24)]);
    }
    SUBCASE("short history is an error") {
        CHECK_THROWS_AS(seasonal_naive(TimeSeries({1.0, 2.0}), 4, 24), DataError);
    }
}
