#include <doctest.h>

#include <cmath>

#include "mrcdm/datagen.hpp"
#include "mrcdm/decompose.hpp"
#include "mrcdm/errors.hpp"
#include "mrcdm/rng.hpp"

using namespace mrcdm;

namespace {

TimeSeries random_series(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-3.0, 3.0);
    return TimeSeries(std::move(v));
}

double var_of_first_differences(const TimeSeries& s) {
    std::vector<double> d(s.length() - 1);
    for (std::size_t t = 1; t < s.length(); ++t) d[t - 1] = s.values[t] - s.values[t - 1];
    const double sd = series_population_std(d);
    return sd * sd;
}

}  // namespace

TEST_CASE("moving_average with replicate padding") {
    SUBCASE("constant series is invariant") {
        TimeSeries c(std::vector<double>(40, 2.5));
        auto out = moving_average(c, 5);
        for (double x : out.values) CHECK(x == doctest::Approx(2.5).epsilon(1e-15));
    }
    SUBCASE("hand-computed window means") {
        auto out = moving_average(TimeSeries({1, 2, 3, 4, 5}), 3);
        CHECK(out.values[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
        CHECK(out.values[1] == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(out.values[2] == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(out.values[3] == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(out.values[4] == doctest::Approx(14.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("parameter errors") {
        TimeSeries s(std::vector<double>(10, 1.0));
        CHECK_THROWS_AS(moving_average(s, 4), ConfigError);
        CHECK_THROWS_AS(moving_average(s, 11), DataError);
    }
    SUBCASE("paper window sizes apply") {
        Rng rng(1);
        auto s = random_series(rng, 96);
        for (std::size_t w : kDefaultTrendWindows) CHECK(moving_average(s, w).length() == 96);
    }
}

TEST_CASE("moving_average is linear") {
    Rng rng(2);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 51 + rng.below(200);
        auto x = random_series(rng, n);
        auto y = random_series(rng, n);
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        TimeSeries mix = x;
        for (std::size_t t = 0; t < n; ++t) mix.values[t] = a * x.values[t] + b * y.values[t];
        auto lhs = moving_average(mix, 25);
        auto mx = moving_average(x, 25), my = moving_average(y, 25);
        for (std::size_t t = 0; t < n; ++t)
            CHECK(lhs.values[t] == doctest::Approx(a * mx.values[t] + b * my.values[t]).epsilon(1e-12));
    }
}

TEST_CASE("decompose splits into four exactly-summing components") {
    SUBCASE("constant series concentrates in trend3") {
        TimeSeries c(std::vector<double>(64, -1.5));
        auto comp = decompose(c);
        for (std::size_t t = 0; t < 64; ++t) {
            CHECK(comp.trend3.values[t] == doctest::Approx(-1.5).epsilon(1e-15));
            CHECK(std::abs(comp.trend1.values[t]) < 1e-12);
            CHECK(std::abs(comp.trend2.values[t]) < 1e-12);
            CHECK(std::abs(comp.residual.values[t]) < 1e-12);
        }
    }
    SUBCASE("linear ramp has vanishing bands in the interior") {
        std::vector<double> v(128);
        for (std::size_t t = 0; t < 128; ++t) v[t] = 0.25 * static_cast<double>(t) - 4.0;
        auto comp = decompose(TimeSeries(v));
        // a centered average of a linear function is the function itself away
        // from the replicated edges
        for (std::size_t t = 25; t < 128 - 25; ++t) {
            CHECK(std::abs(comp.residual.values[t]) < 1e-10);
            CHECK(std::abs(comp.trend1.values[t]) < 1e-10);
            CHECK(std::abs(comp.trend2.values[t]) < 1e-10);
        }
    }
    SUBCASE("length below the largest window is an error") {
        CHECK_THROWS_AS(decompose(TimeSeries(std::vector<double>(50, 1.0))), DataError);
    }
}

TEST_CASE("telescoping: recompose(decompose(x)) == x within 1e-12") {
    Rng rng(3);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 51 + rng.below(462);  // 51..512
        auto x = random_series(rng, n);
        auto rt = recompose(decompose(x));
        for (std::size_t t = 0; t < n; ++t)
            CHECK(rt.values[t] == doctest::Approx(x.values[t]).epsilon(1e-12));
    }
}

TEST_CASE("smoothing levels order the variance of first differences") {
    for (std::uint64_t seed : {42ULL, 43ULL, 44ULL}) {
        SynthConfig cfg;
        cfg.n_points = 2000;
        cfg.seed = seed;
        auto x = synthesize(cfg);
        auto m5 = moving_average(x, 5);
        auto m25 = moving_average(x, 25);
        auto m51 = moving_average(x, 51);
        CHECK(var_of_first_differences(m51) <= var_of_first_differences(m25));
        CHECK(var_of_first_differences(m25) <= var_of_first_differences(m5));
    }
}
