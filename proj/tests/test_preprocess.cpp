#include <doctest.h>

#include <cmath>

#include "mrcdm/errors.hpp"
#include "mrcdm/rng.hpp"
#include "mrcdm/timeseries.hpp"

using namespace mrcdm;

namespace {

TimeSeries with_missing(std::vector<double> v, std::vector<std::uint8_t> obs) {
    return TimeSeries(std::move(v), std::move(obs));
}

TimeSeries random_series(Rng& rng, std::size_t n, double lo = -5.0, double hi = 5.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return TimeSeries(std::move(v));
}

}  // namespace

TEST_CASE("interpolate_missing fills gaps") {
    SUBCASE("midpoint of a linear segment") {
        auto out = interpolate_missing(with_missing({1, 0, 3}, {1, 0, 1}));
        CHECK(out.values[0] == doctest::Approx(1.0));
        CHECK(out.values[1] == doctest::Approx(2.0));
        CHECK(out.values[2] == doctest::Approx(3.0));
        CHECK(out.fully_observed());
    }
    SUBCASE("constant extension at the edges") {
        // Two observed samples required; edge gaps copy the nearest neighbour.
        auto out = interpolate_missing(with_missing({0, 5, 5, 0}, {0, 1, 1, 0}));
        CHECK(out.values == std::vector<double>{5, 5, 5, 5});
    }
    SUBCASE("multi-sample interior gap solves the linear segment") {
        auto out = interpolate_missing(with_missing({0, 0, 0, 9}, {1, 0, 0, 1}));
        CHECK(out.values[1] == doctest::Approx(3.0));
        CHECK(out.values[2] == doctest::Approx(6.0));
    }
    SUBCASE("fewer than two observed samples is unrecoverable") {
        CHECK_THROWS_AS(interpolate_missing(with_missing({1, 0, 0}, {1, 0, 0})), DataError);
    }
    SUBCASE("idempotent on fully observed input") {
        Rng rng(7);
        auto s = random_series(rng, 50);
        auto out = interpolate_missing(s);
        CHECK(out.values == s.values);
    }
}

TEST_CASE("clip_outliers_3sigma clamps to the computed bounds") {
    SUBCASE("constant series unchanged") {
        TimeSeries s(std::vector<double>(20, 3.5));
        CHECK(clip_outliers_3sigma(s).values == s.values);
    }
    SUBCASE("single spike clamped to mean + 3 sigma") {
        std::vector<double> v(100, 0.0);
        v[99] = 1000.0;
        // oracle: population statistics of the input
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= 100.0;
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        const double sigma = std::sqrt(var / 100.0);

        auto out = clip_outliers_3sigma(TimeSeries(v));
        CHECK(out.values[99] == doctest::Approx(mean + 3.0 * sigma).epsilon(1e-12));
        CHECK(out.values[0] == doctest::Approx(std::max(0.0, mean - 3.0 * sigma)).epsilon(1e-12));
    }
    SUBCASE("all |z| < 3 is a no-op") {
        // uniform values cannot exceed sqrt(3) standard deviations
        Rng rng(1);
        std::vector<double> v(200);
        for (auto& x : v) x = rng.uniform(-1.0, 1.0);
        auto out = clip_outliers_3sigma(TimeSeries(v));
        CHECK(out.values == v);
    }
    SUBCASE("output always inside the bounds") {
        Rng rng(2);
        for (int rep = 0; rep < 20; ++rep) {
            auto s = random_series(rng, 128, -10.0, 10.0);
            s.values[static_cast<std::size_t>(rng.below(128))] = 500.0;
            const double mean = series_mean(s.values);
            const double sigma = series_population_std(s.values);
            auto out = clip_outliers_3sigma(s);
            for (double x : out.values) {
                CHECK(x >= mean - 3.0 * sigma - 1e-12);
                CHECK(x <= mean + 3.0 * sigma + 1e-12);
            }
        }
    }
}

TEST_CASE("fit_normalizer uses population statistics of the train segment") {
    SUBCASE("hand value") {
        auto n = fit_normalizer(TimeSeries({0, 0, 2, 2}));
        CHECK(n.mean == doctest::Approx(1.0));
        CHECK(n.std == doctest::Approx(1.0));
    }
    SUBCASE("zero variance is an error") {
        CHECK_THROWS_AS(fit_normalizer(TimeSeries(std::vector<double>(10, 5.0))), DataError);
    }
    SUBCASE("standard normal sample") {
        Rng rng(42);
        std::vector<double> v(10000);
        for (auto& x : v) x = rng.normal();
        auto n = fit_normalizer(TimeSeries(v));
        CHECK(std::abs(n.mean) < 0.05);
        CHECK(std::abs(n.std - 1.0) < 0.05);
    }
}

TEST_CASE("normalize/denormalize round trip is identity within 1e-12") {
    Rng rng(3);
    for (int rep = 0; rep < 1000; ++rep) {
        auto s = random_series(rng, 32 + rng.below(64), -100.0, 100.0);
        Normalizer n{rng.uniform(-10, 10), rng.uniform(0.1, 20)};
        auto rt = denormalize(normalize(s, n), n);
        for (std::size_t t = 0; t < s.length(); ++t)
            CHECK(rt.values[t] == doctest::Approx(s.values[t]).epsilon(1e-12));
    }
}

TEST_CASE("chronological_split is contiguous and exact") {
    Rng rng(4);
    auto s = random_series(rng, 1003);
    auto splits = chronological_split(s, SplitSpec{});
    CHECK(splits.train.length() == 702);  // floor(1003*0.7)
    CHECK(splits.val.length() == 100);    // floor(1003*0.1)
    CHECK(splits.test.length() == 201);   // remainder

    std::vector<double> cat;
    cat.insert(cat.end(), splits.train.values.begin(), splits.train.values.end());
    cat.insert(cat.end(), splits.val.values.begin(), splits.val.values.end());
    cat.insert(cat.end(), splits.test.values.begin(), splits.test.values.end());
    CHECK(cat == s.values);

    CHECK_THROWS_AS(chronological_split(s, SplitSpec{0.5, 0.1, 0.1}), ConfigError);
}

TEST_CASE("make_windows count and contents") {
    Rng rng(5);
    auto s = random_series(rng, 192);

    SUBCASE("count formula") {
        auto w = make_windows(s, 96, 96, 96);
        REQUIRE(w.size() == 1);  // floor((192-192)/96)+1
        auto s2 = random_series(rng, 288);
        CHECK(make_windows(s2, 96, 96, 96).size() == 2);
    }
    SUBCASE("window contents align with history/target split") {
        auto w = make_windows(s, 96, 96, 96);
        CHECK(w[0].history.values[0] == s.values[0]);
        CHECK(w[0].target.values[0] == s.values[96]);
        CHECK(w[0].target.values[95] == s.values[191]);
    }
    SUBCASE("boundary violation") {
        auto s96 = random_series(rng, 96);
        CHECK_THROWS_AS(make_windows(s96, 96, 1, 1), DataError);
    }
    SUBCASE("standard horizons fit a long series") {
        auto s4k = random_series(rng, 4000);
        for (std::size_t h : {24, 48, 96, 192}) {
            auto w = make_windows(s4k, 96, h, h);
            CHECK(w.size() == (4000 - 96 - h) / h + 1);
        }
    }
}
