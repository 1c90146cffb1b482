#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "mrcdm/errors.hpp"
#include "mrcdm/image.hpp"
#include "mrcdm/rng.hpp"

using namespace mrcdm;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

TimeSeries random_series(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return TimeSeries(std::move(v));
}

/// Reference windowed DFT of one frame (periodic Hann, 1/n scaling).
std::vector<std::complex<double>> frame_dft_oracle(const std::vector<double>& x, int start) {
    const int n = 64;
    std::vector<std::complex<double>> bins(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (int t = 0; t < n; ++t) {
            const double w = 0.5 * (1.0 - std::cos(kTwoPi * t / n));
            const double a = kTwoPi * k * t / n;
            acc += w * x[static_cast<std::size_t>(start + t)] *
                   std::complex<double>(std::cos(a), -std::sin(a));
        }
        bins[static_cast<std::size_t>(k)] = acc / static_cast<double>(n);
    }
    return bins;
}

}  // namespace

TEST_CASE("delay_embed geometry") {
    Rng rng(1);
    auto x = random_series(rng, 96);
    auto img = delay_embed(x);

    CHECK(img.channels == 1);
    CHECK(img.meta.valid_cols == 22);  // floor(64/3)+1
    int valid_columns = 0;
    for (int j = 0; j < kCanvas; ++j)
        if (img.valid_at(0, j)) ++valid_columns;
    CHECK(valid_columns == 22);
    // padded cells are exactly zero
    for (int r = 0; r < kCanvas; ++r)
        for (int j = 22; j < kCanvas; ++j) CHECK(img.at(0, r, j) == 0.0);
    // column contents are lagged windows
    CHECK(img.at(0, 0, 5) == x.values[15]);
    CHECK(img.at(0, 31, 5) == x.values[46]);

    SUBCASE("constant input fills valid cells with the constant") {
        auto c = delay_embed(TimeSeries(std::vector<double>(96, 1.25)));
        for (int r = 0; r < kCanvas; ++r)
            for (int j = 0; j < 22; ++j) CHECK(c.at(0, r, j) == 1.25);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(delay_embed(TimeSeries(std::vector<double>(20, 0.0))), DataError);
        CHECK_THROWS_AS(delay_embed(TimeSeries(std::vector<double>(128, 0.0))), DataError);
    }
}

TEST_CASE("delay_embed round trip recovers the series") {
    Rng rng(2);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 32 + rng.below(65);  // 32..96
        auto x = random_series(rng, n);
        auto back = delay_embed_invert(delay_embed(x));
        REQUIRE(back.length() == n);
        for (std::size_t t = 0; t < n; ++t)
            CHECK(back.values[t] == doctest::Approx(x.values[t]).epsilon(1e-12));
    }
}

TEST_CASE("delay_embed single column is an identity reshape") {
    Rng rng(3);
    auto x = random_series(rng, 32);
    auto img = delay_embed(x);
    CHECK(img.meta.valid_cols == 1);
    for (int i = 0; i < 32; ++i) CHECK(img.at(0, i, 0) == x.values[static_cast<std::size_t>(i)]);
    auto back = delay_embed_invert(img);
    CHECK(back.values == x.values);
}

TEST_CASE("delay_embed inversion of a corrupted image averages the copies") {
    Rng rng(4);
    auto x = random_series(rng, 63);
    auto img = delay_embed(x);
    // corrupt every valid cell with deterministic noise
    Rng noise(5);
    std::vector<double> delta(static_cast<std::size_t>(kCanvas) * kCanvas, 0.0);
    for (int i = 0; i < kCanvas; ++i)
        for (int j = 0; j < img.meta.valid_cols; ++j) {
            delta[static_cast<std::size_t>(i) * kCanvas + j] = noise.normal(0.0, 0.1);
            img.at(0, i, j) += delta[static_cast<std::size_t>(i) * kCanvas + j];
        }
    auto back = delay_embed_invert(img);

    // enumeration oracle: mean over covering cells
    const int q = img.meta.valid_cols;
    const int covered = (q - 1) * 3 + 32;
    for (int t = 0; t < covered; ++t) {
        double sum = 0.0;
        int count = 0;
        for (int j = 0; j < q; ++j) {
            const int i = t - 3 * j;
            if (i >= 0 && i < 32) {
                sum += x.values[static_cast<std::size_t>(t)] + delta[static_cast<std::size_t>(i) * kCanvas + j];
                ++count;
            }
        }
        CHECK(back.values[static_cast<std::size_t>(t)] == doctest::Approx(sum / count).epsilon(1e-12));
    }
}

TEST_CASE("generated-image fallback replicates the last covered sample") {
    // meta without stored tail: the uncovered final sample copies its neighbour
    Rng rng(6);
    auto x = random_series(rng, 96);
    auto img = delay_embed(x);
    img.meta.tail.clear();
    auto back = delay_embed_invert(img);
    CHECK(back.values[95] == doctest::Approx(back.values[94]));
}

TEST_CASE("stft geometry and content") {
    Rng rng(7);
    auto x = random_series(rng, 96);
    auto img = stft(x);
    CHECK(img.channels == 2);
    CHECK(img.meta.valid_cols == 3);  // floor(32/16)+1
    int valid_columns = 0;
    for (int j = 0; j < kCanvas; ++j)
        if (img.valid_at(0, j)) ++valid_columns;
    CHECK(valid_columns == 3);

    SUBCASE("zero input gives a zero tensor") {
        auto z = stft(TimeSeries(std::vector<double>(96, 0.0)));
        for (double v : z.data) CHECK(v == 0.0);
    }
    SUBCASE("frame values match the DFT oracle") {
        const auto bins = frame_dft_oracle(x.values, 16);  // frame 1
        for (int k = 0; k < 32; ++k) {
            CHECK(img.at(0, k, 1) == doctest::Approx(bins[static_cast<std::size_t>(k)].real()).epsilon(1e-9));
            CHECK(img.at(1, k, 1) == doctest::Approx(bins[static_cast<std::size_t>(k)].imag()).epsilon(1e-9));
        }
        CHECK(img.meta.nyquist[1] == doctest::Approx(bins[32].real()).epsilon(1e-9));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(stft(TimeSeries(std::vector<double>(50, 0.0))), DataError);
        CHECK_THROWS_AS(stft(TimeSeries(std::vector<double>(64 + 16 * 32, 0.0))), DataError);
    }
}

TEST_CASE("pure cosine concentrates energy in its frequency row") {
    // Bin-centered cosine under a periodic Hann window: the spectral kernel
    // is exactly [-1/4, 1/2, -1/4], so all energy sits in rows 3..5 with the
    // peak at row 4.
    std::vector<double> v(96);
    for (std::size_t t = 0; t < 96; ++t) v[t] = std::cos(kTwoPi * 4.0 * static_cast<double>(t) / 64.0);
    auto img = stft(TimeSeries(v));
    auto mag = [&](int k, int f) {
        return std::hypot(img.at(0, k, f), img.at(1, k, f));
    };
    for (int f = 0; f < 3; ++f) {
        CHECK(mag(4, f) == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(mag(3, f) == doctest::Approx(0.125).epsilon(1e-9));
        CHECK(mag(5, f) == doctest::Approx(0.125).epsilon(1e-9));
        for (int k = 0; k < 32; ++k) {
            if (std::abs(k - 4) <= 1) continue;
            CHECK(mag(k, f) < 1e-12);
        }
    }
}

TEST_CASE("istft round trip within 1e-9 relative") {
    Rng rng(8);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 64 + 16 * rng.below(3);  // 64, 80, 96
        auto x = random_series(rng, n);
        auto back = istft(stft(x));
        REQUIRE(back.length() == n);
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            num += (back.values[t] - x.values[t]) * (back.values[t] - x.values[t]);
            den += x.values[t] * x.values[t];
        }
        CHECK(std::sqrt(num / den) < 1e-9);
    }
    SUBCASE("zero tensor inverts to a zero series") {
        auto img = stft(TimeSeries(std::vector<double>(96, 0.0)));
        auto back = istft(img);
        for (double v : back.values) CHECK(v == doctest::Approx(0.0));
    }
}

TEST_CASE("stft is linear") {
    Rng rng(9);
    auto x1 = random_series(rng, 96);
    auto x2 = random_series(rng, 96);
    const double a = 1.7, b = -0.4;
    TimeSeries mix = x1;
    for (std::size_t t = 0; t < 96; ++t) mix.values[t] = a * x1.values[t] + b * x2.values[t];

    auto s1 = stft(x1), s2 = stft(x2), sm = stft(mix);
    for (std::size_t i = 0; i < sm.data.size(); ++i)
        CHECK(sm.data[i] == doctest::Approx(a * s1.data[i] + b * s2.data[i]).epsilon(1e-9));

    // istft linearity: invert the mixed spectrum
    auto back = istft(sm);
    for (std::size_t t = 0; t < 96; ++t)
        CHECK(back.values[t] == doctest::Approx(mix.values[t]).epsilon(1e-9));
}

TEST_CASE("Parseval energy identity per frame") {
    Rng rng(10);
    auto x = random_series(rng, 96);
    auto img = stft(x);
    for (int f = 0; f < img.meta.valid_cols; ++f) {
        // windowed-frame energy
        double energy = 0.0;
        for (int t = 0; t < 64; ++t) {
            const double w = 0.5 * (1.0 - std::cos(kTwoPi * t / 64.0));
            const double s = w * x.values[static_cast<std::size_t>(16 * f + t)];
            energy += s * s;
        }
        // bins are scaled by 1/n, real-signal fold doubles bins 1..31
        double spec = img.at(0, 0, f) * img.at(0, 0, f) +
                      img.meta.nyquist[static_cast<std::size_t>(f)] * img.meta.nyquist[static_cast<std::size_t>(f)];
        for (int k = 1; k < 32; ++k)
            spec += 2.0 * (img.at(0, k, f) * img.at(0, k, f) + img.at(1, k, f) * img.at(1, k, f));
        CHECK(64.0 * spec == doctest::Approx(energy).epsilon(1e-6));
    }
}

TEST_CASE("istft without stored fixups falls back to a neighbour copy") {
    Rng rng(11);
    auto x = random_series(rng, 96);
    auto img = stft(x);
    img.meta.edge_fixups.clear();  // as if the tensor had been generated
    auto back = istft(img);
    CHECK(back.values[0] == doctest::Approx(back.values[1]));
    for (std::size_t t = 1; t < 96; ++t)
        CHECK(back.values[t] == doctest::Approx(x.values[t]).epsilon(1e-8));
}
