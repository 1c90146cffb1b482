#include "mrcdm/image.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mrcdm/csv.hpp"
#include "mrcdm/errors.hpp"

namespace mrcdm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Periodic Hann window of length n: w[t] = 0.5 * (1 - cos(2*pi*t/n)).
std::vector<double> hann_periodic(int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) w[static_cast<std::size_t>(t)] = 0.5 * (1.0 - std::cos(kTwoPi * t / n));
    return w;
}

struct DftTables {
    std::vector<double> cos_t;  // n*n
    std::vector<double> sin_t;
    int n;
    explicit DftTables(int n_) : cos_t(static_cast<std::size_t>(n_) * n_), sin_t(static_cast<std::size_t>(n_) * n_), n(n_) {
        for (int k = 0; k < n; ++k) {
            for (int t = 0; t < n; ++t) {
                const double a = kTwoPi * k * t / n;
                cos_t[static_cast<std::size_t>(k) * n + t] = std::cos(a);
                sin_t[static_cast<std::size_t>(k) * n + t] = std::sin(a);
            }
        }
    }
};

const DftTables& dft64() {
    static const DftTables tables(64);
    return tables;
}

}  // namespace

int delay_embed_columns(int src_len, int tau, int d) {
    return (src_len - d) / tau + 1;
}

int stft_frames(int src_len, const StftParams& p) {
    return (src_len - p.n_fft) / p.hop + 1;
}

ImageMeta delay_meta_for(int src_len, int tau, int d) {
    ImageMeta m;
    m.kind = TransformKind::DelayEmbed;
    m.src_len = src_len;
    m.tau = tau;
    m.dim = d;
    m.valid_cols = delay_embed_columns(src_len, tau, d);
    return m;
}

ImageMeta stft_meta_for(int src_len, const StftParams& p) {
    ImageMeta m;
    m.kind = TransformKind::Stft;
    m.src_len = src_len;
    m.stft = p;
    m.valid_cols = stft_frames(src_len, p);
    return m;
}

ImageTensor delay_embed(const TimeSeries& x, int tau, int d) {
    const int n = static_cast<int>(x.length());
    if (tau <= 0) throw ConfigError("delay_embed: tau must be positive");
    if (d != kCanvas) throw ConfigError("delay_embed: embedding dimension must equal the canvas height");
    if (n < d)
        throw DataError("delay_embed: length " + std::to_string(n) + " below embedding dimension " +
                        std::to_string(d));
    const int q = delay_embed_columns(n, tau, d);
    if (q > kCanvas)
        throw DataError("delay_embed: " + std::to_string(q) +
                        " columns exceed the 32-column canvas; chunk the input");

    ImageTensor img;
    img.channels = 1;
    img.data.assign(static_cast<std::size_t>(kCanvas) * kCanvas, 0.0);
    img.valid.assign(static_cast<std::size_t>(kCanvas) * kCanvas, 0);
    img.meta = delay_meta_for(n, tau, d);

    for (int j = 0; j < q; ++j) {
        for (int i = 0; i < d; ++i) {
            img.at(0, i, j) = x.values[static_cast<std::size_t>(j) * tau + i];
            img.valid[static_cast<std::size_t>(i) * kCanvas + j] = 1;
        }
    }
    // Samples past the last full window (when tau does not divide n-d).
    for (int t = (q - 1) * tau + d; t < n; ++t) img.meta.tail.push_back(x.values[static_cast<std::size_t>(t)]);
    return img;
}

TimeSeries delay_embed_invert(const ImageTensor& img) {
    const ImageMeta& m = img.meta;
    if (m.kind != TransformKind::DelayEmbed)
        throw DataError("delay_embed_invert: image does not carry a delay-embedding record");
    if (img.channels != 1) throw DataError("delay_embed_invert: expected a single channel");
    const int n = m.src_len;
    const int q = m.valid_cols;
    if (q <= 0 || q > kCanvas || (q - 1) * m.tau + m.dim > n)
        throw DataError("delay_embed_invert: inconsistent meta");

    std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < q; ++j) {
        for (int i = 0; i < m.dim; ++i) {
            const int t = j * m.tau + i;
            sum[static_cast<std::size_t>(t)] += img.at(0, i, j);
            ++count[static_cast<std::size_t>(t)];
        }
    }

    TimeSeries out;
    out.values.assign(static_cast<std::size_t>(n), 0.0);
    out.observed.assign(static_cast<std::size_t>(n), 1);
    const int covered = (q - 1) * m.tau + m.dim;
    for (int t = 0; t < covered; ++t) out.values[static_cast<std::size_t>(t)] = sum[static_cast<std::size_t>(t)] / count[static_cast<std::size_t>(t)];
    for (int t = covered; t < n; ++t) {
        const std::size_t k = static_cast<std::size_t>(t - covered);
        out.values[static_cast<std::size_t>(t)] =
            k < m.tail.size() ? m.tail[k] : out.values[static_cast<std::size_t>(covered) - 1];
    }
    return out;
}

ImageTensor stft(const TimeSeries& x, const StftParams& p) {
    const int n = static_cast<int>(x.length());
    if (p.n_fft != 64 || p.hop <= 0 || p.n_fft % p.hop != 0)
        throw ConfigError("stft: expected n_fft 64 with a hop dividing it");
    if (n < p.n_fft)
        throw DataError("stft: length " + std::to_string(n) + " below n_fft " + std::to_string(p.n_fft));
    const int frames = stft_frames(n, p);
    if (frames > kCanvas)
        throw DataError("stft: " + std::to_string(frames) + " frames exceed the 32-column canvas");

    const auto window = hann_periodic(p.n_fft);
    const auto& tables = dft64();
    const int half = p.n_fft / 2;  // Nyquist bin index (32)

    ImageTensor img;
    img.channels = 2;
    img.data.assign(static_cast<std::size_t>(2) * kCanvas * kCanvas, 0.0);
    img.valid.assign(static_cast<std::size_t>(kCanvas) * kCanvas, 0);
    img.meta = stft_meta_for(n, p);
    img.meta.nyquist.resize(static_cast<std::size_t>(frames), 0.0);

    std::vector<double> frame(static_cast<std::size_t>(p.n_fft));
    for (int f = 0; f < frames; ++f) {
        const int start = f * p.hop;
        for (int t = 0; t < p.n_fft; ++t)
            frame[static_cast<std::size_t>(t)] = window[static_cast<std::size_t>(t)] * x.values[static_cast<std::size_t>(start + t)];
        for (int k = 0; k <= half; ++k) {
            double re = 0.0, im = 0.0;
            const double* ct = &tables.cos_t[static_cast<std::size_t>(k) * p.n_fft];
            const double* st = &tables.sin_t[static_cast<std::size_t>(k) * p.n_fft];
            for (int t = 0; t < p.n_fft; ++t) {
                re += frame[static_cast<std::size_t>(t)] * ct[t];
                im -= frame[static_cast<std::size_t>(t)] * st[t];
            }
            re /= p.n_fft;
            im /= p.n_fft;
            if (k < half) {
                img.at(0, k, f) = re;
                img.at(1, k, f) = im;
            } else {
                img.meta.nyquist[static_cast<std::size_t>(f)] = re;  // imag part is zero for real input
            }
        }
        for (int r = 0; r < kCanvas; ++r) img.valid[static_cast<std::size_t>(r) * kCanvas + f] = 1;
    }

    // Overlap-add weight is zero only where every covering frame touches the
    // sample with window value 0; under periodic Hann that is sample 0.
    std::vector<double> wsum(static_cast<std::size_t>(n), 0.0);
    for (int f = 0; f < frames; ++f)
        for (int t = 0; t < p.n_fft; ++t)
            wsum[static_cast<std::size_t>(f * p.hop + t)] += window[static_cast<std::size_t>(t)] * window[static_cast<std::size_t>(t)];
    const int covered = (frames - 1) * p.hop + p.n_fft;
    for (int t = 0; t < covered; ++t)
        if (wsum[static_cast<std::size_t>(t)] < 1e-12) img.meta.edge_fixups.emplace_back(t, x.values[static_cast<std::size_t>(t)]);
    for (int t = covered; t < n; ++t) img.meta.edge_fixups.emplace_back(t, x.values[static_cast<std::size_t>(t)]);
    return img;
}

TimeSeries istft(const ImageTensor& img) {
    const ImageMeta& m = img.meta;
    if (m.kind != TransformKind::Stft) throw DataError("istft: image does not carry an STFT record");
    if (img.channels != 2) throw DataError("istft: expected real/imaginary channels");
    const StftParams& p = m.stft;
    const int n = m.src_len;
    const int frames = m.valid_cols;
    if (frames <= 0 || frames > kCanvas) throw DataError("istft: inconsistent meta");

    const auto window = hann_periodic(p.n_fft);
    const auto& tables = dft64();
    const int half = p.n_fft / 2;

    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    std::vector<double> wsum(static_cast<std::size_t>(n), 0.0);
    std::vector<double> re(static_cast<std::size_t>(p.n_fft)), im(static_cast<std::size_t>(p.n_fft));

    for (int f = 0; f < frames; ++f) {
        for (int k = 0; k < half; ++k) {
            re[static_cast<std::size_t>(k)] = img.at(0, k, f);
            im[static_cast<std::size_t>(k)] = img.at(1, k, f);
        }
        re[static_cast<std::size_t>(half)] =
            static_cast<std::size_t>(f) < m.nyquist.size() ? m.nyquist[static_cast<std::size_t>(f)] : 0.0;
        im[static_cast<std::size_t>(half)] = 0.0;
        for (int k = half + 1; k < p.n_fft; ++k) {  // conjugate symmetry
            re[static_cast<std::size_t>(k)] = re[static_cast<std::size_t>(p.n_fft - k)];
            im[static_cast<std::size_t>(k)] = -im[static_cast<std::size_t>(p.n_fft - k)];
        }
        const int start = f * p.hop;
        for (int t = 0; t < p.n_fft; ++t) {
            // inverse DFT (forward was scaled by 1/n, so no 1/n here)
            double v = 0.0;
            for (int k = 0; k < p.n_fft; ++k) {
                const std::size_t idx = static_cast<std::size_t>(k) * p.n_fft + t;
                v += re[static_cast<std::size_t>(k)] * tables.cos_t[idx] - im[static_cast<std::size_t>(k)] * tables.sin_t[idx];
            }
            const double w = window[static_cast<std::size_t>(t)];
            acc[static_cast<std::size_t>(start + t)] += w * v;
            wsum[static_cast<std::size_t>(start + t)] += w * w;
        }
    }

    TimeSeries out;
    out.values.assign(static_cast<std::size_t>(n), 0.0);
    out.observed.assign(static_cast<std::size_t>(n), 1);
    double last = 0.0;
    for (int t = 0; t < n; ++t) {
        if (wsum[static_cast<std::size_t>(t)] >= 1e-12) {
            last = acc[static_cast<std::size_t>(t)] / wsum[static_cast<std::size_t>(t)];
            out.values[static_cast<std::size_t>(t)] = last;
        } else {
            out.values[static_cast<std::size_t>(t)] = last;  // provisional; fixups below
        }
    }
    for (const auto& [idx, value] : m.edge_fixups)
        if (idx >= 0 && idx < n) out.values[static_cast<std::size_t>(idx)] = value;
    // A zero-weight sample with no stored value (generated tensor): copy the
    // nearest recovered neighbour.
    for (int t = 0; t < n; ++t) {
        if (wsum[static_cast<std::size_t>(t)] < 1e-12 && m.edge_fixups.empty()) {
            const int nb = t + 1 < n ? t + 1 : (t > 0 ? t - 1 : t);
            out.values[static_cast<std::size_t>(t)] = out.values[static_cast<std::size_t>(nb)];
        }
    }
    return out;
}

void dump_image_csv(const std::string& path, const ImageTensor& img) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<std::size_t>(img.channels) * kCanvas * kCanvas);
    for (int c = 0; c < img.channels; ++c)
        for (int r = 0; r < kCanvas; ++r)
            for (int col = 0; col < kCanvas; ++col)
                rows.push_back({std::to_string(c), std::to_string(r), std::to_string(col),
                                format_double(img.at(c, r, col))});
    write_csv(path, {"channel", "row", "col", "value"}, rows);
}

}  // namespace mrcdm
