#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrcdm/timeseries.hpp"

namespace mrcdm {

inline constexpr int kCanvas = 32;  ///< fixed image height/width

enum class TransformKind : std::uint8_t { DelayEmbed, Stft };

/// STFT configuration: 64-point frames at hop 16 (75% overlap) under a
/// periodic Hann window, which satisfies constant overlap-add.
struct StftParams {
    int n_fft = 64;
    int hop = 16;
};

/// Transform record carried with every image. Besides the geometry it stores
/// the few values a 32x32 canvas cannot hold, so encoding stays exactly
/// invertible:
///  - delay embedding: trailing samples not covered by any full window
///    (at most tau-1 of them when tau does not divide L-d);
///  - STFT: the Nyquist bin per frame (the canvas keeps bins 0..31), plus
///    samples whose overlap-add weight is zero (index 0 under periodic Hann).
/// Images decoded from *generated* tensors have no stored values; inversion
/// then falls back to replicating the nearest recovered sample / a zero
/// Nyquist row.
struct ImageMeta {
    TransformKind kind = TransformKind::DelayEmbed;
    int src_len = 0;
    int valid_cols = 0;
    // delay embedding
    int tau = 3;
    int dim = kCanvas;
    std::vector<double> tail;  ///< x[(q-1)*tau+dim .. L)
    // stft
    StftParams stft;
    std::vector<double> nyquist;                        ///< real Nyquist coefficient per frame
    std::vector<std::pair<int, double>> edge_fixups;    ///< (sample index, value)
};

/// channels x 32 x 32 real tensor with a validity mask (false where the
/// canvas is padding). Masked cells are exactly zero.
struct ImageTensor {
    int channels = 1;
    std::vector<double> data;        ///< channels * 32 * 32, channel-major
    std::vector<std::uint8_t> valid; ///< 32 * 32
    ImageMeta meta;

    double& at(int c, int r, int col) { return data[(static_cast<std::size_t>(c) * kCanvas + r) * kCanvas + col]; }
    double at(int c, int r, int col) const { return data[(static_cast<std::size_t>(c) * kCanvas + r) * kCanvas + col]; }
    bool valid_at(int r, int col) const { return valid[static_cast<std::size_t>(r) * kCanvas + col] != 0; }
};

/// Lagged-window embedding: column j holds x[j*tau .. j*tau+d). Requires
/// L >= d; the column count q = floor((L-d)/tau)+1 must fit the canvas
/// (q > 32 raises DataError instructing the caller to chunk).
ImageTensor delay_embed(const TimeSeries& x, int tau = 3, int d = kCanvas);

/// Overlap-average inversion; every sample is the mean of all cells that
/// encode it, so recovery from an encoded image is exact.
TimeSeries delay_embed_invert(const ImageTensor& img);

/// Windowed DFT per frame (periodic Hann, forward scaled by 1/n_fft); keeps
/// frequency bins 0..31 as 2 channels (real, imaginary). Requires L >= n_fft
/// and frame count <= 32.
ImageTensor stft(const TimeSeries& x, const StftParams& p = StftParams{});

/// Inverse DFT per frame, windowed overlap-add divided by the summed squared
/// window.
TimeSeries istft(const ImageTensor& img);

/// Canonical geometry for decoding generated tensors (no stored samples).
ImageMeta delay_meta_for(int src_len, int tau = 3, int d = kCanvas);
ImageMeta stft_meta_for(int src_len, const StftParams& p = StftParams{});

/// Frame/column counts used by both transforms (and their tests).
int delay_embed_columns(int src_len, int tau, int d);
int stft_frames(int src_len, const StftParams& p);

/// Debug dump as flat CSV rows (channel, row, col, value).
void dump_image_csv(const std::string& path, const ImageTensor& img);

}  // namespace mrcdm
