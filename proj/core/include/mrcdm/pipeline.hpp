#pragma once

// End-to-end model: window chunking and padding, component encoding, the
// diffusion training loop, and sampling-based forecasting.
//
// Geometry: every encoded window is split into chunks of at most 96 samples
// (the canvas capacity for the tau=3, d=32 delay embedding). Forecast
// horizons are generated as whole 96-sample chunks and truncated; histories
// shorter than 64 samples are replicate-padded at the front so the
// transforms stay defined. Multi-chunk histories are channel-concatenated
// into the condition tensor (oldest chunk first); multi-chunk targets are
// generated chunk by chunk, distinguished by the chunk embedding.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrcdm/decompose.hpp"
#include "mrcdm/denoiser.hpp"
#include "mrcdm/diffusion.hpp"
#include "mrcdm/fusion.hpp"
#include "mrcdm/image.hpp"
#include "mrcdm/reconstructor.hpp"
#include "mrcdm/rng.hpp"
#include "mrcdm/schedule.hpp"
#include "mrcdm/timeseries.hpp"

namespace mrcdm {

/// Scalar type of the production model (tests instantiate the templated
/// layers in double where tight tolerances demand it).
using Real = float;

enum class Variant {
    FullModel,
    NoDecomposition,
    UnconditionalDiffusion,
    NoImageFusion,
    NoTrend1,
    NoTrend3,
};

const std::vector<Variant>& all_variants();
std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Each variant flips exactly one flag relative to the full model.
struct VariantFlags {
    bool decomposition = true;
    bool conditioning = true;
    bool lift = true;
    bool zero_trend1 = false;
    bool zero_trend3 = false;
};
VariantFlags variant_flags(Variant v);

struct ModelConfig {
    Variant variant = Variant::FullModel;
    int seq_len = 96;
    int horizon = 96;
    int diffusion_steps = 50;
    double beta_start = 2e-3;
    double beta_end = 0.4;
    int epochs = 50;
    int batch_size = 16;
    double learning_rate = 1e-3;
    double clip_norm = 1.0;
    int train_stride = 96;
    int sample_draws = 2;
    std::uint64_t seed = 42;
};

inline constexpr int kChunkPayload = 96;

/// Whole-chunk span covering a horizon.
int target_span(int horizon);
/// Balanced [begin, end) chunk spans, each at most kChunkPayload long.
std::vector<std::pair<int, int>> chunk_spans(int length);

/// One encoded chunk: component images in fused-layout order plus the
/// padding bookkeeping needed to crop decoded series.
struct NativeChunk {
    std::vector<ImageTensor> components;
    std::vector<nn::Mat<Real>> native_mats;  ///< cached [native_ch x 1024]
    int orig_len = 0;
    int pad_front = 0;
};

struct Model {
    ModelConfig cfg;
    VariantFlags flags;
    FusedLayout layout;
    NoiseSchedule schedule;

    nn::ParamStore<Real> diff_params;  ///< denoiser + lifts + null embedding
    Denoiser<Real> denoiser;
    std::vector<ChannelLift<Real>> lifts;
    int null_emb_idx = -1;

    nn::ParamStore<Real> recon_params;  ///< token projections, attention, weight head
    ReconHead<Real> recon;

    int hist_chunks = 1;
    int tgt_chunks = 1;

    int cond_channels() const { return layout.channels * hist_chunks; }
};

Model build_model(const ModelConfig& cfg);

/// Encodes a window into per-chunk component images under the given flags.
std::vector<NativeChunk> encode_window(const TimeSeries& window, const VariantFlags& flags,
                                       const FusedLayout& layout);

/// Applies the current lifts to one chunk's native images.
Fused<Real> fuse_chunk(const Model& model, const NativeChunk& chunk);

/// Condition tensor: lifted history chunks stacked along channels, or the
/// learned null embedding when conditioning is disabled.
nn::Mat<Real> condition_matrix(const Model& model, const std::vector<NativeChunk>& history);

/// Wraps generated [channels x 1024] data in a fused tensor with the
/// canonical masks/metas for a chunk of `chunk_len` samples (no stored
/// samples, so inversion uses its documented fallbacks).
Fused<Real> canonical_fused(const Model& model, nn::Mat<Real> data, int chunk_len);

/// Reconstruction of one fused chunk back to a series (adaptive weighting
/// over the inverted component paths).
TimeSeries reconstruct_chunk(const Model& model, const Fused<Real>& fused, int pad_front = 0);

struct TrainResult {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_recon_loss;
};

/// Trains the denoiser, lifts and reconstruction head on a (normalized)
/// training series. Deterministic given the config seed.
TrainResult train_model(Model& model, const TimeSeries& train_series);

/// Samples `cfg.sample_draws` forecasts conditioned on the history window
/// and returns their mean, truncated to the horizon. Deterministic given rng.
TimeSeries forecast(const Model& model, const TimeSeries& history, Rng& rng);

// --- checkpointing (see checkpoint.cpp) -----------------------------------

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);
std::uint64_t fnv1a64(const std::string& text);
std::string config_hash(const ModelConfig& cfg);

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace mrcdm
