#include "mrcdm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mrcdm/errors.hpp"

namespace mrcdm {

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v = {
        Variant::FullModel,       Variant::NoDecomposition, Variant::UnconditionalDiffusion,
        Variant::NoImageFusion,   Variant::NoTrend1,        Variant::NoTrend3,
    };
    return v;
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::FullModel: return "FullModel";
        case Variant::NoDecomposition: return "NoDecomposition";
        case Variant::UnconditionalDiffusion: return "UnconditionalDiffusion";
        case Variant::NoImageFusion: return "NoImageFusion";
        case Variant::NoTrend1: return "NoTrend1";
        case Variant::NoTrend3: return "NoTrend3";
    }
    throw ConfigError("variant_name: unknown variant");
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : all_variants())
        if (variant_name(v) == name) return v;
    throw ConfigError("unknown variant '" + name + "'");
}

VariantFlags variant_flags(Variant v) {
    VariantFlags f;
    switch (v) {
        case Variant::FullModel: break;
        case Variant::NoDecomposition: f.decomposition = false; break;
        case Variant::UnconditionalDiffusion: f.conditioning = false; break;
        case Variant::NoImageFusion: f.lift = false; break;
        case Variant::NoTrend1: f.zero_trend1 = true; break;
        case Variant::NoTrend3: f.zero_trend3 = true; break;
    }
    return f;
}

int target_span(int horizon) {
    if (horizon < 1) throw ConfigError("target_span: horizon must be positive");
    return ((horizon + kChunkPayload - 1) / kChunkPayload) * kChunkPayload;
}

std::vector<std::pair<int, int>> chunk_spans(int length) {
    if (length < 1) throw ConfigError("chunk_spans: length must be positive");
    const int chunks = (length + kChunkPayload - 1) / kChunkPayload;
    std::vector<std::pair<int, int>> spans;
    spans.reserve(static_cast<std::size_t>(chunks));
    int begin = 0;
    for (int c = 0; c < chunks; ++c) {
        const int size = length / chunks + (c < length % chunks ? 1 : 0);
        spans.emplace_back(begin, begin + size);
        begin += size;
    }
    return spans;
}

namespace {

constexpr int kMinEncodableLen = 64;  // stft needs one full frame

TimeSeries pad_front_to(const TimeSeries& s, int target_len) {
    const int pad = target_len - static_cast<int>(s.length());
    TimeSeries out;
    out.step_hours = s.step_hours;
    out.values.assign(static_cast<std::size_t>(pad), s.values.front());
    out.values.insert(out.values.end(), s.values.begin(), s.values.end());
    out.observed.assign(out.values.size(), 1);
    return out;
}

void zero_series(TimeSeries& s) { std::fill(s.values.begin(), s.values.end(), 0.0); }

NativeChunk encode_chunk(const TimeSeries& chunk, const VariantFlags& flags,
                         const FusedLayout& layout) {
    NativeChunk out;
    out.orig_len = static_cast<int>(chunk.length());
    TimeSeries window = chunk;
    if (out.orig_len < kMinEncodableLen) {
        window = pad_front_to(chunk, kMinEncodableLen);
        out.pad_front = kMinEncodableLen - out.orig_len;
    }

    if (flags.decomposition) {
        TrendComponents comp = decompose(window);
        if (flags.zero_trend1) zero_series(comp.trend1);
        if (flags.zero_trend3) zero_series(comp.trend3);
        out.components.push_back(delay_embed(comp.trend1));
        out.components.push_back(delay_embed(comp.trend2));
        out.components.push_back(stft(comp.trend3));
        out.components.push_back(delay_embed(comp.residual));
    } else {
        out.components.push_back(delay_embed(window));
    }
    if (out.components.size() != layout.blocks.size())
        throw NumericError("encode_chunk: component count does not match the layout");
    out.native_mats.reserve(out.components.size());
    for (const auto& img : out.components) out.native_mats.push_back(image_to_native<Real>(img));
    return out;
}

/// Canonical mask of a transform meta: every row of the first `valid_cols`
/// columns.
std::vector<std::uint8_t> mask_from_meta(const ImageMeta& meta) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(nn::kPixels), 0);
    for (int r = 0; r < nn::kSide; ++r)
        for (int c = 0; c < meta.valid_cols; ++c) mask[static_cast<std::size_t>(r) * nn::kSide + c] = 1;
    return mask;
}

}  // namespace

Model build_model(const ModelConfig& cfg) {
    if (cfg.seq_len < 2) throw ConfigError("build_model: seq_len must be >= 2");
    if (cfg.horizon < 1) throw ConfigError("build_model: horizon must be >= 1");
    if (cfg.batch_size < 1 || cfg.epochs < 0) throw ConfigError("build_model: bad training budget");

    Model m;
    m.cfg = cfg;
    m.flags = variant_flags(cfg.variant);
    m.layout = !m.flags.decomposition ? fused_layout_raw()
                                      : (m.flags.lift ? fused_layout_full() : fused_layout_native());
    m.schedule = make_linear_schedule(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end);
    m.hist_chunks = static_cast<int>(chunk_spans(cfg.seq_len).size());
    m.tgt_chunks = target_span(cfg.horizon) / kChunkPayload;

    Rng root(cfg.seed);
    Rng init = root.fork(1);
    for (const auto& block : m.layout.blocks)
        m.lifts.push_back(m.flags.lift ? make_learned_lift<Real>(m.diff_params, block, init)
                                       : make_identity_lift<Real>());
    m.null_emb_idx = m.diff_params.add("null_embedding", m.cond_channels(), nn::kPixels);
    m.diff_params.init_constant(m.null_emb_idx, Real(0));

    DenoiserConfig dc;
    dc.x_channels = m.layout.channels;
    dc.cond_channels = m.cond_channels();
    m.denoiser.register_params(m.diff_params, dc, init);
    m.recon.register_params(m.recon_params, m.layout, init);
    return m;
}

std::vector<NativeChunk> encode_window(const TimeSeries& window, const VariantFlags& flags,
                                       const FusedLayout& layout) {
    std::vector<NativeChunk> chunks;
    for (const auto& [begin, end] : chunk_spans(static_cast<int>(window.length())))
        chunks.push_back(encode_chunk(window.slice(static_cast<std::size_t>(begin),
                                                   static_cast<std::size_t>(end - begin)),
                                      flags, layout));
    return chunks;
}

Fused<Real> fuse_chunk(const Model& model, const NativeChunk& chunk) {
    return fuse(chunk.components, model.layout, model.diff_params, model.lifts);
}

nn::Mat<Real> condition_matrix(const Model& model, const std::vector<NativeChunk>& history) {
    if (!model.flags.conditioning) return model.diff_params.weight(model.null_emb_idx);
    if (static_cast<int>(history.size()) != model.hist_chunks)
        throw DataError("condition_matrix: expected " + std::to_string(model.hist_chunks) +
                        " history chunks, got " + std::to_string(history.size()));
    nn::Mat<Real> cond(model.cond_channels(), nn::kPixels);
    for (std::size_t c = 0; c < history.size(); ++c) {
        const Fused<Real> f = fuse_chunk(model, history[c]);
        cond.middleRows(static_cast<int>(c) * model.layout.channels, model.layout.channels) = f.data;
    }
    return cond;
}

Fused<Real> canonical_fused(const Model& model, nn::Mat<Real> data, int chunk_len) {
    Fused<Real> f;
    f.layout = model.layout;
    f.masks.resize(model.layout.blocks.size());
    f.metas.resize(model.layout.blocks.size());
    const int encoded_len = std::max(chunk_len, kMinEncodableLen);
    for (std::size_t i = 0; i < model.layout.blocks.size(); ++i) {
        const bool is_stft = model.flags.decomposition && model.layout.blocks[i].name == "trend3";
        f.metas[i] = is_stft ? stft_meta_for(encoded_len) : delay_meta_for(encoded_len);
        f.masks[i] = mask_from_meta(f.metas[i]);
    }
    // masked cells of a generated tensor are zeroed to honour the invariant
    for (std::size_t i = 0; i < model.layout.blocks.size(); ++i) {
        const auto& block = model.layout.blocks[i];
        for (int p = 0; p < nn::kPixels; ++p)
            if (!f.masks[i][static_cast<std::size_t>(p)])
                data.block(block.begin, p, block.lifted(), 1).setZero();
    }
    f.data = std::move(data);
    return f;
}

TimeSeries reconstruct_chunk(const Model& model, const Fused<Real>& fused, int pad_front) {
    const auto components = invert_components(fused, model.diff_params, model.lifts);
    ReconHeadCache<Real> cache;
    const ScaleWeights weights = model.recon.forward(model.recon_params, fused, cache);
    TimeSeries combined = adaptive_combine(components, weights);
    if (pad_front > 0)
        combined = combined.slice(static_cast<std::size_t>(pad_front),
                                  combined.length() - static_cast<std::size_t>(pad_front));
    return combined;
}

namespace {

struct TrainWindow {
    std::vector<NativeChunk> history;
    std::vector<NativeChunk> target;
    std::vector<TimeSeries> target_chunk_series;
};

}  // namespace

TrainResult train_model(Model& model, const TimeSeries& train_series) {
    const ModelConfig& cfg = model.cfg;
    const int span = target_span(cfg.horizon);
    const auto windows = make_windows(train_series, static_cast<std::size_t>(cfg.seq_len),
                                      static_cast<std::size_t>(span),
                                      static_cast<std::size_t>(cfg.train_stride));

    // Transforms are static; encode every window once up front.
    std::vector<TrainWindow> encoded;
    encoded.reserve(windows.size());
    for (const auto& w : windows) {
        TrainWindow tw;
        tw.history = encode_window(w.history, model.flags, model.layout);
        tw.target = encode_window(w.target, model.flags, model.layout);
        for (const auto& [begin, end] : chunk_spans(span))
            tw.target_chunk_series.push_back(w.target.slice(static_cast<std::size_t>(begin),
                                                            static_cast<std::size_t>(end - begin)));
        encoded.push_back(std::move(tw));
    }

    nn::Adam<Real> adam_diff, adam_recon;
    adam_diff.lr = cfg.learning_rate;
    adam_diff.clip_norm = cfg.clip_norm;
    adam_recon.lr = cfg.learning_rate;
    adam_recon.clip_norm = cfg.clip_norm;
    adam_diff.attach(model.diff_params);
    adam_recon.attach(model.recon_params);

    Rng root(cfg.seed);
    Rng train_rng = root.fork(2);
    DenoiserWorkspace<Real> ws;
    nn::Mat<Real> eps(model.layout.channels, nn::kPixels);
    TrainResult result;

    std::vector<std::size_t> order(encoded.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = root.fork(100 + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);

        double epoch_loss = 0.0, epoch_recon = 0.0;
        std::size_t n_samples = 0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            model.diff_params.zero_grad();
            model.recon_params.zero_grad();

            for (std::size_t bi = start; bi < stop; ++bi) {
                const TrainWindow& tw = encoded[order[bi]];
                const int chunk =
                    static_cast<int>(train_rng.below(static_cast<std::uint64_t>(model.tgt_chunks)));
                const int k =
                    static_cast<int>(train_rng.below(static_cast<std::uint64_t>(model.schedule.steps)));

                const Fused<Real> x0 = fuse_chunk(model, tw.target[static_cast<std::size_t>(chunk)]);
                const nn::Mat<Real> cond = condition_matrix(model, tw.history);
                const nn::Mat<Real> weights_mask = valid_cell_weights(x0);

                fill_normal(eps, train_rng);
                const nn::Mat<Real> x_k = q_sample(x0.data, k, eps, model.schedule);
                const auto& eps_hat =
                    model.denoiser.forward(model.diff_params, x_k, cond, k, chunk, ws);

                nn::Mat<Real> d_eps_hat;
                const double loss = masked_mse(eps_hat, eps, weights_mask, d_eps_hat);
                if (!std::isfinite(loss))
                    throw NumericError("train_model: non-finite loss at epoch " +
                                       std::to_string(epoch) + ", window " +
                                       std::to_string(order[bi]) + ", k=" + std::to_string(k));
                epoch_loss += loss;
                ++n_samples;

                nn::Mat<Real> d_xk, d_cond;
                model.denoiser.backward(model.diff_params, ws, d_eps_hat, model.diff_params.grad,
                                        &d_xk, &d_cond);

                // lift gradients: x_k = sqrt(abar) * x0 + ..., so d_x0 scales d_xk
                const double abar = model.schedule.alpha_bars[static_cast<std::size_t>(k)];
                const nn::Mat<Real> d_x0 = static_cast<Real>(std::sqrt(abar)) * d_xk;
                const NativeChunk& tgt = tw.target[static_cast<std::size_t>(chunk)];
                for (std::size_t b = 0; b < model.layout.blocks.size(); ++b) {
                    const auto& block = model.layout.blocks[b];
                    lift_channels_backward(model.diff_params, model.lifts[b], tgt.native_mats[b],
                                           x0.masks[b],
                                           d_x0.middleRows(block.begin, block.lifted()),
                                           model.diff_params.grad);
                }
                if (model.flags.conditioning) {
                    for (std::size_t c = 0; c < tw.history.size(); ++c) {
                        const NativeChunk& hist = tw.history[c];
                        for (std::size_t b = 0; b < model.layout.blocks.size(); ++b) {
                            const auto& block = model.layout.blocks[b];
                            lift_channels_backward(
                                model.diff_params, model.lifts[b], hist.native_mats[b],
                                hist.components[b].valid,
                                d_cond.middleRows(
                                    static_cast<int>(c) * model.layout.channels + block.begin,
                                    block.lifted()),
                                model.diff_params.grad);
                        }
                    }
                } else {
                    model.diff_params.gradient(model.null_emb_idx) += d_cond;
                }

                // Reconstruction head: train the adaptive weights on the
                // one-shot denoised estimate (detached from the denoiser).
                const double sqrt_abar = std::sqrt(abar);
                const double sqrt_1m = std::sqrt(1.0 - abar);
                nn::Mat<Real> x0_hat =
                    (x_k - static_cast<Real>(sqrt_1m) * eps_hat) / static_cast<Real>(sqrt_abar);
                Fused<Real> fused_hat = x0;  // masks/metas of the real chunk
                fused_hat.data = std::move(x0_hat);
                const auto comps = invert_components(fused_hat, model.diff_params, model.lifts);
                ReconHeadCache<Real> rcache;
                const ScaleWeights sw = model.recon.forward(model.recon_params, fused_hat, rcache);
                const TimeSeries yhat = adaptive_combine(comps, sw);
                const TimeSeries& y = tw.target_chunk_series[static_cast<std::size_t>(chunk)];

                const double paths = static_cast<double>(comps.size());
                const double n = static_cast<double>(y.length());
                nn::Vec<Real> d_w = nn::Vec<Real>::Zero(static_cast<int>(comps.size()));
                double rloss = 0.0;
                for (std::size_t t = 0; t < y.length(); ++t) {
                    const double err = yhat.values[t] - y.values[t];
                    rloss += err * err;
                    for (std::size_t s = 0; s < comps.size(); ++s)
                        d_w(static_cast<int>(s)) +=
                            static_cast<Real>(2.0 * err * paths * comps[s].values[t] / n);
                }
                epoch_recon += rloss / n;
                model.recon.backward(model.recon_params, rcache, d_w, model.recon_params.grad);
            }

            adam_diff.step(model.diff_params);
            adam_recon.step(model.recon_params);
        }

        result.epoch_loss.push_back(epoch_loss / static_cast<double>(n_samples));
        result.epoch_recon_loss.push_back(epoch_recon / static_cast<double>(n_samples));
    }
    return result;
}

TimeSeries forecast(const Model& model, const TimeSeries& history, Rng& rng) {
    if (static_cast<int>(history.length()) != model.cfg.seq_len)
        throw DataError("forecast: history length " + std::to_string(history.length()) +
                        " does not match the configured seq_len " +
                        std::to_string(model.cfg.seq_len));

    const auto hist = encode_window(history, model.flags, model.layout);
    const nn::Mat<Real> cond = condition_matrix(model, hist);

    TimeSeries out;
    out.step_hours = history.step_hours;
    DenoiserWorkspace<Real> ws;
    const int draws = std::max(1, model.cfg.sample_draws);
    for (int chunk = 0; chunk < model.tgt_chunks; ++chunk) {
        std::vector<double> acc(static_cast<std::size_t>(kChunkPayload), 0.0);
        for (int d = 0; d < draws; ++d) {
            Rng draw_rng = rng.fork(static_cast<std::uint64_t>(chunk) * 1000003ULL +
                                    static_cast<std::uint64_t>(d));
            nn::Mat<Real> x0 = p_sample_loop(model.denoiser, model.diff_params, cond,
                                             model.schedule, chunk, draw_rng, ws);
            const Fused<Real> fused = canonical_fused(model, std::move(x0), kChunkPayload);
            const TimeSeries series = reconstruct_chunk(model, fused);
            for (std::size_t t = 0; t < series.length(); ++t) acc[t] += series.values[t];
        }
        for (double& v : acc) v /= static_cast<double>(draws);
        out.values.insert(out.values.end(), acc.begin(), acc.end());
    }
    out.observed.assign(out.values.size(), 1);
    out.values.resize(static_cast<std::size_t>(model.cfg.horizon));
    out.observed.resize(static_cast<std::size_t>(model.cfg.horizon));
    return out;
}

}  // namespace mrcdm
