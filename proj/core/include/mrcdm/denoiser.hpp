#pragma once

// Compact convolutional denoiser. Contract: the condition tensor is
// channel-concatenated with the noisy input; a sinusoidal timestep embedding
// (dimension 64) is broadcast-added after a learned projection; four 3x3
// residual blocks at 64 feature maps with 8-group normalization and SiLU;
// a final 1x1 projection back to the input channel count. The 32x32 canvas
// is never down- or upsampled. A second embedding distinguishes target
// chunks when a horizon spans several canvases.

#include <array>
#include <vector>

#include "mrcdm/nn.hpp"

namespace mrcdm {

struct DenoiserConfig {
    int x_channels = 35;
    int cond_channels = 35;
    int hidden = 64;
    int blocks = 4;
    int groups = 8;
    int emb_dim = 64;
};

template <class T>
struct DenoiserWorkspace {
    int k = 0, chunk = 0;
    nn::Mat<T> input, h0, eps;
    nn::Conv3x3Cache<T> in_cache;
    struct Block {
        nn::GroupNormCache<T> gn1, gn2;
        nn::Mat<T> a1, a2;  // normalized activations feeding SiLU
        nn::Conv3x3Cache<T> conv1, conv2;
        nn::Mat<T> out;
    };
    std::vector<Block> blocks;
    nn::GroupNormCache<T> gn_final;
    nn::Mat<T> a_final, s_final;
    // scratch
    nn::Mat<T> t1, t2, dcol;
};

template <class T>
class Denoiser {
public:
    Denoiser() = default;

    /// Registers all parameters in `params` (fixed order) and initializes
    /// them: fan-in-scaled uniform for convolutions and projections, unit
    /// gain for the normalizations.
    void register_params(nn::ParamStore<T>& params, const DenoiserConfig& cfg, Rng& rng) {
        cfg_ = cfg;
        const int in_ch = cfg.x_channels + cfg.cond_channels;
        conv_in_w_ = params.add("denoiser.conv_in.weight", cfg.hidden, in_ch * 9);
        conv_in_b_ = params.add("denoiser.conv_in.bias", cfg.hidden, 1);
        params.init_uniform_fan_in(conv_in_w_, rng, in_ch * 9);
        params.init_constant(conv_in_b_, T(0));

        temb_w_ = params.add("denoiser.time_proj.weight", cfg.hidden, cfg.emb_dim);
        cemb_w_ = params.add("denoiser.chunk_proj.weight", cfg.hidden, cfg.emb_dim);
        params.init_uniform_fan_in(temb_w_, rng, cfg.emb_dim);
        params.init_uniform_fan_in(cemb_w_, rng, cfg.emb_dim);

        blocks_.clear();
        for (int b = 0; b < cfg.blocks; ++b) {
            BlockParams bp;
            const std::string prefix = "denoiser.block" + std::to_string(b);
            bp.gn1_gamma = params.add(prefix + ".gn1.gamma", cfg.hidden, 1);
            bp.gn1_beta = params.add(prefix + ".gn1.beta", cfg.hidden, 1);
            bp.conv1_w = params.add(prefix + ".conv1.weight", cfg.hidden, cfg.hidden * 9);
            bp.conv1_b = params.add(prefix + ".conv1.bias", cfg.hidden, 1);
            bp.gn2_gamma = params.add(prefix + ".gn2.gamma", cfg.hidden, 1);
            bp.gn2_beta = params.add(prefix + ".gn2.beta", cfg.hidden, 1);
            bp.conv2_w = params.add(prefix + ".conv2.weight", cfg.hidden, cfg.hidden * 9);
            bp.conv2_b = params.add(prefix + ".conv2.bias", cfg.hidden, 1);
            params.init_constant(bp.gn1_gamma, T(1));
            params.init_constant(bp.gn1_beta, T(0));
            params.init_uniform_fan_in(bp.conv1_w, rng, cfg.hidden * 9);
            params.init_constant(bp.conv1_b, T(0));
            params.init_constant(bp.gn2_gamma, T(1));
            params.init_constant(bp.gn2_beta, T(0));
            params.init_uniform_fan_in(bp.conv2_w, rng, cfg.hidden * 9);
            params.init_constant(bp.conv2_b, T(0));
            blocks_.push_back(bp);
        }

        gnf_gamma_ = params.add("denoiser.gn_final.gamma", cfg.hidden, 1);
        gnf_beta_ = params.add("denoiser.gn_final.beta", cfg.hidden, 1);
        conv_out_w_ = params.add("denoiser.conv_out.weight", cfg.x_channels, cfg.hidden);
        conv_out_b_ = params.add("denoiser.conv_out.bias", cfg.x_channels, 1);
        params.init_constant(gnf_gamma_, T(1));
        params.init_constant(gnf_beta_, T(0));
        params.init_uniform_fan_in(conv_out_w_, rng, cfg.hidden);
        params.init_constant(conv_out_b_, T(0));
    }

    const DenoiserConfig& config() const { return cfg_; }

    /// Predicted noise for one sample. Deterministic given parameters and
    /// inputs; the workspace caches activations for backward().
    const nn::Mat<T>& forward(const nn::ParamStore<T>& params, const nn::Mat<T>& x_k,
                              const nn::Mat<T>& cond, int k, int chunk_index,
                              DenoiserWorkspace<T>& ws) const {
        if (x_k.rows() != cfg_.x_channels || cond.rows() != cfg_.cond_channels ||
            x_k.cols() != nn::kPixels || cond.cols() != nn::kPixels)
            throw NumericError("Denoiser::forward: input shape mismatch");

        ws.k = k;
        ws.chunk = chunk_index;
        ws.blocks.resize(static_cast<std::size_t>(cfg_.blocks));
        ws.input.resize(cfg_.x_channels + cfg_.cond_channels, nn::kPixels);
        ws.input.topRows(cfg_.x_channels) = x_k;
        ws.input.bottomRows(cfg_.cond_channels) = cond;

        nn::conv3x3_forward(params.weight(conv_in_w_), params.weight(conv_in_b_), ws.input, ws.h0,
                            ws.in_cache);
        const auto temb = nn::sinusoidal_embedding<T>(k, cfg_.emb_dim);
        const auto cemb = nn::sinusoidal_embedding<T>(chunk_index, cfg_.emb_dim);
        nn::Vec<T> emb = params.weight(temb_w_) * temb + params.weight(cemb_w_) * cemb;
        ws.h0.colwise() += emb;

        const nn::Mat<T>* h = &ws.h0;
        for (int b = 0; b < cfg_.blocks; ++b) {
            auto& bw = ws.blocks[static_cast<std::size_t>(b)];
            const auto& bp = blocks_[static_cast<std::size_t>(b)];
            nn::groupnorm_forward(params.weight(bp.gn1_gamma), params.weight(bp.gn1_beta),
                                  cfg_.groups, *h, bw.a1, bw.gn1);
            nn::silu_forward(bw.a1, ws.t1);
            nn::conv3x3_forward(params.weight(bp.conv1_w), params.weight(bp.conv1_b), ws.t1, ws.t2,
                                bw.conv1);
            nn::groupnorm_forward(params.weight(bp.gn2_gamma), params.weight(bp.gn2_beta),
                                  cfg_.groups, ws.t2, bw.a2, bw.gn2);
            nn::silu_forward(bw.a2, ws.t1);
            nn::conv3x3_forward(params.weight(bp.conv2_w), params.weight(bp.conv2_b), ws.t1, ws.t2,
                                bw.conv2);
            bw.out = *h + ws.t2;  // residual connection
            h = &bw.out;
        }

        nn::groupnorm_forward(params.weight(gnf_gamma_), params.weight(gnf_beta_), cfg_.groups, *h,
                              ws.a_final, ws.gn_final);
        nn::silu_forward(ws.a_final, ws.s_final);
        nn::conv1x1_forward(params.weight(conv_out_w_), params.weight(conv_out_b_), ws.s_final,
                            ws.eps);
        return ws.eps;
    }

    /// Backpropagates d_eps through the cached forward pass, accumulating
    /// parameter gradients into `grad_buffer` (same layout as the store) and
    /// returning gradients with respect to x_k and cond.
    void backward(const nn::ParamStore<T>& params, DenoiserWorkspace<T>& ws, const nn::Mat<T>& d_eps,
                  std::vector<T>& grad_buffer, nn::Mat<T>* d_x, nn::Mat<T>* d_cond) const {
        nn::Mat<T> d_s;
        nn::conv1x1_backward(params.weight(conv_out_w_), ws.s_final, d_eps,
                             params.gradient_in(grad_buffer, conv_out_w_),
                             params.gradient_in(grad_buffer, conv_out_b_), d_s);
        nn::Mat<T> d_a;
        nn::silu_backward(ws.a_final, d_s, d_a);
        nn::Mat<T> d_h;
        nn::groupnorm_backward(params.weight(gnf_gamma_), cfg_.groups, ws.gn_final, d_a,
                               params.gradient_in(grad_buffer, gnf_gamma_),
                               params.gradient_in(grad_buffer, gnf_beta_), d_h);

        for (int b = cfg_.blocks - 1; b >= 0; --b) {
            auto& bw = ws.blocks[static_cast<std::size_t>(b)];
            const auto& bp = blocks_[static_cast<std::size_t>(b)];
            // branch: conv2 <- silu <- gn2 <- conv1 <- silu <- gn1
            nn::Mat<T> d_branch_in;
            nn::conv3x3_backward(params.weight(bp.conv2_w), bw.conv2, d_h,
                                 params.gradient_in(grad_buffer, bp.conv2_w),
                                 params.gradient_in(grad_buffer, bp.conv2_b), ws.t2, ws.dcol);
            nn::silu_backward(bw.a2, ws.t2, d_a);
            nn::groupnorm_backward(params.weight(bp.gn2_gamma), cfg_.groups, bw.gn2, d_a,
                                   params.gradient_in(grad_buffer, bp.gn2_gamma),
                                   params.gradient_in(grad_buffer, bp.gn2_beta), ws.t2);
            nn::conv3x3_backward(params.weight(bp.conv1_w), bw.conv1, ws.t2,
                                 params.gradient_in(grad_buffer, bp.conv1_w),
                                 params.gradient_in(grad_buffer, bp.conv1_b), ws.t1, ws.dcol);
            nn::silu_backward(bw.a1, ws.t1, d_a);
            nn::groupnorm_backward(params.weight(bp.gn1_gamma), cfg_.groups, bw.gn1, d_a,
                                   params.gradient_in(grad_buffer, bp.gn1_gamma),
                                   params.gradient_in(grad_buffer, bp.gn1_beta), d_branch_in);
            d_h += d_branch_in;  // residual path
        }

        // embeddings: broadcast add means the gradient is the column sum
        const nn::Vec<T> d_emb = d_h.rowwise().sum();
        const auto temb = nn::sinusoidal_embedding<T>(ws.k, cfg_.emb_dim);
        const auto cemb = nn::sinusoidal_embedding<T>(ws.chunk, cfg_.emb_dim);
        params.gradient_in(grad_buffer, temb_w_).noalias() += d_emb * temb.transpose();
        params.gradient_in(grad_buffer, cemb_w_).noalias() += d_emb * cemb.transpose();

        nn::Mat<T> d_input;
        nn::conv3x3_backward(params.weight(conv_in_w_), ws.in_cache, d_h,
                             params.gradient_in(grad_buffer, conv_in_w_),
                             params.gradient_in(grad_buffer, conv_in_b_), d_input, ws.dcol);
        if (d_x) *d_x = d_input.topRows(cfg_.x_channels);
        if (d_cond) *d_cond = d_input.bottomRows(cfg_.cond_channels);
    }

private:
    struct BlockParams {
        int gn1_gamma, gn1_beta, conv1_w, conv1_b;
        int gn2_gamma, gn2_beta, conv2_w, conv2_b;
    };

    DenoiserConfig cfg_;
    int conv_in_w_ = -1, conv_in_b_ = -1;
    int temb_w_ = -1, cemb_w_ = -1;
    std::vector<BlockParams> blocks_;
    int gnf_gamma_ = -1, gnf_beta_ = -1;
    int conv_out_w_ = -1, conv_out_b_ = -1;
};

}  // namespace mrcdm
