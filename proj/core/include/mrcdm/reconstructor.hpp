#pragma once

// Hierarchical reconstruction: collapse each fused block to native channels
// via the lift's pseudo-inverse, invert the per-component image transforms,
// and combine the component series under adaptive weights. The weights come
// from a small head: per-block global-average-pooled features are projected
// to 64-dimensional tokens, refined by residual single-head attention over
// the scale tokens, and mapped through a linear layer plus softmax. With the
// attention output projection and the weight head at zero (their
// initialization), the weights are uniform and the combination reduces to
// plain recomposition.

#include <vector>

#include "mrcdm/decompose.hpp"
#include "mrcdm/errors.hpp"
#include "mrcdm/fusion.hpp"
#include "mrcdm/image.hpp"
#include "mrcdm/nn.hpp"
#include "mrcdm/timeseries.hpp"

namespace mrcdm {

/// Simplex weights over the component paths.
struct ScaleWeights {
    std::vector<double> w;
};

template <class T>
struct ReconHeadCache {
    std::vector<nn::Vec<T>> pooled;   // per block, [lifted]
    nn::Mat<T> tokens;                // [64 x P]
    nn::Mat<T> q, key, value, attn;   // attention intermediates
    std::vector<nn::Vec<T>> attn_rows;
    nn::Mat<T> refined;               // tokens + Wo * Z
    nn::Vec<T> scores, weights;
};

template <class T>
class ReconHead {
public:
    static constexpr int kTokenDim = 64;

    void register_params(nn::ParamStore<T>& params, const FusedLayout& layout, Rng& rng) {
        paths_ = static_cast<int>(layout.blocks.size());
        token_proj_.clear();
        for (const auto& block : layout.blocks) {
            const int idx = params.add("recon.token." + block.name + ".weight", kTokenDim,
                                       block.lifted());
            params.init_uniform_fan_in(idx, rng, block.lifted());
            token_proj_.push_back(idx);
        }
        wq_ = params.add("recon.attn.query.weight", kTokenDim, kTokenDim);
        wk_ = params.add("recon.attn.key.weight", kTokenDim, kTokenDim);
        wv_ = params.add("recon.attn.value.weight", kTokenDim, kTokenDim);
        wo_ = params.add("recon.attn.out.weight", kTokenDim, kTokenDim);
        params.init_uniform_fan_in(wq_, rng, kTokenDim);
        params.init_uniform_fan_in(wk_, rng, kTokenDim);
        params.init_uniform_fan_in(wv_, rng, kTokenDim);
        params.init_constant(wo_, T(0));  // residual attention starts as identity

        head_w_ = params.add("recon.head.weight", 1, kTokenDim);
        head_b_ = params.add("recon.head.bias", 1, 1);
        params.init_constant(head_w_, T(0));  // uniform weights at initialization
        params.init_constant(head_b_, T(0));
    }

    int paths() const { return paths_; }

    /// Weights from the fused tensor's blocks (mask-aware global average
    /// pooling per block).
    ScaleWeights forward(const nn::ParamStore<T>& params, const Fused<T>& fused,
                         ReconHeadCache<T>& cache) const {
        const auto& blocks = fused.layout.blocks;
        if (static_cast<int>(blocks.size()) != paths_)
            throw NumericError("ReconHead::forward: layout path count mismatch");

        cache.pooled.resize(blocks.size());
        cache.tokens.resize(kTokenDim, paths_);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const auto& block = blocks[i];
            nn::Vec<T> pooled = nn::Vec<T>::Zero(block.lifted());
            int n_valid = 0;
            for (int p = 0; p < nn::kPixels; ++p) {
                if (!fused.masks[i][static_cast<std::size_t>(p)]) continue;
                pooled += fused.data.col(p).segment(block.begin, block.lifted());
                ++n_valid;
            }
            if (n_valid > 0) pooled /= static_cast<T>(n_valid);
            cache.pooled[i] = pooled;
            cache.tokens.col(static_cast<int>(i)).noalias() =
                params.weight(token_proj_[i]) * pooled;
        }

        // single-head scaled dot-product attention over the P tokens
        cache.q.noalias() = params.weight(wq_) * cache.tokens;
        cache.key.noalias() = params.weight(wk_) * cache.tokens;
        cache.value.noalias() = params.weight(wv_) * cache.tokens;
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(kTokenDim)));
        nn::Mat<T> scores = (cache.q.transpose() * cache.key) * scale;  // [P x P]
        cache.attn.resize(paths_, paths_);
        cache.attn_rows.resize(static_cast<std::size_t>(paths_));
        for (int r = 0; r < paths_; ++r) {
            nn::Vec<T> row = scores.row(r).transpose();
            cache.attn_rows[static_cast<std::size_t>(r)] = nn::softmax(row);
            cache.attn.row(r) = cache.attn_rows[static_cast<std::size_t>(r)].transpose();
        }
        nn::Mat<T> z = cache.value * cache.attn.transpose();  // token r attends with row r
        cache.refined = cache.tokens + params.weight(wo_) * z;

        cache.scores.resize(paths_);
        const auto hw = params.weight(head_w_);
        const auto hb = params.weight(head_b_);
        for (int p = 0; p < paths_; ++p)
            cache.scores(p) = (hw * cache.refined.col(p))(0, 0) + hb(0, 0);
        cache.weights = nn::softmax(cache.scores);

        ScaleWeights out;
        out.w.resize(static_cast<std::size_t>(paths_));
        for (int p = 0; p < paths_; ++p) out.w[static_cast<std::size_t>(p)] = static_cast<double>(cache.weights(p));
        return out;
    }

    /// Backward from d(weights); accumulates into grad_buffer. Gradients do
    /// not flow into the fused tensor (pooled features are treated as data).
    void backward(const nn::ParamStore<T>& params, const ReconHeadCache<T>& cache,
                  const nn::Vec<T>& d_weights, std::vector<T>& grad_buffer) const {
        const nn::Vec<T> d_scores = nn::softmax_backward(cache.weights, d_weights);

        auto d_head_w = params.gradient_in(grad_buffer, head_w_);
        auto d_head_b = params.gradient_in(grad_buffer, head_b_);
        nn::Mat<T> d_refined = nn::Mat<T>::Zero(kTokenDim, paths_);
        const auto hw = params.weight(head_w_);
        for (int p = 0; p < paths_; ++p) {
            d_head_w.row(0) += d_scores(p) * cache.refined.col(p).transpose();
            d_head_b(0, 0) += d_scores(p);
            d_refined.col(p) = hw.row(0).transpose() * d_scores(p);
        }

        // refined = tokens + Wo * (V * A^T)
        nn::Mat<T> d_tokens = d_refined;
        const nn::Mat<T> z = cache.value * cache.attn.transpose();
        params.gradient_in(grad_buffer, wo_).noalias() += d_refined * z.transpose();
        nn::Mat<T> d_z = params.weight(wo_).transpose() * d_refined;

        nn::Mat<T> d_value = d_z * cache.attn;
        nn::Mat<T> d_attn = cache.value.transpose() * d_z;  // [P x P], d wrt A^T -> transpose
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(kTokenDim)));
        nn::Mat<T> d_scores_mat(paths_, paths_);
        for (int r = 0; r < paths_; ++r) {
            nn::Vec<T> da_row = d_attn.col(r);  // row r of A
            const nn::Vec<T> ds = nn::softmax_backward(cache.attn_rows[static_cast<std::size_t>(r)], da_row);
            d_scores_mat.row(r) = ds.transpose();
        }
        nn::Mat<T> d_q = cache.key * d_scores_mat.transpose() * scale;
        nn::Mat<T> d_k = cache.q * d_scores_mat * scale;

        params.gradient_in(grad_buffer, wq_).noalias() += d_q * cache.tokens.transpose();
        params.gradient_in(grad_buffer, wk_).noalias() += d_k * cache.tokens.transpose();
        params.gradient_in(grad_buffer, wv_).noalias() += d_value * cache.tokens.transpose();
        d_tokens.noalias() += params.weight(wq_).transpose() * d_q;
        d_tokens.noalias() += params.weight(wk_).transpose() * d_k;
        d_tokens.noalias() += params.weight(wv_).transpose() * d_value;

        for (std::size_t i = 0; i < token_proj_.size(); ++i)
            params.gradient_in(grad_buffer, token_proj_[i]).noalias() +=
                d_tokens.col(static_cast<int>(i)) * cache.pooled[i].transpose();
    }

private:
    int paths_ = 0;
    std::vector<int> token_proj_;
    int wq_ = -1, wk_ = -1, wv_ = -1, wo_ = -1;
    int head_w_ = -1, head_b_ = -1;
};

/// Collapses every block of the fused tensor to native channels and inverts
/// its transform; returns one series per block (horizon/window length).
template <class T>
std::vector<TimeSeries> invert_components(const Fused<T>& fused, const nn::ParamStore<T>& params,
                                          const std::vector<ChannelLift<T>>& lifts) {
    const auto& blocks = fused.layout.blocks;
    if (lifts.size() != blocks.size()) throw NumericError("invert_components: lift count mismatch");

    std::vector<TimeSeries> series;
    series.reserve(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& block = blocks[i];
        if (fused.metas[i].src_len <= 0)
            throw DataError("invert_components: block '" + block.name + "' is missing its meta");
        const nn::Mat<double> native =
            collapse_block(params, lifts[i], fused.data.middleRows(block.begin, block.lifted()),
                           fused.masks[i]);
        ImageTensor img;
        img.channels = static_cast<int>(native.rows());
        img.data.assign(static_cast<std::size_t>(img.channels) * nn::kPixels, 0.0);
        img.valid = fused.masks[i];
        img.meta = fused.metas[i];
        for (int c = 0; c < img.channels; ++c)
            for (int p = 0; p < nn::kPixels; ++p)
                img.data[static_cast<std::size_t>(c) * nn::kPixels + p] = native(c, p);
        series.push_back(img.meta.kind == TransformKind::Stft ? istft(img) : delay_embed_invert(img));
    }
    return series;
}

/// forecast = sum_s P * w_s * component_s, so uniform weights reproduce the
/// plain component sum.
inline TimeSeries adaptive_combine(const std::vector<TimeSeries>& components,
                                   const ScaleWeights& weights) {
    if (components.empty() || components.size() != weights.w.size())
        throw DataError("adaptive_combine: component/weight count mismatch");
    const double paths = static_cast<double>(components.size());
    TimeSeries out = components.front();
    std::fill(out.values.begin(), out.values.end(), 0.0);
    for (std::size_t s = 0; s < components.size(); ++s) {
        if (components[s].length() != out.length())
            throw DataError("adaptive_combine: component lengths differ");
        for (std::size_t t = 0; t < out.length(); ++t)
            out.values[t] += paths * weights.w[s] * components[s].values[t];
    }
    return out;
}

}  // namespace mrcdm
