#pragma once

// Channel lifting and fusion: per-component images are lifted from their
// native channel counts (1 for delay-embedded components, 2 for the STFT
// component) to the declared block widths and concatenated into the fused
// tensor. The lift is a per-pixel-shared linear map whose first output rows
// copy the native channels, so the initialized lift composed with its
// pseudo-inverse is the identity on native channels.

#include <Eigen/Dense>
#include <string>
#include <type_traits>
#include <vector>

#include "mrcdm/errors.hpp"
#include "mrcdm/image.hpp"
#include "mrcdm/nn.hpp"

namespace mrcdm {

/// One channel block of the fused tensor.
struct FusedBlock {
    std::string name;
    int native_channels = 1;
    int begin = 0;  ///< first fused channel
    int end = 0;    ///< one past the last fused channel
    int lifted() const { return end - begin; }
};

struct FusedLayout {
    std::vector<FusedBlock> blocks;
    int channels = 0;
};

/// 7+7+14+7 fused layout; the STFT component owns the 14-channel block.
inline FusedLayout fused_layout_full() {
    FusedLayout l;
    l.blocks = {FusedBlock{"trend1", 1, 0, 7}, FusedBlock{"trend2", 1, 7, 14},
                FusedBlock{"trend3", 2, 14, 28}, FusedBlock{"residual", 1, 28, 35}};
    l.channels = 35;
    return l;
}

/// Native channels concatenated with no lift (1+1+2+1).
inline FusedLayout fused_layout_native() {
    FusedLayout l;
    l.blocks = {FusedBlock{"trend1", 1, 0, 1}, FusedBlock{"trend2", 1, 1, 2},
                FusedBlock{"trend3", 2, 2, 4}, FusedBlock{"residual", 1, 4, 5}};
    l.channels = 5;
    return l;
}

/// Raw series in a single 35-channel block (decomposition disabled).
inline FusedLayout fused_layout_raw() {
    FusedLayout l;
    l.blocks = {FusedBlock{"raw", 1, 0, 35}};
    l.channels = 35;
    return l;
}

/// Fused tensor: [channels x 1024] data plus, per block, the validity mask
/// and the transform record needed to invert it.
template <class T>
struct Fused {
    nn::Mat<T> data;
    FusedLayout layout;
    std::vector<std::vector<std::uint8_t>> masks;  ///< per block, 1024 cells
    std::vector<ImageMeta> metas;                  ///< per block

    int channels() const { return layout.channels; }
};

/// Per-pixel-shared linear lift for one block, stored in a ParamStore so it
/// trains with the diffusion objective. Identity lifts (used by the
/// native-concatenation variant) have no parameters.
template <class T>
struct ChannelLift {
    bool identity = false;
    int weight_idx = -1;  ///< [lifted x native]
    int bias_idx = -1;    ///< [lifted x 1]
};

template <class T>
ChannelLift<T> make_identity_lift() {
    ChannelLift<T> l;
    l.identity = true;
    return l;
}

/// Registers a lift for `block` and applies the documented initialization:
/// row i of the weight copies native channel i; remaining rows are
/// N(0, 0.02^2); bias zero.
template <class T>
ChannelLift<T> make_learned_lift(nn::ParamStore<T>& params, const FusedBlock& block, Rng& rng) {
    ChannelLift<T> l;
    l.weight_idx = params.add("lift." + block.name + ".weight", block.lifted(), block.native_channels);
    l.bias_idx = params.add("lift." + block.name + ".bias", block.lifted(), 1);
    params.init_normal(l.weight_idx, rng, 0.02);
    auto w = params.weight(l.weight_idx);
    for (int i = 0; i < block.native_channels; ++i)
        for (int j = 0; j < block.native_channels; ++j) w(i, j) = static_cast<T>(i == j ? 1 : 0);
    params.init_constant(l.bias_idx, T(0));
    return l;
}

/// Native channel matrix [native x 1024] of an image (all cells, masked ones
/// are zero by construction).
template <class T>
nn::Mat<T> image_to_native(const ImageTensor& img) {
    nn::Mat<T> out(img.channels, nn::kPixels);
    for (int c = 0; c < img.channels; ++c)
        for (int p = 0; p < nn::kPixels; ++p)
            out(c, p) = static_cast<T>(img.data[static_cast<std::size_t>(c) * nn::kPixels + p]);
    return out;
}

/// Writable/readonly views over channel blocks of a larger matrix.
template <class T>
using BlockRef = Eigen::Ref<nn::Mat<T>, 0, Eigen::OuterStride<>>;
template <class T>
using ConstBlockRef = Eigen::Ref<const nn::Mat<T>, 0, Eigen::OuterStride<>>;

/// Applies the lift to native channels; masked cells stay exactly zero (the
/// bias is only added on valid cells).
template <class T>
void lift_channels(const nn::ParamStore<T>& params, const ChannelLift<T>& lift,
                   const nn::Mat<T>& native, const std::vector<std::uint8_t>& mask,
                   std::type_identity_t<BlockRef<T>> out) {
    if (lift.identity) {
        if (out.rows() != native.rows())
            throw NumericError("lift_channels: identity lift arity mismatch");
        out = native;
        return;
    }
    const auto w = params.weight(lift.weight_idx);
    const auto b = params.weight(lift.bias_idx);
    if (w.cols() != native.rows())
        throw NumericError("lift_channels: lift expects " + std::to_string(w.cols()) +
                           " native channels, got " + std::to_string(native.rows()));
    out.noalias() = w * native;
    for (int p = 0; p < nn::kPixels; ++p) {
        if (mask[static_cast<std::size_t>(p)])
            out.col(p) += b.col(0);
        else
            out.col(p).setZero();
    }
}

/// Gradient of the lift given the upstream gradient on its output block.
template <class T>
void lift_channels_backward(const nn::ParamStore<T>& params, const ChannelLift<T>& lift,
                            const nn::Mat<T>& native, const std::vector<std::uint8_t>& mask,
                            const std::type_identity_t<ConstBlockRef<T>>& d_out,
                            std::vector<T>& grad_buffer) {
    if (lift.identity) return;
    nn::Mat<T> d_masked = d_out;
    for (int p = 0; p < nn::kPixels; ++p)
        if (!mask[static_cast<std::size_t>(p)]) d_masked.col(p).setZero();
    auto dw = params.gradient_in(grad_buffer, lift.weight_idx);
    auto db = params.gradient_in(grad_buffer, lift.bias_idx);
    dw.noalias() += d_masked * native.transpose();
    db.col(0) += d_masked.rowwise().sum();
}

/// Lifts the four component images (or the single raw image) and
/// concatenates them along channels in the fixed layout order.
template <class T>
Fused<T> fuse(const std::vector<ImageTensor>& components, const FusedLayout& layout,
              const nn::ParamStore<T>& params, const std::vector<ChannelLift<T>>& lifts) {
    if (components.size() != layout.blocks.size() || lifts.size() != layout.blocks.size())
        throw DataError("fuse: expected " + std::to_string(layout.blocks.size()) +
                        " components, got " + std::to_string(components.size()));

    Fused<T> f;
    f.layout = layout;
    f.data.setZero(layout.channels, nn::kPixels);
    f.masks.resize(layout.blocks.size());
    f.metas.resize(layout.blocks.size());
    for (std::size_t i = 0; i < layout.blocks.size(); ++i) {
        const FusedBlock& block = layout.blocks[i];
        const ImageTensor& img = components[i];
        if (img.channels != block.native_channels)
            throw DataError("fuse: component '" + block.name + "' has " +
                            std::to_string(img.channels) + " channels, expected " +
                            std::to_string(block.native_channels));
        f.masks[i] = img.valid;
        f.metas[i] = img.meta;
        const auto native = image_to_native<T>(img);
        lift_channels(params, lifts[i], native, img.valid, f.data.middleRows(block.begin, block.lifted()));
    }
    return f;
}

/// Exact inverse of the concatenation: slices the fixed layout back into
/// per-component images in the lifted channel space.
template <class T>
std::vector<ImageTensor> defuse(const Fused<T>& f) {
    std::vector<ImageTensor> out;
    out.reserve(f.layout.blocks.size());
    for (std::size_t i = 0; i < f.layout.blocks.size(); ++i) {
        const FusedBlock& block = f.layout.blocks[i];
        ImageTensor img;
        img.channels = block.lifted();
        img.data.assign(static_cast<std::size_t>(img.channels) * nn::kPixels, 0.0);
        img.valid = f.masks[i];
        img.meta = f.metas[i];
        for (int c = 0; c < img.channels; ++c)
            for (int p = 0; p < nn::kPixels; ++p)
                img.data[static_cast<std::size_t>(c) * nn::kPixels + p] =
                    static_cast<double>(f.data(block.begin + c, p));
        out.push_back(std::move(img));
    }
    return out;
}

/// Collapses a lifted block back to native channels with the lift's
/// least-squares pseudo-inverse (double precision regardless of T).
template <class T>
nn::Mat<double> collapse_block(const nn::ParamStore<T>& params, const ChannelLift<T>& lift,
                               const std::type_identity_t<ConstBlockRef<T>>& block_data,
                               const std::vector<std::uint8_t>& mask) {
    nn::Mat<double> lifted = block_data.template cast<double>();
    if (lift.identity) {
        for (int p = 0; p < nn::kPixels; ++p)
            if (!mask[static_cast<std::size_t>(p)]) lifted.col(p).setZero();
        return lifted;
    }
    const nn::Mat<double> w = params.weight(lift.weight_idx).template cast<double>();
    const nn::Mat<double> b = params.weight(lift.bias_idx).template cast<double>();
    const nn::Mat<double> pinv = w.completeOrthogonalDecomposition().pseudoInverse();
    nn::Mat<double> native(w.cols(), nn::kPixels);
    for (int p = 0; p < nn::kPixels; ++p) {
        if (mask[static_cast<std::size_t>(p)])
            native.col(p).noalias() = pinv * (lifted.col(p) - b.col(0));
        else
            native.col(p).setZero();
    }
    return native;
}

}  // namespace mrcdm
