#pragma once

// Training objective and ancestral sampling for the conditional denoising
// diffusion process. The loss is the mean squared error between the drawn
// noise and the prediction, restricted to valid (unpadded) cells.

#include <cmath>

#include "mrcdm/denoiser.hpp"
#include "mrcdm/fusion.hpp"
#include "mrcdm/nn.hpp"
#include "mrcdm/rng.hpp"
#include "mrcdm/schedule.hpp"

namespace mrcdm {

/// Per-channel validity weights of a fused tensor (1 on valid cells of the
/// owning block, 0 elsewhere).
template <class T>
nn::Mat<T> valid_cell_weights(const Fused<T>& fused) {
    nn::Mat<T> w = nn::Mat<T>::Zero(fused.channels(), nn::kPixels);
    for (std::size_t i = 0; i < fused.layout.blocks.size(); ++i) {
        const auto& block = fused.layout.blocks[i];
        for (int p = 0; p < nn::kPixels; ++p)
            if (fused.masks[i][static_cast<std::size_t>(p)])
                w.block(block.begin, p, block.lifted(), 1).setConstant(T(1));
    }
    return w;
}

/// Fills a matrix with standard normal draws in column-major order.
template <class T>
void fill_normal(nn::Mat<T>& m, Rng& rng) {
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r) m(r, c) = static_cast<T>(rng.normal());
}

/// Masked mean squared error plus its gradient with respect to `pred`.
template <class T>
double masked_mse(const nn::Mat<T>& pred, const nn::Mat<T>& target, const nn::Mat<T>& weights,
                  nn::Mat<T>& d_pred) {
    double n_valid = 0.0;
    for (int c = 0; c < weights.cols(); ++c)
        for (int r = 0; r < weights.rows(); ++r) n_valid += static_cast<double>(weights(r, c));
    if (n_valid <= 0.0) throw NumericError("masked_mse: no valid cells");

    double loss = 0.0;
    d_pred.resize(pred.rows(), pred.cols());
    for (int c = 0; c < pred.cols(); ++c) {
        for (int r = 0; r < pred.rows(); ++r) {
            const double w = static_cast<double>(weights(r, c));
            const double e = (static_cast<double>(pred(r, c)) - static_cast<double>(target(r, c))) * w;
            loss += e * e;
            d_pred(r, c) = static_cast<T>(2.0 * e / n_valid);
        }
    }
    return loss / n_valid;
}

/// Ancestral sampling driven by an arbitrary noise predictor
/// eps_fn(x, k) -> eps_hat: start from standard normal x^K and iterate the
/// DDPM posterior mean with sigma_k^2 = beta_k; the final step adds no noise.
template <class T, class EpsFn>
nn::Mat<T> p_sample_loop_with(EpsFn&& eps_fn, int channels, const NoiseSchedule& sched, Rng& rng) {
    nn::Mat<T> x(channels, nn::kPixels);
    fill_normal(x, rng);

    nn::Mat<T> z(channels, nn::kPixels);
    for (int k = sched.steps - 1; k >= 0; --k) {
        const double beta = sched.betas[static_cast<std::size_t>(k)];
        const double alpha = sched.alphas[static_cast<std::size_t>(k)];
        const double abar = sched.alpha_bars[static_cast<std::size_t>(k)];
        const nn::Mat<T>& eps_hat = eps_fn(x, k);

        const T coef = static_cast<T>(beta / std::sqrt(1.0 - abar));
        const T inv_sqrt_alpha = static_cast<T>(1.0 / std::sqrt(alpha));
        x = inv_sqrt_alpha * (x - coef * eps_hat);
        if (k > 0) {
            fill_normal(z, rng);
            x += static_cast<T>(std::sqrt(beta)) * z;
        }
    }
    return x;
}

/// Ancestral sampling with the trained denoiser as the noise predictor.
template <class T>
nn::Mat<T> p_sample_loop(const Denoiser<T>& denoiser, const nn::ParamStore<T>& params,
                         const nn::Mat<T>& cond, const NoiseSchedule& sched, int chunk_index,
                         Rng& rng, DenoiserWorkspace<T>& ws) {
    return p_sample_loop_with<T>(
        [&](const nn::Mat<T>& x, int k) -> const nn::Mat<T>& {
            return denoiser.forward(params, x, cond, k, chunk_index, ws);
        },
        denoiser.config().x_channels, sched, rng);
}

}  // namespace mrcdm
