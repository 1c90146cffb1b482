#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mrcdm/errors.hpp"
#include "mrcdm/nn.hpp"

namespace mrcdm {

/// beta/alpha/alpha-bar arrays governing the diffusion process.
/// alpha_bars[k] is the running product of (1 - beta) up to and including
/// step k, so it is strictly decreasing and stays in (0,1).
struct NoiseSchedule {
    int steps = 0;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;
};

inline NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw ConfigError("make_linear_schedule: K must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ConfigError("make_linear_schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.steps = steps;
    s.betas.resize(static_cast<std::size_t>(steps));
    s.alphas.resize(static_cast<std::size_t>(steps));
    s.alpha_bars.resize(static_cast<std::size_t>(steps));
    double running = 1.0;
    for (int k = 0; k < steps; ++k) {
        const double beta =
            steps == 1 ? beta_start
                       : beta_start + (beta_end - beta_start) * static_cast<double>(k) /
                             static_cast<double>(steps - 1);
        s.betas[static_cast<std::size_t>(k)] = beta;
        s.alphas[static_cast<std::size_t>(k)] = 1.0 - beta;
        running *= 1.0 - beta;
        s.alpha_bars[static_cast<std::size_t>(k)] = running;
    }
    return s;
}

/// Closed-form forward noising: sqrt(abar_k) * x0 + sqrt(1 - abar_k) * eps.
/// Masking is a concern of the loss, not of the mix itself.
template <class T>
nn::Mat<T> q_sample(const nn::Mat<T>& x0, int k, const nn::Mat<T>& eps, const NoiseSchedule& s) {
    if (k < 0 || k >= s.steps) throw ConfigError("q_sample: step index out of range");
    if (x0.rows() != eps.rows() || x0.cols() != eps.cols())
        throw NumericError("q_sample: x0 and eps shapes differ");
    const double abar = s.alpha_bars[static_cast<std::size_t>(k)];
    const T a = static_cast<T>(std::sqrt(abar));
    const T b = static_cast<T>(std::sqrt(1.0 - abar));
    return a * x0 + b * eps;
}

}  // namespace mrcdm
