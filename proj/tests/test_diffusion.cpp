#include <doctest.h>

#include <cmath>
#include <functional>

#include "mrcdm/denoiser.hpp"
#include "mrcdm/diffusion.hpp"
#include "mrcdm/errors.hpp"
#include "mrcdm/rng.hpp"
#include "mrcdm/schedule.hpp"

using namespace mrcdm;

namespace {

nn::Mat<double> random_mat(Rng& rng, int rows, int cols, double scale = 1.0) {
    nn::Mat<double> m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-scale, scale);
    return m;
}

}  // namespace

TEST_CASE("linear schedule invariants over random configurations") {
    Rng rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const int steps = 1 + static_cast<int>(rng.below(200));
        const double b0 = rng.uniform(1e-5, 0.2);
        const double b1 = b0 + rng.uniform(0.0, 0.5);
        auto s = make_linear_schedule(steps, b0, std::min(b1, 0.999));

        REQUIRE(static_cast<int>(s.betas.size()) == steps);
        CHECK(s.alpha_bars[0] == doctest::Approx(1.0 - s.betas[0]).epsilon(1e-15));
        double running = 1.0;
        for (int k = 0; k < steps; ++k) {
            running *= 1.0 - s.betas[static_cast<std::size_t>(k)];
            CHECK(s.alpha_bars[static_cast<std::size_t>(k)] ==
                  doctest::Approx(running).epsilon(1e-12));
            CHECK(s.alpha_bars[static_cast<std::size_t>(k)] > 0.0);
            CHECK(s.alpha_bars[static_cast<std::size_t>(k)] < 1.0);
            if (k > 0)
                CHECK(s.alpha_bars[static_cast<std::size_t>(k)] <
                      s.alpha_bars[static_cast<std::size_t>(k - 1)]);
        }
    }
    SUBCASE("bad parameters rejected") {
        CHECK_THROWS_AS(make_linear_schedule(0, 0.1, 0.2), ConfigError);
        CHECK_THROWS_AS(make_linear_schedule(10, 0.0, 0.2), ConfigError);
        CHECK_THROWS_AS(make_linear_schedule(10, 0.3, 0.2), ConfigError);
        CHECK_THROWS_AS(make_linear_schedule(10, 0.3, 1.0), ConfigError);
    }
    SUBCASE("single-step schedule") {
        auto s = make_linear_schedule(1, 0.5, 0.5);
        CHECK(s.alpha_bars[0] == doctest::Approx(0.5));
    }
}

TEST_CASE("q_sample closed-form limits") {
    auto sched = make_linear_schedule(50, 2e-3, 0.4);
    Rng rng(2);
    nn::Mat<double> x0 = random_mat(rng, 4, 16);

    SUBCASE("eps = 0 gives sqrt(abar) * x0 exactly") {
        nn::Mat<double> eps = nn::Mat<double>::Zero(4, 16);
        for (int k : {0, 25, 49}) {
            auto xk = q_sample(x0, k, eps, sched);
            const double a = std::sqrt(sched.alpha_bars[static_cast<std::size_t>(k)]);
            for (int c = 0; c < 16; ++c)
                for (int r = 0; r < 4; ++r)
                    CHECK(xk(r, c) == doctest::Approx(a * x0(r, c)).epsilon(1e-15));
        }
    }
    SUBCASE("abar near one keeps x0") {
        auto tiny = make_linear_schedule(50, 1e-6, 1e-6);
        nn::Mat<double> eps = nn::Mat<double>::Zero(4, 16);
        auto xk = q_sample(x0, 0, eps, tiny);
        for (int c = 0; c < 16; ++c)
            for (int r = 0; r < 4; ++r) CHECK(xk(r, c) == doctest::Approx(x0(r, c)).epsilon(1e-5));
    }
    SUBCASE("shape mismatch is an error") {
        nn::Mat<double> eps = nn::Mat<double>::Zero(3, 16);
        CHECK_THROWS_AS(q_sample(x0, 0, eps, sched), NumericError);
        nn::Mat<double> ok = nn::Mat<double>::Zero(4, 16);
        CHECK_THROWS_AS(q_sample(x0, 50, ok, sched), ConfigError);
    }
}

TEST_CASE("q_sample Monte Carlo moments match the closed form") {
    auto sched = make_linear_schedule(50, 2e-3, 0.4);
    const double x0_value = 0.7;
    nn::Mat<double> x0(1, 1);
    x0(0, 0) = x0_value;
    Rng rng(3);

    for (int k : {0, 25, 49}) {
        const double abar = sched.alpha_bars[static_cast<std::size_t>(k)];
        const int n = 10000;
        double sum = 0.0, sum_sq = 0.0;
        nn::Mat<double> eps(1, 1);
        for (int i = 0; i < n; ++i) {
            eps(0, 0) = rng.normal();
            const double v = q_sample(x0, k, eps, sched)(0, 0);
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / n;
        const double var = sum_sq / n - mean * mean;
        const double true_mean = std::sqrt(abar) * x0_value;
        const double true_var = 1.0 - abar;
        const double se_mean = std::sqrt(true_var / n);
        const double se_var = true_var * std::sqrt(2.0 / (n - 1));
        CHECK(std::abs(mean - true_mean) < 3.0 * se_mean);
        CHECK(std::abs(var - true_var) < 3.0 * se_var);
    }
}

TEST_CASE("loss of a denoiser returning the true eps is zero") {
    Rng rng(4);
    nn::Mat<double> eps = random_mat(rng, 8, 32);
    nn::Mat<double> weights = nn::Mat<double>::Ones(8, 32);
    nn::Mat<double> d;
    CHECK(masked_mse(eps, eps, weights, d) == 0.0);
    for (int c = 0; c < 32; ++c)
        for (int r = 0; r < 8; ++r) CHECK(d(r, c) == 0.0);

    SUBCASE("masked cells do not contribute") {
        nn::Mat<double> pred = eps;
        pred(0, 0) += 100.0;  // corrupt one cell, then mask it out
        weights(0, 0) = 0.0;
        CHECK(masked_mse(pred, eps, weights, d) == 0.0);
    }
    SUBCASE("loss is non-negative and grows with error") {
        nn::Mat<double> pred = eps;
        pred.array() += 0.5;
        nn::Mat<double> all = nn::Mat<double>::Ones(8, 32);
        CHECK(masked_mse(pred, eps, all, d) == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("K=1 oracle sampling recovers x0") {
    // The oracle returns the exact eps that the forward corruption used for
    // the current state, so one reverse step must invert the corruption.
    auto sched = make_linear_schedule(1, 0.5, 0.5);
    Rng rng(5);
    nn::Mat<double> x0 = random_mat(rng, 2, nn::kPixels);
    const double abar = sched.alpha_bars[0];

    nn::Mat<double> eps_store;
    auto oracle = [&](const nn::Mat<double>& x, int) -> const nn::Mat<double>& {
        eps_store = (x - std::sqrt(abar) * x0) / std::sqrt(1.0 - abar);
        return eps_store;
    };
    Rng sample_rng(6);
    auto rec = p_sample_loop_with<double>(oracle, 2, sched, sample_rng);
    for (int c = 0; c < nn::kPixels; ++c)
        for (int r = 0; r < 2; ++r) CHECK(rec(r, c) == doctest::Approx(x0(r, c)).epsilon(1e-5));
}

TEST_CASE("sampling is deterministic given the seed") {
    auto sched = make_linear_schedule(5, 0.01, 0.3);
    nn::Mat<double> zero = nn::Mat<double>::Zero(3, nn::kPixels);
    auto fn = [&](const nn::Mat<double>&, int) -> const nn::Mat<double>& { return zero; };
    Rng a(7), b(7);
    auto xa = p_sample_loop_with<double>(fn, 3, sched, a);
    auto xb = p_sample_loop_with<double>(fn, 3, sched, b);
    CHECK((xa - xb).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("denoiser forward contract") {
    DenoiserConfig cfg;
    cfg.x_channels = 35;
    cfg.cond_channels = 35;
    nn::ParamStore<double> params;
    Denoiser<double> net;
    Rng rng(8);
    net.register_params(params, cfg, rng);

    Rng data_rng(9);
    nn::Mat<double> x = random_mat(data_rng, 35, nn::kPixels);
    nn::Mat<double> cond = random_mat(data_rng, 35, nn::kPixels);
    DenoiserWorkspace<double> ws;

    SUBCASE("output shape matches the input tensor") {
        const auto& out = net.forward(params, x, cond, 3, 0, ws);
        CHECK(out.rows() == 35);
        CHECK(out.cols() == nn::kPixels);
    }
    SUBCASE("two identical calls are bitwise identical") {
        nn::Mat<double> out1 = net.forward(params, x, cond, 3, 0, ws);
        nn::Mat<double> out2 = net.forward(params, x, cond, 3, 0, ws);
        CHECK((out1 - out2).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("timestep and chunk embeddings change the output") {
        nn::Mat<double> out1 = net.forward(params, x, cond, 1, 0, ws);
        nn::Mat<double> out2 = net.forward(params, x, cond, 7, 0, ws);
        nn::Mat<double> out3 = net.forward(params, x, cond, 1, 1, ws);
        CHECK((out1 - out2).cwiseAbs().maxCoeff() > 0.0);
        CHECK((out1 - out3).cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("shape mismatch raises") {
        nn::Mat<double> bad = random_mat(data_rng, 3, nn::kPixels);
        CHECK_THROWS_AS(net.forward(params, bad, cond, 0, 0, ws), NumericError);
    }
}

TEST_CASE("denoiser analytic gradients match central finite differences") {
    // Small hidden width keeps the check fast; every layer type is hit.
    DenoiserConfig cfg;
    cfg.x_channels = 5;
    cfg.cond_channels = 5;
    cfg.hidden = 16;
    cfg.blocks = 2;
    cfg.groups = 4;
    cfg.emb_dim = 16;

    nn::ParamStore<double> params;
    Denoiser<double> net;
    Rng rng(10);
    net.register_params(params, cfg, rng);

    Rng data_rng(11);
    nn::Mat<double> x = random_mat(data_rng, 5, nn::kPixels, 0.8);
    nn::Mat<double> cond = random_mat(data_rng, 5, nn::kPixels, 0.8);
    nn::Mat<double> target = random_mat(data_rng, 5, nn::kPixels, 0.8);
    nn::Mat<double> weights = nn::Mat<double>::Ones(5, nn::kPixels);
    const int k = 3, chunk = 1;

    auto loss_fn = [&]() {
        DenoiserWorkspace<double> ws;
        nn::Mat<double> d;
        return masked_mse(net.forward(params, x, cond, k, chunk, ws), target, weights, d);
    };

    // analytic gradient
    DenoiserWorkspace<double> ws;
    nn::Mat<double> d_eps;
    masked_mse(net.forward(params, x, cond, k, chunk, ws), target, weights, d_eps);
    params.zero_grad();
    net.backward(params, ws, d_eps, params.grad, nullptr, nullptr);

    Rng pick(12);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 120) {
        const std::size_t i = static_cast<std::size_t>(pick.below(params.size()));
        const double saved = params.theta[i];
        params.theta[i] = saved + h;
        const double lp = loss_fn();
        params.theta[i] = saved - h;
        const double lm = loss_fn();
        params.theta[i] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = params.grad[i];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        CHECK(std::abs(numeric - analytic) / denom < 1e-4);
        ++checked;
    }
}

TEST_CASE("gradients flow to the condition input") {
    DenoiserConfig cfg;
    cfg.x_channels = 4;
    cfg.cond_channels = 4;
    cfg.hidden = 8;
    cfg.blocks = 1;
    cfg.groups = 2;
    cfg.emb_dim = 8;
    nn::ParamStore<double> params;
    Denoiser<double> net;
    Rng rng(13);
    net.register_params(params, cfg, rng);

    Rng data_rng(14);
    nn::Mat<double> x = random_mat(data_rng, 4, nn::kPixels);
    nn::Mat<double> cond = random_mat(data_rng, 4, nn::kPixels);
    nn::Mat<double> target = random_mat(data_rng, 4, nn::kPixels);
    nn::Mat<double> weights = nn::Mat<double>::Ones(4, nn::kPixels);

    DenoiserWorkspace<double> ws;
    nn::Mat<double> d_eps;
    masked_mse(net.forward(params, x, cond, 0, 0, ws), target, weights, d_eps);
    params.zero_grad();
    nn::Mat<double> d_x, d_cond;
    net.backward(params, ws, d_eps, params.grad, &d_x, &d_cond);

    // finite difference on one x cell and one cond cell
    const double h = 1e-6;
    auto loss_at = [&]() {
        DenoiserWorkspace<double> w2;
        nn::Mat<double> d;
        return masked_mse(net.forward(params, x, cond, 0, 0, w2), target, weights, d);
    };
    for (auto [r, c] : {std::pair{1, 100}, std::pair{3, 777}}) {
        double saved = x(r, c);
        x(r, c) = saved + h;
        const double lp = loss_at();
        x(r, c) = saved - h;
        const double lm = loss_at();
        x(r, c) = saved;
        CHECK(d_x(r, c) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-4));

        saved = cond(r, c);
        cond(r, c) = saved + h;
        const double lpc = loss_at();
        cond(r, c) = saved - h;
        const double lmc = loss_at();
        cond(r, c) = saved;
        CHECK(d_cond(r, c) == doctest::Approx((lpc - lmc) / (2 * h)).epsilon(1e-4));
    }
}
