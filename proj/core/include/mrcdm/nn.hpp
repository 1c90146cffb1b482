#pragma once

// Small dense-layer toolkit backing the denoiser and the reconstruction
// head: flat parameter storage, 3x3/1x1 convolutions on the 32x32 canvas via
// im2col and Eigen matrix products, group normalization, SiLU, linear maps,
// single-head attention over a few tokens, and Adam with global-norm
// gradient clipping. Everything is templated on the scalar so training runs
// in float while gradient checks instantiate double.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mrcdm/errors.hpp"
#include "mrcdm/rng.hpp"

namespace mrcdm::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MatMap = Eigen::Map<Mat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

/// Named parameter tensors in one flat buffer, so per-sample gradient
/// buffers can be summed in a fixed order and checkpoints can serialize a
/// flat list.
template <class T>
struct ParamStore {
    struct Entry {
        std::string name;
        std::ptrdiff_t offset = 0;
        int rows = 0;
        int cols = 0;
    };

    std::vector<Entry> entries;
    std::vector<T> theta;
    std::vector<T> grad;

    int add(const std::string& name, int rows, int cols) {
        entries.push_back(Entry{name, static_cast<std::ptrdiff_t>(theta.size()), rows, cols});
        theta.resize(theta.size() + static_cast<std::size_t>(rows) * cols, T(0));
        grad.resize(theta.size(), T(0));
        return static_cast<int>(entries.size()) - 1;
    }

    std::size_t size() const { return theta.size(); }

    MatMap<T> weight(int idx) {
        const Entry& e = entries[static_cast<std::size_t>(idx)];
        return MatMap<T>(theta.data() + e.offset, e.rows, e.cols);
    }
    ConstMatMap<T> weight(int idx) const {
        const Entry& e = entries[static_cast<std::size_t>(idx)];
        return ConstMatMap<T>(theta.data() + e.offset, e.rows, e.cols);
    }
    MatMap<T> gradient(int idx) { return gradient_in(grad, idx); }

    /// View of entry `idx` inside an external flat gradient buffer with the
    /// same layout (per-sample accumulation).
    MatMap<T> gradient_in(std::vector<T>& buffer, int idx) const {
        const Entry& e = entries[static_cast<std::size_t>(idx)];
        return MatMap<T>(buffer.data() + e.offset, e.rows, e.cols);
    }

    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }

    void init_uniform_fan_in(int idx, Rng& rng, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        auto w = weight(idx);
        for (int c = 0; c < w.cols(); ++c)
            for (int r = 0; r < w.rows(); ++r) w(r, c) = static_cast<T>(rng.uniform(-bound, bound));
    }
    void init_constant(int idx, T value) { weight(idx).setConstant(value); }
    void init_normal(int idx, Rng& rng, double std) {
        auto w = weight(idx);
        for (int c = 0; c < w.cols(); ++c)
            for (int r = 0; r < w.rows(); ++r) w(r, c) = static_cast<T>(rng.normal(0.0, std));
    }
};

/// Adam with bias correction; gradients are clipped to a global L2 norm of
/// `clip_norm` before the moment update. One optimizer instance per trained
/// parameter family.
template <class T>
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;

    std::vector<T> m, v;
    long step_count = 0;

    void attach(const ParamStore<T>& params) {
        m.assign(params.size(), T(0));
        v.assign(params.size(), T(0));
        step_count = 0;
    }

    void step(ParamStore<T>& params) {
        if (m.size() != params.size()) throw NumericError("Adam: optimizer not attached");
        double norm_sq = 0.0;
        for (T g : params.grad) norm_sq += static_cast<double>(g) * static_cast<double>(g);
        const double norm = std::sqrt(norm_sq);
        const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;

        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = static_cast<double>(params.grad[i]) * scale;
            const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
            const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
            params.theta[i] = static_cast<T>(static_cast<double>(params.theta[i]) - update);
        }
    }
};

inline constexpr int kSide = 32;            ///< canvas side
inline constexpr int kPixels = kSide * kSide;

// ---------------------------------------------------------------------------
// convolution (3x3 same padding and 1x1) on [channels x 1024] feature maps
// ---------------------------------------------------------------------------

/// Gathers the 3x3 neighbourhood of every pixel: out is [in_ch*9 x 1024]
/// with out-of-bounds taps zero.
template <class T>
void im2col3x3(const Mat<T>& x, Mat<T>& col) {
    const int ch = static_cast<int>(x.rows());
    col.setZero(ch * 9, kPixels);
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            const int p = r * kSide + c;
            int tap = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc, ++tap) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= kSide || cc < 0 || cc >= kSide) continue;
                    col.block(tap * ch, p, ch, 1) = x.col(rr * kSide + cc);
                }
            }
        }
    }
}

/// Scatter-add transpose of im2col3x3.
template <class T>
void col2im3x3(const Mat<T>& col, Mat<T>& dx) {
    const int ch = static_cast<int>(col.rows()) / 9;
    dx.setZero(ch, kPixels);
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            const int p = r * kSide + c;
            int tap = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc, ++tap) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= kSide || cc < 0 || cc >= kSide) continue;
                    dx.col(rr * kSide + cc) += col.block(tap * ch, p, ch, 1);
                }
            }
        }
    }
}

/// y = W * col(x) + b with W [out x in*9]. The col matrix is cached for the
/// backward pass.
template <class T>
struct Conv3x3Cache {
    Mat<T> col;
};

template <class T>
void conv3x3_forward(const ConstMatMap<T>& w, const ConstMatMap<T>& b, const Mat<T>& x,
                     Mat<T>& y, Conv3x3Cache<T>& cache) {
    im2col3x3(x, cache.col);
    y.noalias() = w * cache.col;
    y.colwise() += b.col(0);
}

template <class T>
void conv3x3_backward(const ConstMatMap<T>& w, const Conv3x3Cache<T>& cache, const Mat<T>& dy,
                      MatMap<T> dw, MatMap<T> db, Mat<T>& dx, Mat<T>& dcol_scratch) {
    dw.noalias() += dy * cache.col.transpose();
    db.col(0) += dy.rowwise().sum();
    dcol_scratch.noalias() = w.transpose() * dy;
    col2im3x3(dcol_scratch, dx);
}

template <class T>
void conv1x1_forward(const ConstMatMap<T>& w, const ConstMatMap<T>& b, const Mat<T>& x, Mat<T>& y) {
    y.noalias() = w * x;
    y.colwise() += b.col(0);
}

template <class T>
void conv1x1_backward(const ConstMatMap<T>& w, const Mat<T>& x, const Mat<T>& dy, MatMap<T> dw,
                      MatMap<T> db, Mat<T>& dx) {
    dw.noalias() += dy * x.transpose();
    db.col(0) += dy.rowwise().sum();
    dx.noalias() = w.transpose() * dy;
}

// ---------------------------------------------------------------------------
// group normalization over [channels x 1024]
// ---------------------------------------------------------------------------

template <class T>
struct GroupNormCache {
    std::vector<double> mean, inv_std;  // per group
    Mat<T> x;                           // input (for xhat recomputation)
};

template <class T>
void groupnorm_forward(const ConstMatMap<T>& gamma, const ConstMatMap<T>& beta, int groups,
                       const Mat<T>& x, Mat<T>& y, GroupNormCache<T>& cache, double eps = 1e-5) {
    const int ch = static_cast<int>(x.rows());
    const int per = ch / groups;
    const auto cols = static_cast<int>(x.cols());
    cache.mean.assign(static_cast<std::size_t>(groups), 0.0);
    cache.inv_std.assign(static_cast<std::size_t>(groups), 0.0);
    cache.x = x;
    y.resize(ch, cols);

    for (int g = 0; g < groups; ++g) {
        const auto block = x.middleRows(g * per, per);
        double sum = 0.0, sum_sq = 0.0;
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < per; ++r) {
                const double v = static_cast<double>(block(r, c));
                sum += v;
                sum_sq += v * v;
            }
        const double n = static_cast<double>(per) * cols;
        const double mean = sum / n;
        const double var = sum_sq / n - mean * mean;
        const double inv_std = 1.0 / std::sqrt(var + eps);
        cache.mean[static_cast<std::size_t>(g)] = mean;
        cache.inv_std[static_cast<std::size_t>(g)] = inv_std;
        for (int r = 0; r < per; ++r) {
            const int row = g * per + r;
            const double gm = static_cast<double>(gamma(row, 0));
            const double bt = static_cast<double>(beta(row, 0));
            for (int c = 0; c < cols; ++c) {
                const double xhat = (static_cast<double>(x(row, c)) - mean) * inv_std;
                y(row, c) = static_cast<T>(gm * xhat + bt);
            }
        }
    }
}

template <class T>
void groupnorm_backward(const ConstMatMap<T>& gamma, int groups, const GroupNormCache<T>& cache,
                        const Mat<T>& dy, MatMap<T> dgamma, MatMap<T> dbeta, Mat<T>& dx) {
    const int ch = static_cast<int>(cache.x.rows());
    const int per = ch / groups;
    const auto cols = static_cast<int>(cache.x.cols());
    dx.resize(ch, cols);

    for (int g = 0; g < groups; ++g) {
        const double mean = cache.mean[static_cast<std::size_t>(g)];
        const double inv_std = cache.inv_std[static_cast<std::size_t>(g)];
        const double n = static_cast<double>(per) * cols;

        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int r = 0; r < per; ++r) {
            const int row = g * per + r;
            const double gm = static_cast<double>(gamma(row, 0));
            double dg = 0.0, db = 0.0;
            for (int c = 0; c < cols; ++c) {
                const double xhat = (static_cast<double>(cache.x(row, c)) - mean) * inv_std;
                const double dyv = static_cast<double>(dy(row, c));
                dg += dyv * xhat;
                db += dyv;
                const double dxhat = dyv * gm;
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
            }
            dgamma(row, 0) += static_cast<T>(dg);
            dbeta(row, 0) += static_cast<T>(db);
        }
        const double mean_dxhat = sum_dxhat / n;
        const double mean_dxhat_xhat = sum_dxhat_xhat / n;
        for (int r = 0; r < per; ++r) {
            const int row = g * per + r;
            const double gm = static_cast<double>(gamma(row, 0));
            for (int c = 0; c < cols; ++c) {
                const double xhat = (static_cast<double>(cache.x(row, c)) - mean) * inv_std;
                const double dxhat = static_cast<double>(dy(row, c)) * gm;
                dx(row, c) = static_cast<T>(inv_std * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// SiLU
// ---------------------------------------------------------------------------

template <class T>
void silu_forward(const Mat<T>& x, Mat<T>& y) {
    y = x.unaryExpr([](T v) {
        const double d = static_cast<double>(v);
        return static_cast<T>(d / (1.0 + std::exp(-d)));
    });
}

template <class T>
void silu_backward(const Mat<T>& x, const Mat<T>& dy, Mat<T>& dx) {
    dx.resize(x.rows(), x.cols());
    for (int c = 0; c < x.cols(); ++c) {
        for (int r = 0; r < x.rows(); ++r) {
            const double v = static_cast<double>(x(r, c));
            const double s = 1.0 / (1.0 + std::exp(-v));
            dx(r, c) = static_cast<T>(static_cast<double>(dy(r, c)) * s * (1.0 + v * (1.0 - s)));
        }
    }
}

// ---------------------------------------------------------------------------
// sinusoidal index embedding
// ---------------------------------------------------------------------------

/// Standard sin/cos embedding of an integer index into `dim` features
/// (dim must be even).
template <class T>
Vec<T> sinusoidal_embedding(int index, int dim) {
    Vec<T> out(dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                     static_cast<double>(half - 1));
        const double a = static_cast<double>(index) * freq;
        out(i) = static_cast<T>(std::sin(a));
        out(half + i) = static_cast<T>(std::cos(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// softmax and single-head attention over a handful of tokens
// ---------------------------------------------------------------------------

template <class T>
Vec<T> softmax(const Vec<T>& z) {
    Vec<T> out(z.size());
    double max_z = -1e300;
    for (int i = 0; i < z.size(); ++i) max_z = std::max(max_z, static_cast<double>(z(i)));
    double sum = 0.0;
    for (int i = 0; i < z.size(); ++i) {
        const double e = std::exp(static_cast<double>(z(i)) - max_z);
        out(i) = static_cast<T>(e);
        sum += e;
    }
    for (int i = 0; i < z.size(); ++i) out(i) = static_cast<T>(static_cast<double>(out(i)) / sum);
    return out;
}

/// d z = (diag(a) - a a^T) d a  for a = softmax(z).
template <class T>
Vec<T> softmax_backward(const Vec<T>& a, const Vec<T>& da) {
    double dot = 0.0;
    for (int i = 0; i < a.size(); ++i) dot += static_cast<double>(a(i)) * static_cast<double>(da(i));
    Vec<T> out(a.size());
    for (int i = 0; i < a.size(); ++i)
        out(i) = static_cast<T>(static_cast<double>(a(i)) * (static_cast<double>(da(i)) - dot));
    return out;
}

}  // namespace mrcdm::nn
