#pragma once

#include "wipe/nn/dense.hpp"

#include <vector>

namespace wipe {

// Causal 1-D convolution. kernels is out_ch x (in_ch * kernel_len), the
// row-major flattening of [out_ch x in_ch x kernel_len]. Tap j of a kernel
// reads input step t - (kernel_len - 1 - j) * dilation; steps before the
// start of the window read zero.
template <class S>
struct TcnLayer {
    Matrix<S> kernels;
    Vector<S> bias;
    int in_channels = 0;
    int kernel_len = 0;
    int dilation = 1;
    Activation activation = Activation::relu;

    int out_channels() const { return static_cast<int>(kernels.rows()); }
    int receptive_field() const { return (kernel_len - 1) * dilation + 1; }
};

template <class S>
struct TcnGrad {
    Matrix<S> kernels;
    Vector<S> bias;

    explicit TcnGrad(const TcnLayer<S>& l = {})
        : kernels(Matrix<S>::Zero(l.kernels.rows(), l.kernels.cols()))
        , bias(Vector<S>::Zero(l.bias.size()))
    {
    }

    void zero()
    {
        kernels.setZero();
        bias.setZero();
    }
};

template <class S>
struct TcnCache {
    Matrix<S> columns; // im2col input, (B*T) x (in * K)
    Matrix<S> activated;
    Matrix<S> mask;
};

template <class S>
TcnLayer<S> make_tcn(int in, int out, int kernel_len, int dilation, Activation act, Rng& rng)
{
    TcnLayer<S> l;
    l.in_channels = in;
    l.kernel_len = kernel_len;
    l.dilation = dilation;
    l.activation = act;
    l.kernels.resize(out, in * kernel_len);
    l.bias.resize(out);
    const double a = 1.0 / std::sqrt(static_cast<double>(in * kernel_len));
    for (Eigen::Index i = 0; i < l.kernels.size(); ++i)
        l.kernels.data()[i] = static_cast<S>(rng.uniform(-a, a));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i)
        l.bias[i] = static_cast<S>(rng.uniform(-a, a));
    return l;
}

// x holds B sequences of length T stacked as rows (row b*T + t).
template <class S>
Matrix<S> causal_im2col(const Matrix<S>& x, Eigen::Index steps, const TcnLayer<S>& layer)
{
    const Eigen::Index K = layer.kernel_len;
    const Eigen::Index C = layer.in_channels;
    const Eigen::Index B = x.rows() / steps;
    Matrix<S> col = Matrix<S>::Zero(x.rows(), C * K);
    for (Eigen::Index b = 0; b < B; ++b)
        for (Eigen::Index t = 0; t < steps; ++t)
            for (Eigen::Index j = 0; j < K; ++j) {
                const Eigen::Index src = t - (K - 1 - j) * layer.dilation;
                if (src < 0)
                    continue;
                for (Eigen::Index i = 0; i < C; ++i)
                    col(b * steps + t, i * K + j) = x(b * steps + src, i);
            }
    return col;
}

template <class S>
Matrix<S> tcn_layer_forward(const Matrix<S>& x, Eigen::Index steps, const TcnLayer<S>& layer, S dropout_rate,
                            bool training, Rng& rng, TcnCache<S>* cache = nullptr)
{
    require(steps > 0 && x.rows() % steps == 0, "tcn: row count is not a multiple of the window length");
    require(x.cols() == layer.in_channels, "tcn: input has " + std::to_string(x.cols()) +
                                               " channels, layer expects " + std::to_string(layer.in_channels));
    require(layer.kernels.cols() == layer.in_channels * layer.kernel_len, "tcn: kernel shape mismatch");
    require(layer.dilation >= 1, "tcn: dilation must be positive");

    Matrix<S> col = causal_im2col(x, steps, layer);
    Matrix<S> y = col * layer.kernels.transpose();
    y.rowwise() += layer.bias.transpose();
    apply_activation(y, layer.activation);
    if (cache) {
        cache->columns = std::move(col);
        cache->activated = y;
        cache->mask.resize(0, 0);
    }
    if (training && dropout_rate > S(0)) {
        Matrix<S> mask = dropout_mask<S>(y.rows(), y.cols(), dropout_rate, rng);
        y = y.cwiseProduct(mask);
        if (cache)
            cache->mask = std::move(mask);
    }
    return y;
}

template <class S>
Matrix<S> tcn_layer_backward(const Matrix<S>& dy, Eigen::Index steps, const TcnLayer<S>& layer,
                             const TcnCache<S>& cache, TcnGrad<S>& g)
{
    Matrix<S> d = dy;
    if (cache.mask.size() > 0)
        d = d.cwiseProduct(cache.mask);
    if (layer.activation == Activation::relu)
        d = d.cwiseProduct((cache.activated.array() > S(0)).template cast<S>().matrix());
    g.kernels.noalias() += d.transpose() * cache.columns;
    g.bias.noalias() += d.colwise().sum().transpose();

    const Matrix<S> dcol = d * layer.kernels;
    const Eigen::Index K = layer.kernel_len;
    const Eigen::Index C = layer.in_channels;
    const Eigen::Index B = dy.rows() / steps;
    Matrix<S> dx = Matrix<S>::Zero(dy.rows(), C);
    for (Eigen::Index b = 0; b < B; ++b)
        for (Eigen::Index t = 0; t < steps; ++t)
            for (Eigen::Index j = 0; j < K; ++j) {
                const Eigen::Index src = t - (K - 1 - j) * layer.dilation;
                if (src < 0)
                    continue;
                for (Eigen::Index i = 0; i < C; ++i)
                    dx(b * steps + src, i) += dcol(b * steps + t, i * K + j);
            }
    return dx;
}

// Runs the stack over a T x C window and returns the last step's features.
template <class S>
Vector<S> tcn_forward(const Matrix<S>& window, const std::vector<TcnLayer<S>>& layers, S dropout_rate = S(0),
                      bool training = false, Rng* rng = nullptr)
{
    Rng local(0);
    Rng& r = rng ? *rng : local;
    Matrix<S> h = window;
    for (const auto& l : layers)
        h = tcn_layer_forward<S>(h, window.rows(), l, dropout_rate, training, r);
    return h.row(h.rows() - 1).transpose();
}

} // namespace wipe
