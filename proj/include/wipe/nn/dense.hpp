#pragma once

#include "wipe/nn/rng.hpp"
#include "wipe/nn/tensor.hpp"

#include <string>

namespace wipe {

enum class Activation { none, relu };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "none"; }

inline Activation activation_from_string(const std::string& s)
{
    if (s == "relu")
        return Activation::relu;
    if (s == "none")
        return Activation::none;
    throw std::invalid_argument("unknown activation: " + s);
}

template <class S>
struct DenseLayer {
    Matrix<S> weights; // out x in
    Vector<S> bias;    // out
    Activation activation = Activation::none;

    Eigen::Index in() const { return weights.cols(); }
    Eigen::Index out() const { return weights.rows(); }
};

template <class S>
struct DenseGrad {
    Matrix<S> weights;
    Vector<S> bias;

    explicit DenseGrad(const DenseLayer<S>& l = {})
        : weights(Matrix<S>::Zero(l.weights.rows(), l.weights.cols()))
        , bias(Vector<S>::Zero(l.bias.size()))
    {
    }

    void zero()
    {
        weights.setZero();
        bias.setZero();
    }
};

template <class S>
struct DenseCache {
    Matrix<S> input;
    Matrix<S> activated; // act(Wx + b) before dropout
    Matrix<S> mask;      // inverted dropout multipliers; empty when no dropout
};

// U(-1/sqrt(in), 1/sqrt(in)) for weights and bias.
template <class S>
DenseLayer<S> make_dense(Eigen::Index in, Eigen::Index out, Activation act, Rng& rng)
{
    DenseLayer<S> l;
    l.weights.resize(out, in);
    l.bias.resize(out);
    l.activation = act;
    const double a = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index i = 0; i < l.weights.size(); ++i)
        l.weights.data()[i] = static_cast<S>(rng.uniform(-a, a));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i)
        l.bias[i] = static_cast<S>(rng.uniform(-a, a));
    return l;
}

template <class S>
Matrix<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, S rate, Rng& rng)
{
    Matrix<S> m(rows, cols);
    const S keep = S(1) - rate;
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = rng.uniform() < static_cast<double>(keep) ? S(1) / keep : S(0);
    return m;
}

template <class S>
void apply_activation(Matrix<S>& y, Activation act)
{
    if (act == Activation::relu)
        y = y.cwiseMax(S(0));
}

// Rows of x are samples. y = dropout(act(x W^T + b)); dropout only when
// training and rate > 0 (inverted: kept units scaled by 1/keep).
template <class S>
Matrix<S> dense_forward(const Matrix<S>& x, const DenseLayer<S>& layer, S dropout_rate, bool training,
                        Rng& rng, DenseCache<S>* cache = nullptr)
{
    require(x.cols() == layer.in(), "dense_forward: input has " + std::to_string(x.cols()) +
                                        " columns, layer expects " + std::to_string(layer.in()));
    require(layer.bias.size() == layer.out(), "dense_forward: bias length differs from weight rows");
    if (!(dropout_rate >= S(0) && dropout_rate < S(1)))
        throw std::invalid_argument("dense_forward: dropout rate must be in [0, 1)");

    Matrix<S> y = x * layer.weights.transpose();
    y.rowwise() += layer.bias.transpose();
    apply_activation(y, layer.activation);
    if (cache) {
        cache->input = x;
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
Vector<S> dense_forward(const Vector<S>& x, const DenseLayer<S>& layer, S dropout_rate, bool training, Rng& rng)
{
    Matrix<S> row = x.transpose();
    Matrix<S> y = dense_forward<S>(row, layer, dropout_rate, training, rng);
    return y.row(0).transpose();
}

// Accumulates parameter gradients into g and returns dL/dx.
template <class S>
Matrix<S> dense_backward(const Matrix<S>& dy, const DenseLayer<S>& layer, const DenseCache<S>& cache, DenseGrad<S>& g)
{
    Matrix<S> d = dy;
    if (cache.mask.size() > 0)
        d = d.cwiseProduct(cache.mask);
    if (layer.activation == Activation::relu)
        d = d.cwiseProduct((cache.activated.array() > S(0)).template cast<S>().matrix());
    g.weights.noalias() += d.transpose() * cache.input;
    g.bias.noalias() += d.colwise().sum().transpose();
    return d * layer.weights;
}

} // namespace wipe
