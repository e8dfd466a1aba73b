#pragma once

#include "wipe/nn/tensor.hpp"

namespace wipe {

template <class DA, class DB>
typename DA::Scalar mse(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), "mse: shape mismatch");
    require(a.size() > 0, "mse: empty input");
    return (a - b).squaredNorm() / static_cast<typename DA::Scalar>(a.size());
}

// dL/da for mse(a, b).
template <class DA, class DB>
Matrix<typename DA::Scalar> mse_grad(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b)
{
    using S = typename DA::Scalar;
    require(a.rows() == b.rows() && a.cols() == b.cols(), "mse_grad: shape mismatch");
    return (S(2) / static_cast<S>(a.size())) * (a - b);
}

// KL(N(mu, exp(logvar)) || N(0, I)) summed over every element.
template <class DA, class DB>
typename DA::Scalar kl_diag_gaussian(const Eigen::MatrixBase<DA>& mu, const Eigen::MatrixBase<DB>& logvar)
{
    using S = typename DA::Scalar;
    require(mu.rows() == logvar.rows() && mu.cols() == logvar.cols(), "kl_diag_gaussian: shape mismatch");
    if (!mu.allFinite() || !logvar.allFinite())
        throw NumericError("kl_diag_gaussian: non-finite input");
    return S(0.5) * (mu.array().square() + logvar.array().exp() - S(1) - logvar.array()).sum();
}

} // namespace wipe
