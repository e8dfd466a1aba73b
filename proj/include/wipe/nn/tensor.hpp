#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wipe {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using VectorMap = Eigen::Map<Vector<S>>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::domain_error {
    using std::domain_error::domain_error;
};

// Shape plus row-major values. Used at I/O boundaries; the math works on
// Eigen matrices directly.
template <class S>
struct Tensor {
    std::vector<std::ptrdiff_t> shape;
    std::vector<S> values;

    std::ptrdiff_t numel() const
    {
        std::ptrdiff_t n = 1;
        for (auto d : shape)
            n *= d;
        return n;
    }

    bool valid() const
    {
        if (numel() != static_cast<std::ptrdiff_t>(values.size()))
            return false;
        for (S v : values)
            if (!std::isfinite(static_cast<double>(v)))
                return false;
        return true;
    }
};

template <class Derived>
Tensor<typename Derived::Scalar> to_tensor(const Eigen::MatrixBase<Derived>& m)
{
    using S = typename Derived::Scalar;
    Tensor<S> t;
    t.shape = {m.rows(), m.cols()};
    t.values.resize(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            t.values[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
    return t;
}

template <class S>
Matrix<S> to_matrix(const Tensor<S>& t, Eigen::Index rows, Eigen::Index cols)
{
    if (rows * cols != static_cast<Eigen::Index>(t.values.size()))
        throw DimensionError("tensor size does not match requested matrix shape");
    Matrix<S> m(rows, cols);
    std::copy(t.values.begin(), t.values.end(), m.data());
    return m;
}

// Flat view of a contiguous Eigen object, used to hand parameters to Adam.
template <class Derived>
VectorMap<typename Derived::Scalar> flat(Eigen::PlainObjectBase<Derived>& m)
{
    return VectorMap<typename Derived::Scalar>(m.data(), m.size());
}

inline void require(bool ok, const std::string& what)
{
    if (!ok)
        throw DimensionError(what);
}

} // namespace wipe
