#include "wipe/data/filter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wipe {

std::vector<Biquad> butterworth_sections(int order, double cutoff_hz, double fs_hz)
{
    if (order < 1)
        throw std::invalid_argument("butterworth: order must be >= 1");
    if (!(cutoff_hz > 0.0 && cutoff_hz < fs_hz / 2.0))
        throw std::invalid_argument("butterworth: cutoff must lie in (0, fs/2)");
    const double pi = std::numbers::pi;
    const double wc = 2.0 * fs_hz * std::tan(pi * cutoff_hz / fs_hz); // pre-warped analog cutoff
    const double c = 2.0 * fs_hz;
    std::vector<Biquad> out;
    for (int k = 0; k < order / 2; ++k) {
        // Analog section wc^2 / (s^2 + 2 zeta wc s + wc^2).
        const double theta = pi * (2.0 * k + 1.0) / (2.0 * order);
        const double two_zeta = 2.0 * std::sin(theta);
        const double a0 = c * c + two_zeta * wc * c + wc * wc;
        Biquad q;
        q.b0 = wc * wc / a0;
        q.b1 = 2.0 * q.b0;
        q.b2 = q.b0;
        q.a1 = (2.0 * wc * wc - 2.0 * c * c) / a0;
        q.a2 = (c * c - two_zeta * wc * c + wc * wc) / a0;
        out.push_back(q);
    }
    if (order % 2 == 1) {
        const double a0 = c + wc;
        Biquad q;
        q.b0 = wc / a0;
        q.b1 = q.b0;
        q.a1 = (wc - c) / a0;
        out.push_back(q);
    }
    return out;
}

CausalFilter::CausalFilter(int order, double cutoff_hz, double fs_hz)
    : sections_(butterworth_sections(order, cutoff_hz, fs_hz))
    , state_(sections_.size(), {0.0, 0.0})
{
}

void CausalFilter::reset_zero()
{
    for (auto& s : state_)
        s = {0.0, 0.0};
}

void CausalFilter::reset_steady(double x0)
{
    // Transposed direct form II with unit DC gain: y = x = x0 everywhere.
    for (std::size_t i = 0; i < sections_.size(); ++i) {
        const Biquad& q = sections_[i];
        const double z2 = (q.b2 - q.a2) * x0;
        const double z1 = (q.b1 - q.a1) * x0 + z2;
        state_[i] = {z1, z2};
    }
}

double CausalFilter::operator()(double x)
{
    for (std::size_t i = 0; i < sections_.size(); ++i) {
        const Biquad& q = sections_[i];
        auto& z = state_[i];
        const double y = q.b0 * x + z[0];
        z[0] = q.b1 * x - q.a1 * y + z[1];
        z[1] = q.b2 * x - q.a2 * y;
        x = y;
    }
    return x;
}

namespace {

std::vector<double> forward_pass(const std::vector<double>& x, int order, double cutoff_hz, double fs_hz)
{
    CausalFilter f(order, cutoff_hz, fs_hz);
    std::vector<double> y(x.size());
    if (x.empty())
        return y;
    f.reset_steady(x.front());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = f(x[i]);
    return y;
}

} // namespace

std::vector<double> butterworth_lowpass(const std::vector<double>& signal, int order, double cutoff_hz,
                                        double fs_hz, bool causal)
{
    butterworth_sections(order, cutoff_hz, fs_hz); // validates parameters
    if (causal || signal.empty())
        return forward_pass(signal, order, cutoff_hz, fs_hz);

    const std::size_t n = signal.size();
    const std::size_t pad = std::min<std::size_t>(3 * (2 * order + 1), n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i)
        ext.push_back(2.0 * signal.front() - signal[i]);
    ext.insert(ext.end(), signal.begin(), signal.end());
    for (std::size_t i = 1; i <= pad; ++i)
        ext.push_back(2.0 * signal.back() - signal[n - 1 - i]);

    std::vector<double> y = forward_pass(ext, order, cutoff_hz, fs_hz);
    std::reverse(y.begin(), y.end());
    y = forward_pass(y, order, cutoff_hz, fs_hz);
    std::reverse(y.begin(), y.end());
    return std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(pad),
                               y.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

MatrixXd butterworth_lowpass(const MatrixXd& signal, int order, double cutoff_hz, double fs_hz, bool causal)
{
    MatrixXd out(signal.rows(), signal.cols());
    std::vector<double> col(static_cast<std::size_t>(signal.rows()));
    for (Eigen::Index c = 0; c < signal.cols(); ++c) {
        for (Eigen::Index r = 0; r < signal.rows(); ++r)
            col[static_cast<std::size_t>(r)] = signal(r, c);
        const auto y = butterworth_lowpass(col, order, cutoff_hz, fs_hz, causal);
        for (Eigen::Index r = 0; r < signal.rows(); ++r)
            out(r, c) = y[static_cast<std::size_t>(r)];
    }
    return out;
}

} // namespace wipe
