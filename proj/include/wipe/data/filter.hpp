#pragma once

#include "wipe/nn/tensor.hpp"

#include <array>
#include <vector>

namespace wipe {

// One second-order section, normalized so a0 = 1.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

// Digital Butterworth low-pass as cascaded second-order sections (bilinear
// transform with pre-warping). Odd orders end with a first-order section
// stored as a biquad with b2 = a2 = 0. Each section has unit DC gain.
std::vector<Biquad> butterworth_sections(int order, double cutoff_hz, double fs_hz);

// Forward-only filter that can run one sample at a time.
class CausalFilter {
public:
    CausalFilter(int order, double cutoff_hz, double fs_hz);

    // Steady-state initial conditions for a constant input x0 (output starts
    // at x0 instead of ringing up from zero).
    void reset_steady(double x0);
    void reset_zero();

    double operator()(double x);

private:
    std::vector<Biquad> sections_;
    std::vector<std::array<double, 2>> state_;
};

// causal = true: forward only, starting from the steady state of the first
// sample. causal = false: forward-backward (zero phase) with odd reflection
// padding of 3 * (2 * order + 1) samples, like scipy's filtfilt.
std::vector<double> butterworth_lowpass(const std::vector<double>& signal, int order, double cutoff_hz,
                                        double fs_hz, bool causal);

// Column-wise application to a T x C array.
MatrixXd butterworth_lowpass(const MatrixXd& signal, int order, double cutoff_hz, double fs_hz, bool causal);

} // namespace wipe
