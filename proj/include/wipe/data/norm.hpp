#pragma once

#include "wipe/nn/tensor.hpp"

#include <json.hpp>

namespace wipe {

struct DegenerateChannel : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Per-column min/max; maps [min, max] onto [0, 0.9].
struct NormStats {
    VectorXd min;
    VectorXd max;

    Eigen::Index dims() const { return min.size(); }
};

inline constexpr double norm_top = 0.9;

// Rows are observations, columns are channels.
NormStats fit_norm_stats(const MatrixXd& data);

// 0.9 (x - min) / (max - min), clamped to [0, 0.9]. Applied column-wise.
MatrixXd normalize(const MatrixXd& x, const NormStats& s);
double normalize(double x, const NormStats& s, Eigen::Index dim = 0);

MatrixXd denormalize(const MatrixXd& x, const NormStats& s);
double denormalize(double x, const NormStats& s, Eigen::Index dim = 0);

nlohmann::json to_json(const NormStats& s);
NormStats norm_stats_from_json(const nlohmann::json& j);

} // namespace wipe
