#include "wipe/data/norm.hpp"

#include <algorithm>

namespace wipe {

namespace {

void check(const NormStats& s, Eigen::Index dim)
{
    require(dim >= 0 && dim < s.dims(), "norm stats: channel index out of range");
    if (!(s.max[dim] > s.min[dim]))
        throw DegenerateChannel("norm stats: channel " + std::to_string(dim) + " has max == min");
}

} // namespace

NormStats fit_norm_stats(const MatrixXd& data)
{
    require(data.rows() > 0, "fit_norm_stats: empty data");
    NormStats s;
    s.min = data.colwise().minCoeff().transpose();
    s.max = data.colwise().maxCoeff().transpose();
    for (Eigen::Index c = 0; c < s.dims(); ++c)
        check(s, c);
    return s;
}

double normalize(double x, const NormStats& s, Eigen::Index dim)
{
    check(s, dim);
    const double y = norm_top * (x - s.min[dim]) / (s.max[dim] - s.min[dim]);
    return std::clamp(y, 0.0, norm_top);
}

double denormalize(double x, const NormStats& s, Eigen::Index dim)
{
    check(s, dim);
    return s.min[dim] + x / norm_top * (s.max[dim] - s.min[dim]);
}

MatrixXd normalize(const MatrixXd& x, const NormStats& s)
{
    require(x.cols() == s.dims(), "normalize: column count differs from stats");
    MatrixXd y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            y(r, c) = normalize(x(r, c), s, c);
    return y;
}

MatrixXd denormalize(const MatrixXd& x, const NormStats& s)
{
    require(x.cols() == s.dims(), "denormalize: column count differs from stats");
    MatrixXd y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            y(r, c) = denormalize(x(r, c), s, c);
    return y;
}

nlohmann::json to_json(const NormStats& s)
{
    return {{"min", std::vector<double>(s.min.data(), s.min.data() + s.min.size())},
            {"max", std::vector<double>(s.max.data(), s.max.data() + s.max.size())}};
}

NormStats norm_stats_from_json(const nlohmann::json& j)
{
    const auto mn = j.at("min").get<std::vector<double>>();
    const auto mx = j.at("max").get<std::vector<double>>();
    require(mn.size() == mx.size(), "norm stats: min/max length mismatch");
    NormStats s;
    s.min = Eigen::Map<const VectorXd>(mn.data(), static_cast<Eigen::Index>(mn.size()));
    s.max = Eigen::Map<const VectorXd>(mx.data(), static_cast<Eigen::Index>(mx.size()));
    return s;
}

} // namespace wipe
