#include "wipe/nn/checkpoint.hpp"

#include <fstream>

namespace wipe {

namespace {

std::vector<double> values(const double* p, Eigen::Index n) { return std::vector<double>(p, p + n); }

void load_values(const nlohmann::json& arr, double* dst, Eigen::Index n, const std::string& what)
{
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != n)
        throw CheckpointError("checkpoint: " + what + " has wrong length");
    for (Eigen::Index i = 0; i < n; ++i)
        dst[i] = arr[static_cast<std::size_t>(i)].get<double>();
}

} // namespace

nlohmann::json layer_json(const std::string& name, const DenseLayer<double>& l, double dropout)
{
    return {{"name", name},
            {"kind", "dense"},
            {"shape", {l.out(), l.in()}},
            {"activation", to_string(l.activation)},
            {"dropout", dropout},
            {"weights", values(l.weights.data(), l.weights.size())},
            {"bias", values(l.bias.data(), l.bias.size())}};
}

nlohmann::json layer_json(const std::string& name, const TcnLayer<double>& l, double dropout)
{
    return {{"name", name},
            {"kind", "tcn"},
            {"shape", {l.out_channels(), l.in_channels, l.kernel_len}},
            {"dilation", l.dilation},
            {"activation", to_string(l.activation)},
            {"dropout", dropout},
            {"weights", values(l.kernels.data(), l.kernels.size())},
            {"bias", values(l.bias.data(), l.bias.size())}};
}

DenseLayer<double> dense_from_json(const nlohmann::json& j)
{
    try {
        if (j.at("kind") != "dense")
            throw CheckpointError("checkpoint: layer " + j.value("name", "?") + " is not dense");
        const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
        if (shape.size() != 2)
            throw CheckpointError("checkpoint: dense shape must have 2 entries");
        DenseLayer<double> l;
        l.weights.resize(shape[0], shape[1]);
        l.bias.resize(shape[0]);
        l.activation = activation_from_string(j.at("activation").get<std::string>());
        load_values(j.at("weights"), l.weights.data(), l.weights.size(), "weights");
        load_values(j.at("bias"), l.bias.data(), l.bias.size(), "bias");
        return l;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: malformed dense layer: ") + e.what());
    }
}

TcnLayer<double> tcn_from_json(const nlohmann::json& j)
{
    try {
        if (j.at("kind") != "tcn")
            throw CheckpointError("checkpoint: layer " + j.value("name", "?") + " is not tcn");
        const auto shape = j.at("shape").get<std::vector<int>>();
        if (shape.size() != 3)
            throw CheckpointError("checkpoint: tcn shape must have 3 entries");
        TcnLayer<double> l;
        l.in_channels = shape[1];
        l.kernel_len = shape[2];
        l.dilation = j.at("dilation").get<int>();
        l.activation = activation_from_string(j.at("activation").get<std::string>());
        l.kernels.resize(shape[0], shape[1] * shape[2]);
        l.bias.resize(shape[0]);
        load_values(j.at("weights"), l.kernels.data(), l.kernels.size(), "weights");
        load_values(j.at("bias"), l.bias.data(), l.bias.size(), "bias");
        return l;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: malformed tcn layer: ") + e.what());
    }
}

const nlohmann::json& find_layer(const nlohmann::json& doc, const std::string& name)
{
    if (!doc.contains("layers"))
        throw CheckpointError("checkpoint: no layers");
    for (const auto& l : doc.at("layers"))
        if (l.value("name", "") == name)
            return l;
    throw CheckpointError("checkpoint: missing layer " + name);
}

nlohmann::json checkpoint_header(const std::string& model, const std::string& norm_stats_ref)
{
    return {{"schema_version", checkpoint_schema_version},
            {"model", model},
            {"norm_stats_ref", norm_stats_ref},
            {"config", nlohmann::json::object()},
            {"layers", nlohmann::json::array()}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(1) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
    }
}

} // namespace wipe
