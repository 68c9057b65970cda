#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "herb/common/tensor.hpp"
#include "herb/nnrt/kernels.hpp"

namespace herb::nnrt {

enum class LayerKind { conv2d, batchnorm, relu, maxpool, avgpool, concat, global_avg_pool, dense, dropout, softmax };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

struct LayerSpec {
    std::string name;  // output name
    LayerKind kind = LayerKind::relu;
    std::vector<std::string> inputs;
    bool trainable = false;

    // conv2d
    std::int64_t filters = 0;
    std::int64_t kernel = 1;
    std::int64_t stride = 1;
    Padding padding = Padding::valid;
    bool use_bias = false;
    // maxpool / avgpool (stride shared with conv2d)
    std::int64_t window = 2;
    // dense
    std::int64_t units = 0;
    // dropout: probability of dropping an element
    double rate = 0.0;

    bool operator==(const LayerSpec&) const = default;
};

inline constexpr std::string_view kGraphInput = "input";

struct ModelGraph {
    std::string name;
    std::array<std::int64_t, 3> input_shape{3, 256, 256};
    std::vector<LayerSpec> layers;  // topological order
    std::string head_boundary;
    double batchnorm_epsilon = 1e-5;

    const LayerSpec* find(std::string_view layer) const;
    // Width of the final softmax.
    std::int64_t num_classes() const;

    bool operator==(const ModelGraph&) const = default;
};

// Per-sample output shapes: C x H x W for spatial layers, D for vectors.
using ShapeMap = std::map<std::string, Tensor::Shape, std::less<>>;

// Checks names, ordering, hyperparameters, and the single final softmax, then
// propagates shapes. Throws std::invalid_argument naming the offending layer.
ShapeMap infer_shapes(const ModelGraph& graph);
void validate_graph(const ModelGraph& graph);

// Parameter name -> shape, for every parameterized layer.
std::map<std::string, std::map<std::string, Tensor::Shape>> expected_parameters(const ModelGraph& graph);

nlohmann::json graph_to_json(const ModelGraph& graph);
// Throws std::invalid_argument on malformed documents (including validation failures).
ModelGraph graph_from_json(const nlohmann::json& doc);

}  // namespace herb::nnrt
