#pragma once

#include <cstdint>
#include <string>

#include "herb/nnrt/graph.hpp"
#include "herb/nnrt/weights.hpp"

namespace herb::nnrt {

struct Model {
    ModelGraph graph;
    WeightStore weights;
};

// Appends a dense block: `layers` x (batchnorm -> relu -> conv3x3(growth) -> concat).
// Returns the name of the block's final concat; output channels = in + growth * layers.
std::string add_dense_block(ModelGraph& graph, const std::string& input, const std::string& prefix, int layers,
                            std::int64_t growth);

// Desk-scale DenseNet-style reference backbone with a classification head:
//   stem conv3x3x16 (same)
//   dense block 1: 4 layers, growth 8             -> 48 channels
//   transition: bn -> relu -> conv1x1x16 -> avgpool 2x2 / 2
//   dense block 2: 4 layers, growth 8             -> 48 channels
//   bn -> relu -> global average pool (head boundary, D = 48)
//   dropout(dropout_rate) -> dense(num_classes) -> softmax
// Backbone layers are not trainable; the head dropout and dense layer are.
ModelGraph tiny_densenet_graph(std::int64_t num_classes, double dropout_rate = 0.2);

inline constexpr std::int64_t kTinyFeatureWidth = 48;
inline constexpr const char* kTinyHeadDense = "head_dense";

// Seeded He-normal conv kernels, mildly perturbed batchnorm statistics, and a
// zero head (weight and bias).
Model make_tiny_densenet(std::int64_t num_classes, std::uint64_t seed, double dropout_rate = 0.2);

// Deterministic random weights for any graph: He-normal conv/dense weights,
// zero biases, batchnorm near identity.
WeightStore random_weights(const ModelGraph& graph, std::uint64_t seed);

// Name of the dense layer feeding the final softmax.
std::string head_dense_layer(const ModelGraph& graph);

}  // namespace herb::nnrt
