#pragma once

#include <map>
#include <set>
#include <string>

#include "herb/common/rng.hpp"
#include "herb/nnrt/graph.hpp"
#include "herb/nnrt/weights.hpp"

namespace herb::nnrt {

enum class Mode { train, infer };

struct ForwardOptions {
    Mode mode = Mode::infer;
    // Required in train mode when the graph contains dropout.
    Rng* rng = nullptr;
    // Intermediate outputs to keep (by layer name); `capture_all` keeps every layer.
    std::set<std::string, std::less<>> capture;
    bool capture_all = false;
    // Stop after this layer; its output becomes the result.
    std::string stop_after;
};

struct ForwardResult {
    Tensor output;
    std::map<std::string, Tensor, std::less<>> intermediates;
};

// Executes layers in order on an N x C x H x W batch matching graph.input_shape.
// Intermediates are released after their last consumer unless captured.
ForwardResult forward(const ModelGraph& graph, const WeightStore& weights, const Tensor& batch,
                      const ForwardOptions& options = {});

// Infer-mode class probabilities, N x C.
Tensor predict_proba(const ModelGraph& graph, const WeightStore& weights, const Tensor& batch);

// Infer-mode output at graph.head_boundary (or `boundary` if given), as N x D.
Tensor extract_features(const ModelGraph& graph, const WeightStore& weights, const Tensor& batch,
                        const std::string& boundary = {});

// Index of the largest entry in each row; ties resolve to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor& probs);

}  // namespace herb::nnrt
