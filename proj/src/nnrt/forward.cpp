#include "herb/nnrt/forward.hpp"

#include <stdexcept>

namespace herb::nnrt {

namespace {

Tensor run_layer(const LayerSpec& layer, const std::vector<const Tensor*>& in, const WeightStore& weights,
                 const ModelGraph& graph, const ForwardOptions& options) {
    const Tensor& x = *in.front();
    switch (layer.kind) {
        case LayerKind::conv2d: {
            const Tensor* bias = layer.use_bias ? &weights.get(layer.name, "bias") : nullptr;
            return conv2d_forward(x, weights.get(layer.name, "kernel"), layer.stride, layer.padding,
                                  bias ? *bias : Tensor{});
        }
        case LayerKind::batchnorm:
            return batchnorm_forward(x, weights.get(layer.name, "gamma"), weights.get(layer.name, "beta"),
                                     weights.get(layer.name, "mean"), weights.get(layer.name, "variance"),
                                     graph.batchnorm_epsilon);
        case LayerKind::relu:
            return relu_forward(x);
        case LayerKind::maxpool:
            return pool_forward(x, PoolKind::max, layer.window, layer.stride);
        case LayerKind::avgpool:
            return pool_forward(x, PoolKind::avg, layer.window, layer.stride);
        case LayerKind::concat:
            return concat_channels(std::span<const Tensor* const>(in));
        case LayerKind::global_avg_pool:
            return global_avg_pool(x);
        case LayerKind::dense:
            return dense_forward(x, weights.get(layer.name, "weight"), weights.get(layer.name, "bias"));
        case LayerKind::dropout:
            if (options.mode == Mode::infer || layer.rate == 0.0) return x;
            if (!options.rng) throw std::invalid_argument("train-mode dropout in '" + layer.name + "' needs an RNG");
            return dropout_forward(x, layer.rate, *options.rng);
        case LayerKind::softmax:
            return softmax(x);
    }
    throw std::logic_error("unhandled layer kind");
}

}  // namespace

ForwardResult forward(const ModelGraph& graph, const WeightStore& weights, const Tensor& batch,
                      const ForwardOptions& options) {
    validate_graph(graph);
    const Tensor::Shape expected{graph.input_shape[0], graph.input_shape[1], graph.input_shape[2]};
    if (batch.rank() != 4 || Tensor::Shape(batch.shape().begin() + 1, batch.shape().end()) != expected) {
        throw std::invalid_argument("input batch " + shape_to_string(batch.shape()) + " does not match graph input " +
                                    shape_to_string(expected));
    }

    std::size_t last = graph.layers.size() - 1;
    if (!options.stop_after.empty()) {
        bool found = false;
        for (std::size_t i = 0; i < graph.layers.size(); ++i) {
            if (graph.layers[i].name == options.stop_after) {
                last = i;
                found = true;
                break;
            }
        }
        if (!found) throw std::invalid_argument("unknown layer '" + options.stop_after + "'");
    }

    // Position of the final consumer of each value.
    std::map<std::string, std::size_t, std::less<>> last_use;
    for (std::size_t i = 0; i <= last; ++i) {
        for (const auto& name : graph.layers[i].inputs) last_use[name] = i;
    }

    std::map<std::string, Tensor, std::less<>> live;
    ForwardResult result;
    const Tensor* input = &batch;
    for (std::size_t i = 0; i <= last; ++i) {
        const auto& layer = graph.layers[i];
        std::vector<const Tensor*> in;
        for (const auto& name : layer.inputs) {
            in.push_back(name == kGraphInput ? input : &live.at(name));
        }
        Tensor out = run_layer(layer, in, weights, graph, options);
        for (const auto& name : layer.inputs) {
            if (name != kGraphInput && last_use[name] == i) live.erase(name);
        }
        if (options.capture_all || options.capture.contains(layer.name)) result.intermediates[layer.name] = out;
        if (i == last) {
            result.output = std::move(out);
        } else if (last_use.contains(layer.name)) {
            live[layer.name] = std::move(out);
        }
    }
    return result;
}

Tensor predict_proba(const ModelGraph& graph, const WeightStore& weights, const Tensor& batch) {
    return forward(graph, weights, batch).output;
}

Tensor extract_features(const ModelGraph& graph, const WeightStore& weights, const Tensor& batch,
                        const std::string& boundary) {
    ForwardOptions options;
    options.stop_after = boundary.empty() ? graph.head_boundary : boundary;
    Tensor out = forward(graph, weights, batch, options).output;
    if (out.rank() == 2) return out;
    const auto n = out.dim(0);
    return out.reshaped({n, static_cast<std::int64_t>(out.size()) / std::max<std::int64_t>(n, 1)});
}

std::vector<std::size_t> argmax_rows(const Tensor& probs) {
    if (probs.rank() != 2) throw std::invalid_argument("argmax_rows expects an N x C tensor");
    const auto n = probs.dim(0), c = probs.dim(1);
    std::vector<std::size_t> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const float* row = probs.data() + i * c;
        std::int64_t best = 0;
        for (std::int64_t j = 1; j < c; ++j) {
            if (row[j] > row[best]) best = j;
        }
        out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return out;
}

}  // namespace herb::nnrt
