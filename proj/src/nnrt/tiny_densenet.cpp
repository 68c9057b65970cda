#include "herb/nnrt/tiny_densenet.hpp"

#include <cmath>
#include <stdexcept>

#include "herb/common/rng.hpp"

namespace herb::nnrt {

namespace {

LayerSpec layer(std::string name, LayerKind kind, std::vector<std::string> inputs) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = kind;
    l.inputs = std::move(inputs);
    return l;
}

LayerSpec conv(std::string name, std::string input, std::int64_t filters, std::int64_t kernel) {
    LayerSpec l = layer(std::move(name), LayerKind::conv2d, {std::move(input)});
    l.filters = filters;
    l.kernel = kernel;
    l.stride = 1;
    l.padding = Padding::same;
    return l;
}

}  // namespace

std::string add_dense_block(ModelGraph& graph, const std::string& input, const std::string& prefix, int layers,
                            std::int64_t growth) {
    std::string current = input;
    for (int i = 1; i <= layers; ++i) {
        const std::string p = prefix + "_l" + std::to_string(i);
        graph.layers.push_back(layer(p + "_bn", LayerKind::batchnorm, {current}));
        graph.layers.push_back(layer(p + "_relu", LayerKind::relu, {p + "_bn"}));
        graph.layers.push_back(conv(p + "_conv", p + "_relu", growth, 3));
        graph.layers.push_back(layer(p + "_concat", LayerKind::concat, {current, p + "_conv"}));
        current = p + "_concat";
    }
    return current;
}

ModelGraph tiny_densenet_graph(std::int64_t num_classes, double dropout_rate) {
    ModelGraph g;
    g.name = "TinyDenseNet";
    g.layers.push_back(conv("stem_conv", std::string(kGraphInput), 16, 3));
    const std::string b1 = add_dense_block(g, "stem_conv", "block1", 4, 8);

    g.layers.push_back(layer("transition_bn", LayerKind::batchnorm, {b1}));
    g.layers.push_back(layer("transition_relu", LayerKind::relu, {"transition_bn"}));
    g.layers.push_back(conv("transition_conv", "transition_relu", 16, 1));
    LayerSpec pool = layer("transition_pool", LayerKind::avgpool, {"transition_conv"});
    pool.window = 2;
    pool.stride = 2;
    g.layers.push_back(pool);

    const std::string b2 = add_dense_block(g, "transition_pool", "block2", 4, 8);
    g.layers.push_back(layer("final_bn", LayerKind::batchnorm, {b2}));
    g.layers.push_back(layer("final_relu", LayerKind::relu, {"final_bn"}));
    g.layers.push_back(layer("gap", LayerKind::global_avg_pool, {"final_relu"}));
    g.head_boundary = "gap";

    LayerSpec drop = layer("head_dropout", LayerKind::dropout, {"gap"});
    drop.rate = dropout_rate;
    drop.trainable = true;
    g.layers.push_back(drop);
    LayerSpec dense = layer(kTinyHeadDense, LayerKind::dense, {"head_dropout"});
    dense.units = num_classes;
    dense.trainable = true;
    g.layers.push_back(dense);
    g.layers.push_back(layer("softmax", LayerKind::softmax, {kTinyHeadDense}));
    validate_graph(g);
    return g;
}

WeightStore random_weights(const ModelGraph& graph, std::uint64_t seed) {
    WeightStore store;
    for (const auto& [name, params] : expected_parameters(graph)) {
        Rng rng(seed, stream_id(name));
        const LayerSpec* spec = graph.find(name);
        for (const auto& [param, shape] : params) {
            Tensor t(shape);
            if (param == "kernel" || param == "weight") {
                const double fan_in = static_cast<double>(t.size()) / static_cast<double>(shape[0]);
                const double sd = std::sqrt(2.0 / fan_in);
                for (auto& v : t.values()) v = static_cast<float>(sd * rng.normal());
            } else if (spec->kind == LayerKind::batchnorm) {
                for (auto& v : t.values()) {
                    if (param == "gamma") v = static_cast<float>(rng.uniform(0.8, 1.2));
                    if (param == "beta") v = static_cast<float>(rng.uniform(-0.1, 0.1));
                    if (param == "mean") v = static_cast<float>(rng.uniform(-0.1, 0.1));
                    if (param == "variance") v = static_cast<float>(rng.uniform(0.8, 1.2));
                }
            }
            store.set(name, param, std::move(t));
        }
    }
    return store;
}

std::string head_dense_layer(const ModelGraph& graph) {
    // softmax <- [dropout...] <- dense
    const LayerSpec* l = &graph.layers.back();
    while (l && l->kind != LayerKind::dense) {
        if (l->inputs.size() != 1) break;
        l = graph.find(l->inputs.front());
    }
    if (!l || l->kind != LayerKind::dense) throw std::invalid_argument("graph has no dense layer feeding its softmax");
    return l->name;
}

Model make_tiny_densenet(std::int64_t num_classes, std::uint64_t seed, double dropout_rate) {
    Model m{tiny_densenet_graph(num_classes, dropout_rate), {}};
    m.weights = random_weights(m.graph, seed);
    m.weights.set(kTinyHeadDense, "weight", Tensor({num_classes, kTinyFeatureWidth}));
    m.weights.set(kTinyHeadDense, "bias", Tensor({num_classes}));
    return m;
}

}  // namespace herb::nnrt
