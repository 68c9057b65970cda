#include "herb/nnrt/graph.hpp"

#include <set>
#include <stdexcept>

namespace herb::nnrt {

using nlohmann::json;

namespace {

// Bounds keep shape arithmetic far from overflow for untrusted graphs.
constexpr std::int64_t kMaxDim = 1 << 16;
constexpr std::int64_t kMaxElements = std::int64_t{1} << 32;

[[noreturn]] void fail(const LayerSpec& layer, const std::string& msg) {
    throw std::invalid_argument("layer '" + layer.name + "' (" + std::string(to_string(layer.kind)) + "): " + msg);
}

void check_dim(const LayerSpec& layer, std::int64_t v, const char* what) {
    if (v < 1 || v > kMaxDim) fail(layer, std::string(what) + " must lie in [1, 65536], got " + std::to_string(v));
}

Tensor::Shape checked(const LayerSpec& layer, Tensor::Shape s) {
    std::int64_t count = 1;
    for (auto d : s) {
        if (d < 1 || d > kMaxDim) fail(layer, "output dimension out of range in " + shape_to_string(s));
        count *= d;
        if (count > kMaxElements) fail(layer, "output " + shape_to_string(s) + " is too large");
    }
    return s;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::avgpool: return "avgpool";
        case LayerKind::concat: return "concat";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::dense: return "dense";
        case LayerKind::dropout: return "dropout";
        case LayerKind::softmax: return "softmax";
    }
    return "unknown";
}

LayerKind parse_layer_kind(std::string_view text) {
    for (auto k : {LayerKind::conv2d, LayerKind::batchnorm, LayerKind::relu, LayerKind::maxpool, LayerKind::avgpool,
                   LayerKind::concat, LayerKind::global_avg_pool, LayerKind::dense, LayerKind::dropout,
                   LayerKind::softmax}) {
        if (to_string(k) == text) return k;
    }
    throw std::invalid_argument("unknown layer kind '" + std::string(text) + "'");
}

const LayerSpec* ModelGraph::find(std::string_view layer) const {
    for (const auto& l : layers) {
        if (l.name == layer) return &l;
    }
    return nullptr;
}

std::int64_t ModelGraph::num_classes() const {
    const auto shapes = infer_shapes(*this);
    return shapes.at(layers.back().name).at(0);
}

ShapeMap infer_shapes(const ModelGraph& graph) {
    ShapeMap shapes;
    for (auto d : graph.input_shape) {
        if (d < 1 || d > kMaxDim) throw std::invalid_argument("graph input shape out of range");
    }
    shapes.emplace(std::string(kGraphInput), Tensor::Shape(graph.input_shape.begin(), graph.input_shape.end()));
    if (graph.layers.empty()) throw std::invalid_argument("graph has no layers");
    if (!(graph.batchnorm_epsilon > 0.0)) throw std::invalid_argument("batchnorm epsilon must be positive");

    std::size_t softmax_count = 0;
    for (const auto& layer : graph.layers) {
        if (layer.name.empty()) throw std::invalid_argument("layer with empty name");
        if (shapes.contains(layer.name)) fail(layer, "duplicate output name");
        const std::size_t arity = layer.inputs.size();
        if (layer.kind == LayerKind::concat ? arity < 1 : arity != 1) {
            fail(layer, "wrong number of inputs (" + std::to_string(arity) + ")");
        }
        std::vector<const Tensor::Shape*> in;
        for (const auto& name : layer.inputs) {
            auto it = shapes.find(name);
            if (it == shapes.end()) fail(layer, "input '" + name + "' is not produced before use");
            in.push_back(&it->second);
        }
        const Tensor::Shape& x = *in.front();
        const bool spatial = x.size() == 3;
        auto need_spatial = [&] {
            if (!spatial) fail(layer, "requires a spatial (C x H x W) input, got " + shape_to_string(x));
        };

        Tensor::Shape out;
        switch (layer.kind) {
            case LayerKind::conv2d: {
                need_spatial();
                check_dim(layer, layer.filters, "filters");
                check_dim(layer, layer.kernel, "kernel");
                check_dim(layer, layer.stride, "stride");
                ConvGeometry g{};
                try {
                    g = conv_geometry(x[1], x[2], layer.kernel, layer.stride, layer.padding);
                } catch (const std::invalid_argument& e) {
                    fail(layer, e.what());
                }
                out = {layer.filters, g.out_h, g.out_w};
                break;
            }
            case LayerKind::maxpool:
            case LayerKind::avgpool:
                need_spatial();
                check_dim(layer, layer.window, "window");
                check_dim(layer, layer.stride, "stride");
                if (layer.window > x[1] || layer.window > x[2]) fail(layer, "pool window exceeds input");
                out = {x[0], (x[1] - layer.window) / layer.stride + 1, (x[2] - layer.window) / layer.stride + 1};
                break;
            case LayerKind::concat: {
                std::int64_t channels = 0;
                for (const auto* s : in) {
                    if (s->size() != x.size() || (spatial && ((*s)[1] != x[1] || (*s)[2] != x[2]))) {
                        fail(layer, "input shapes " + shape_to_string(x) + " and " + shape_to_string(*s) + " differ");
                    }
                    channels += (*s)[0];
                }
                out = x;
                out[0] = channels;
                break;
            }
            case LayerKind::global_avg_pool:
                need_spatial();
                out = {x[0]};
                break;
            case LayerKind::dense:
                if (spatial) fail(layer, "requires a vector input, got " + shape_to_string(x));
                check_dim(layer, layer.units, "units");
                out = {layer.units};
                break;
            case LayerKind::dropout:
                if (!(layer.rate >= 0.0 && layer.rate < 1.0)) fail(layer, "rate must lie in [0, 1)");
                out = x;
                break;
            case LayerKind::softmax:
                if (spatial) fail(layer, "requires a vector input");
                ++softmax_count;
                out = x;
                break;
            case LayerKind::batchnorm:
            case LayerKind::relu:
                out = x;
                break;
        }
        shapes.emplace(layer.name, checked(layer, std::move(out)));
    }
    if (softmax_count != 1 || graph.layers.back().kind != LayerKind::softmax) {
        throw std::invalid_argument("graph must end in exactly one softmax layer");
    }
    if (!shapes.contains(graph.head_boundary) || graph.head_boundary == kGraphInput) {
        throw std::invalid_argument("head boundary '" + graph.head_boundary + "' is not a layer of the graph");
    }
    return shapes;
}

void validate_graph(const ModelGraph& graph) {
    (void)infer_shapes(graph);
}

std::map<std::string, std::map<std::string, Tensor::Shape>> expected_parameters(const ModelGraph& graph) {
    const auto shapes = infer_shapes(graph);
    std::map<std::string, std::map<std::string, Tensor::Shape>> params;
    for (const auto& layer : graph.layers) {
        const auto& x = shapes.at(layer.inputs.front());
        switch (layer.kind) {
            case LayerKind::conv2d:
                params[layer.name]["kernel"] = {layer.filters, x[0], layer.kernel, layer.kernel};
                if (layer.use_bias) params[layer.name]["bias"] = {layer.filters};
                break;
            case LayerKind::batchnorm:
                for (const char* p : {"gamma", "beta", "mean", "variance"}) params[layer.name][p] = {x[0]};
                break;
            case LayerKind::dense:
                params[layer.name]["weight"] = {layer.units, x[0]};
                params[layer.name]["bias"] = {layer.units};
                break;
            default:
                break;
        }
    }
    return params;
}

// Fields equal to their defaults (trainable false, stride 1, no bias) are omitted.
json graph_to_json(const ModelGraph& graph) {
    json layers = json::array();
    for (const auto& l : graph.layers) {
        json j{{"name", l.name}, {"kind", to_string(l.kind)}, {"inputs", l.inputs}};
        if (l.trainable) j["trainable"] = true;
        switch (l.kind) {
            case LayerKind::conv2d:
                j["filters"] = l.filters;
                j["kernel"] = l.kernel;
                if (l.stride != 1) j["stride"] = l.stride;
                j["padding"] = l.padding == Padding::same ? "same" : "valid";
                if (l.use_bias) j["use_bias"] = true;
                break;
            case LayerKind::maxpool:
            case LayerKind::avgpool:
                j["window"] = l.window;
                j["stride"] = l.stride;
                break;
            case LayerKind::dense:
                j["units"] = l.units;
                break;
            case LayerKind::dropout:
                j["rate"] = l.rate;
                break;
            default:
                break;
        }
        layers.push_back(std::move(j));
    }
    return json{{"name", graph.name},
                {"input_shape", graph.input_shape},
                {"head_boundary", graph.head_boundary},
                {"batchnorm_epsilon", graph.batchnorm_epsilon},
                {"layers", std::move(layers)}};
}

ModelGraph graph_from_json(const json& doc) {
    ModelGraph g;
    try {
        g.name = doc.at("name").get<std::string>();
        const auto shape = doc.at("input_shape").get<std::vector<std::int64_t>>();
        if (shape.size() != 3) throw std::invalid_argument("input_shape must have 3 entries");
        std::copy(shape.begin(), shape.end(), g.input_shape.begin());
        g.head_boundary = doc.at("head_boundary").get<std::string>();
        g.batchnorm_epsilon = doc.value("batchnorm_epsilon", 1e-5);
        for (const auto& j : doc.at("layers")) {
            LayerSpec l;
            l.name = j.at("name").get<std::string>();
            l.kind = parse_layer_kind(j.at("kind").get<std::string>());
            l.inputs = j.at("inputs").get<std::vector<std::string>>();
            l.trainable = j.value("trainable", false);
            l.filters = j.value("filters", std::int64_t{0});
            l.kernel = j.value("kernel", std::int64_t{1});
            l.stride = j.value("stride", std::int64_t{1});
            const std::string padding = j.value("padding", std::string("valid"));
            if (padding != "valid" && padding != "same") throw std::invalid_argument("unknown padding '" + padding + "'");
            l.padding = padding == "same" ? Padding::same : Padding::valid;
            l.use_bias = j.value("use_bias", false);
            l.window = j.value("window", std::int64_t{2});
            l.units = j.value("units", std::int64_t{0});
            l.rate = j.value("rate", 0.0);
            g.layers.push_back(std::move(l));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed graph description: ") + e.what());
    }
    validate_graph(g);
    return g;
}

}  // namespace herb::nnrt
