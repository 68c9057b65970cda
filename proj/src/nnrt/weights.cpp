#include "herb/nnrt/weights.hpp"

#include <stdexcept>

namespace herb::nnrt {

void WeightStore::set(const std::string& layer, const std::string& param, Tensor value) {
    layers_[layer][param] = std::move(value);
}

const Tensor* WeightStore::find(std::string_view layer, std::string_view param) const {
    auto it = layers_.find(layer);
    if (it == layers_.end()) return nullptr;
    auto p = it->second.find(param);
    return p == it->second.end() ? nullptr : &p->second;
}

const Tensor& WeightStore::get(std::string_view layer, std::string_view param) const {
    if (const Tensor* t = find(layer, param)) return *t;
    throw std::out_of_range("missing weight '" + std::string(param) + "' for layer '" + std::string(layer) + "'");
}

std::size_t WeightStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, params] : layers_) {
        for (const auto& [__, t] : params) n += t.size();
    }
    return n;
}

void check_weights(const ModelGraph& graph, const WeightStore& weights) {
    for (const auto& [layer, params] : expected_parameters(graph)) {
        for (const auto& [param, shape] : params) {
            const Tensor* t = weights.find(layer, param);
            if (!t) throw std::invalid_argument("missing weight '" + param + "' for layer '" + layer + "'");
            if (t->shape() != shape) {
                throw std::invalid_argument("weight '" + param + "' of layer '" + layer + "' has shape " +
                                            shape_to_string(t->shape()) + ", expected " + shape_to_string(shape));
            }
        }
    }
}

}  // namespace herb::nnrt
