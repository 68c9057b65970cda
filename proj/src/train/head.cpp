#include "herb/train/head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "herb/nnrt/tiny_densenet.hpp"

namespace herb::train {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

void check_features(const Tensor& features, std::span<const std::size_t> labels, const HeadParams& head) {
    require(features.rank() == 2, "features must be N x D, got " + shape_to_string(features.shape()));
    require(static_cast<std::size_t>(features.dim(1)) == head.dim,
            "feature width " + std::to_string(features.dim(1)) + " does not match head width " +
                std::to_string(head.dim));
    require(static_cast<std::size_t>(features.dim(0)) == labels.size(),
            "feature rows " + std::to_string(features.dim(0)) + " but " + std::to_string(labels.size()) + " labels");
    require(head.weight.size() == head.classes * head.dim && head.bias.size() == head.classes,
            "head parameter sizes are inconsistent");
    for (std::size_t y : labels) {
        require(y < head.classes, "label " + std::to_string(y) + " out of range for " +
                                      std::to_string(head.classes) + " classes");
    }
}

RowMatrix to_matrix(const Tensor& features) {
    RowMatrix m(features.dim(0), features.dim(1));
    std::copy(features.data(), features.data() + features.size(), m.data());
    return m;
}

Eigen::Map<const RowMatrix> weight_map(const HeadParams& head) {
    return {head.weight.data(), static_cast<Eigen::Index>(head.classes), static_cast<Eigen::Index>(head.dim)};
}

// Row-wise stabilized softmax of F W^T + b.
RowMatrix softmax_logits(const RowMatrix& f, const HeadParams& head) {
    RowMatrix z = f * weight_map(head).transpose();
    Eigen::Map<const Eigen::RowVectorXd> b(head.bias.data(), static_cast<Eigen::Index>(head.classes));
    z.rowwise() += b;
    for (Eigen::Index n = 0; n < z.rows(); ++n) {
        const double m = z.row(n).maxCoeff();
        z.row(n) = (z.row(n).array() - m).exp().matrix();
        z.row(n) /= z.row(n).sum();
    }
    return z;
}

double data_loss(const RowMatrix& p, std::span<const std::size_t> labels) {
    if (labels.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        total -= std::log(std::max(p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(labels[n])), kLogClamp));
    }
    return total / static_cast<double>(labels.size());
}

double accuracy_of(const RowMatrix& p, std::span<const std::size_t> labels) {
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        Eigen::Index best = 0;
        p.row(static_cast<Eigen::Index>(n)).maxCoeff(&best);
        if (static_cast<std::size_t>(best) == labels[n]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

HeadGradients gradients_of(const RowMatrix& f, std::span<const std::size_t> labels, const HeadParams& head,
                           double l2_lambda) {
    const RowMatrix p = softmax_logits(f, head);
    HeadGradients g;
    g.loss = data_loss(p, labels) + l2_lambda * head.squared_norm();
    RowMatrix dz = p;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        dz(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(labels[n])) -= 1.0;
    }
    if (!labels.empty()) dz /= static_cast<double>(labels.size());
    RowMatrix dw = dz.transpose() * f + 2.0 * l2_lambda * weight_map(head);
    Eigen::RowVectorXd db = dz.colwise().sum();
    g.d_weight.assign(dw.data(), dw.data() + dw.size());
    g.d_bias.assign(db.data(), db.data() + db.size());
    return g;
}

void dropout_rows(RowMatrix& f, double p, Rng& rng) {
    if (p <= 0.0) return;
    const double keep = 1.0 - p;
    const double scale = 1.0 / keep;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        f.data()[i] = rng.bernoulli(keep) ? f.data()[i] * scale : 0.0;
    }
}

constexpr double kSigmaFloor = 1e-2;

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // 1/max(sigma, 1% of the largest sigma), or 1 if every feature is constant

    static Standardizer identity(std::size_t dim) { return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)}; }

    static Standardizer fit(const RowMatrix& f) {
        Standardizer s = identity(static_cast<std::size_t>(f.cols()));
        const double n = static_cast<double>(f.rows());
        std::vector<double> sigma(s.mean.size());
        for (Eigen::Index d = 0; d < f.cols(); ++d) {
            const double mu = f.col(d).mean();
            s.mean[d] = mu;
            sigma[d] = std::sqrt((f.col(d).array() - mu).square().sum() / n);
        }
        // Near-dead channels would otherwise get huge folded weights.
        const double floor = sigma.empty() ? 0.0 : kSigmaFloor * *std::max_element(sigma.begin(), sigma.end());
        for (std::size_t d = 0; d < sigma.size(); ++d) {
            const double denom = std::max(sigma[d], floor);
            s.scale[d] = denom > 0.0 ? 1.0 / denom : 1.0;
        }
        return s;
    }

    void apply(RowMatrix& f) const {
        for (Eigen::Index d = 0; d < f.cols(); ++d) {
            f.col(d).array() = (f.col(d).array() - mean[d]) * scale[d];
        }
    }

    // Head on standardized features -> equivalent head on raw features.
    HeadParams fold(const HeadParams& z) const {
        HeadParams raw = z;
        for (std::size_t c = 0; c < z.classes; ++c) {
            double shift = 0.0;
            for (std::size_t d = 0; d < z.dim; ++d) {
                raw.w(c, d) = z.w(c, d) * scale[d];
                shift += z.w(c, d) * scale[d] * mean[d];
            }
            raw.bias[c] = z.bias[c] - shift;
        }
        return raw;
    }
};

}  // namespace

void validate(const TrainConfig& config) {
    require(std::isfinite(config.learning_rate) && config.learning_rate >= 0.0, "learning_rate must be >= 0");
    require(config.momentum >= 0.0 && config.momentum < 1.0, "momentum must be in [0, 1)");
    require(std::isfinite(config.l2_lambda) && config.l2_lambda >= 0.0, "l2_lambda must be >= 0");
    require(config.dropout_p >= 0.0 && config.dropout_p < 1.0, "dropout_p must be in [0, 1)");
    require(config.batch_size >= 1, "batch_size must be >= 1");
    require(config.max_epochs >= 1, "max_epochs must be >= 1");
    require(config.patience >= 1, "patience must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},     {"l2_lambda", c.l2_lambda},
            {"dropout_p", c.dropout_p},         {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
            {"patience", c.patience},           {"seed", c.seed},             {"standardize_features", c.standardize_features}};
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
    require(doc.is_object(), "train config must be a JSON object");
    TrainConfig c;
    try {
        c.learning_rate = doc.value("learning_rate", c.learning_rate);
        c.momentum = doc.value("momentum", c.momentum);
        c.l2_lambda = doc.value("l2_lambda", c.l2_lambda);
        c.dropout_p = doc.value("dropout_p", c.dropout_p);
        c.batch_size = doc.value("batch_size", c.batch_size);
        c.max_epochs = doc.value("max_epochs", c.max_epochs);
        c.patience = doc.value("patience", c.patience);
        c.seed = doc.value("seed", c.seed);
        c.standardize_features = doc.value("standardize_features", c.standardize_features);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("train config: ") + e.what());
    }
    validate(c);
    return c;
}

HeadParams HeadParams::zeros(std::size_t classes, std::size_t dim) {
    return {classes, dim, std::vector<double>(classes * dim, 0.0), std::vector<double>(classes, 0.0)};
}

double HeadParams::squared_norm() const {
    double s = 0.0;
    for (double v : weight) s += v * v;
    return s;
}

nlohmann::json to_json(const HeadParams& head) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t c = 0; c < head.classes; ++c) {
        rows.push_back(std::vector<double>(head.weight.begin() + c * head.dim, head.weight.begin() + (c + 1) * head.dim));
    }
    return {{"classes", head.classes}, {"feature_dim", head.dim}, {"weight", rows}, {"bias", head.bias}};
}

HeadParams head_from_json(const nlohmann::json& doc) {
    try {
        HeadParams h = HeadParams::zeros(doc.at("classes").get<std::size_t>(), doc.at("feature_dim").get<std::size_t>());
        const auto& rows = doc.at("weight");
        require(rows.is_array() && rows.size() == h.classes, "head weight must have one row per class");
        for (std::size_t c = 0; c < h.classes; ++c) {
            const auto row = rows[c].get<std::vector<double>>();
            require(row.size() == h.dim, "head weight row " + std::to_string(c) + " has wrong width");
            std::copy(row.begin(), row.end(), h.weight.begin() + c * h.dim);
        }
        h.bias = doc.at("bias").get<std::vector<double>>();
        require(h.bias.size() == h.classes, "head bias length must equal classes");
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("head: ") + e.what());
    }
}

void install_head(const nnrt::ModelGraph& graph, nnrt::WeightStore& weights, const HeadParams& head) {
    const std::string layer = nnrt::head_dense_layer(graph);
    const auto expected = nnrt::expected_parameters(graph).at(layer).at("weight");
    require(expected == Tensor::Shape{static_cast<std::int64_t>(head.classes), static_cast<std::int64_t>(head.dim)},
            "head " + std::to_string(head.classes) + "x" + std::to_string(head.dim) + " does not fit layer " + layer +
                " " + shape_to_string(expected));
    Tensor w({static_cast<std::int64_t>(head.classes), static_cast<std::int64_t>(head.dim)});
    std::transform(head.weight.begin(), head.weight.end(), w.data(), [](double v) { return static_cast<float>(v); });
    Tensor b({static_cast<std::int64_t>(head.classes)});
    std::transform(head.bias.begin(), head.bias.end(), b.data(), [](double v) { return static_cast<float>(v); });
    weights.set(layer, "weight", std::move(w));
    weights.set(layer, "bias", std::move(b));
}

HeadParams head_from_weights(const nnrt::ModelGraph& graph, const nnrt::WeightStore& weights) {
    const std::string layer = nnrt::head_dense_layer(graph);
    const Tensor& w = weights.get(layer, "weight");
    const Tensor& b = weights.get(layer, "bias");
    HeadParams h = HeadParams::zeros(static_cast<std::size_t>(w.dim(0)), static_cast<std::size_t>(w.dim(1)));
    std::copy(w.data(), w.data() + w.size(), h.weight.begin());
    std::copy(b.data(), b.data() + b.size(), h.bias.begin());
    return h;
}

double cross_entropy_loss(const Tensor& probs, std::span<const std::size_t> labels, const HeadParams& head,
                          double l2_lambda) {
    return cross_entropy_loss(probs, labels) + l2_lambda * head.squared_norm();
}

double cross_entropy_loss(const Tensor& probs, std::span<const std::size_t> labels) {
    require(probs.rank() == 2, "probabilities must be N x C, got " + shape_to_string(probs.shape()));
    const auto n = static_cast<std::size_t>(probs.dim(0));
    const auto c = static_cast<std::size_t>(probs.dim(1));
    require(n == labels.size(), "probability rows " + std::to_string(n) + " but " + std::to_string(labels.size()) +
                                    " labels");
    if (n == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require(labels[i] < c, "label " + std::to_string(labels[i]) + " out of range for " + std::to_string(c) +
                                   " classes");
        double row = 0.0;
        for (std::size_t j = 0; j < c; ++j) row += probs[i * c + j];
        require(std::abs(row - 1.0) <= 1e-6, "probability row " + std::to_string(i) + " sums to " + std::to_string(row));
        total -= std::log(std::max(static_cast<double>(probs[i * c + labels[i]]), kLogClamp));
    }
    return total / static_cast<double>(n);
}

std::vector<double> head_probabilities(const Tensor& features, const HeadParams& head) {
    require(features.rank() == 2 && static_cast<std::size_t>(features.dim(1)) == head.dim,
            "features " + shape_to_string(features.shape()) + " do not match head width " + std::to_string(head.dim));
    const RowMatrix p = softmax_logits(to_matrix(features), head);
    return {p.data(), p.data() + p.size()};
}

Tensor head_predict(const Tensor& features, const HeadParams& head) {
    const auto p = head_probabilities(features, head);
    Tensor out({features.dim(0), static_cast<std::int64_t>(head.classes)});
    std::transform(p.begin(), p.end(), out.data(), [](double v) { return static_cast<float>(v); });
    return out;
}

HeadGradients head_gradients(const Tensor& features, std::span<const std::size_t> labels, const HeadParams& head,
                             double l2_lambda) {
    check_features(features, labels, head);
    return gradients_of(to_matrix(features), labels, head, l2_lambda);
}

HeadGradients head_gradients(const Tensor& features, std::span<const std::size_t> labels, const HeadParams& head,
                             const TrainConfig& config, nnrt::Mode mode, Rng& rng) {
    check_features(features, labels, head);
    RowMatrix f = to_matrix(features);
    if (mode == nnrt::Mode::train) dropout_rows(f, config.dropout_p, rng);
    return gradients_of(f, labels, head, config.l2_lambda);
}

Tensor apply_dropout(const Tensor& features, double p, Rng& rng) {
    require(p >= 0.0 && p < 1.0, "dropout probability must be in [0, 1)");
    Tensor out = features;
    if (p == 0.0) return out;
    const double keep = 1.0 - p;
    for (float& v : out.values()) v = rng.bernoulli(keep) ? static_cast<float>(v / keep) : 0.0f;
    return out;
}

nlohmann::json to_json(const TrainReport& r) {
    return {{"epochs", r.epochs()},           {"train_loss", r.train_loss}, {"train_accuracy", r.train_accuracy},
            {"val_loss", r.val_loss},         {"val_accuracy", r.val_accuracy}, {"best_epoch", r.best_epoch},
            {"stopped_early", r.stopped_early}};
}

double accuracy(const Tensor& probs, std::span<const std::size_t> labels) {
    require(probs.rank() == 2 && static_cast<std::size_t>(probs.dim(0)) == labels.size(),
            "probabilities and labels disagree in length");
    if (labels.empty()) return 0.0;
    const auto predicted = nnrt::argmax_rows(probs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

TrainResult train_head(const Tensor& train_features, std::span<const std::size_t> train_labels,
                       const Tensor& val_features, std::span<const std::size_t> val_labels, std::size_t num_classes,
                       const TrainConfig& config) {
    validate(config);
    require(num_classes >= 1, "num_classes must be >= 1");
    require(!train_labels.empty(), "training split is empty");
    require(!val_labels.empty(), "validation split is empty");
    require(train_features.rank() == 2, "train features must be N x D");
    const auto dim = static_cast<std::size_t>(train_features.dim(1));
    HeadParams head = HeadParams::zeros(num_classes, dim);
    check_features(train_features, train_labels, head);
    check_features(val_features, val_labels, head);

    RowMatrix ftrain = to_matrix(train_features);
    RowMatrix fval = to_matrix(val_features);
    const Standardizer standardizer =
        config.standardize_features ? Standardizer::fit(ftrain) : Standardizer::identity(dim);
    standardizer.apply(ftrain);
    standardizer.apply(fval);

    const std::size_t n = train_labels.size();
    std::vector<double> vel_w(head.weight.size(), 0.0);
    std::vector<double> vel_b(head.bias.size(), 0.0);
    std::vector<std::size_t> order(n);
    std::vector<std::size_t> batch_labels;

    TrainResult result{head, {}};
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        Rng rng(config.seed, epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            RowMatrix fb(static_cast<Eigen::Index>(end - start), static_cast<Eigen::Index>(dim));
            batch_labels.clear();
            for (std::size_t i = start; i < end; ++i) {
                fb.row(static_cast<Eigen::Index>(i - start)) = ftrain.row(static_cast<Eigen::Index>(order[i]));
                batch_labels.push_back(train_labels[order[i]]);
            }
            dropout_rows(fb, config.dropout_p, rng);
            const HeadGradients g = gradients_of(fb, batch_labels, head, config.l2_lambda);
            if (!std::isfinite(g.loss)) {
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                         " (non-finite loss); lower learning_rate");
            }
            for (std::size_t i = 0; i < head.weight.size(); ++i) {
                vel_w[i] = config.momentum * vel_w[i] - config.learning_rate * g.d_weight[i];
                head.weight[i] += vel_w[i];
            }
            for (std::size_t i = 0; i < head.bias.size(); ++i) {
                vel_b[i] = config.momentum * vel_b[i] - config.learning_rate * g.d_bias[i];
                head.bias[i] += vel_b[i];
            }
        }

        const RowMatrix ptrain = softmax_logits(ftrain, head);
        const RowMatrix pval = softmax_logits(fval, head);
        const double train_loss = data_loss(ptrain, train_labels) + config.l2_lambda * head.squared_norm();
        const double val_loss = data_loss(pval, val_labels);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                     " (non-finite loss); lower learning_rate");
        }
        auto& r = result.report;
        r.train_loss.push_back(train_loss);
        r.train_accuracy.push_back(accuracy_of(ptrain, train_labels));
        r.val_loss.push_back(val_loss);
        r.val_accuracy.push_back(accuracy_of(pval, val_labels));

        if (val_loss < best_val) {
            best_val = val_loss;
            since_best = 0;
            r.best_epoch = epoch;
            result.head = head;
        } else if (++since_best >= config.patience) {
            r.stopped_early = epoch < config.max_epochs;
            break;
        }
    }
    result.head = standardizer.fold(result.head);
    return result;
}

}  // namespace herb::train
