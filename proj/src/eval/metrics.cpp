#include "herb/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace herb::eval {

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < classes_; ++i) t += at(i, i);
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < classes_; ++j) s += at(truth, j);
    return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < classes_; ++i) s += at(i, predicted);
    return s;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                 std::size_t classes) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("confusion matrix: " + std::to_string(truth.size()) + " true labels but " +
                                    std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix cm(classes);
    for (std::size_t n = 0; n < truth.size(); ++n) {
        if (truth[n] >= classes || predicted[n] >= classes) {
            throw std::invalid_argument("confusion matrix: label out of range at sample " + std::to_string(n));
        }
        ++cm.at(truth[n], predicted[n]);
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw std::invalid_argument("accuracy of an empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::vector<ClassPRF> per_class_prf(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("metrics of an empty confusion matrix");
    std::vector<ClassPRF> out(cm.classes());
    for (std::size_t i = 0; i < cm.classes(); ++i) {
        auto& m = out[i];
        const double tp = static_cast<double>(cm.at(i, i));
        const auto col = cm.col_sum(i);
        const auto row = cm.row_sum(i);
        m.support = row;
        m.precision_undefined = col == 0;
        m.recall_undefined = row == 0;
        m.precision = col == 0 ? 0.0 : tp / static_cast<double>(col);
        m.recall = row == 0 ? 0.0 : tp / static_cast<double>(row);
        m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return out;
}

double macro_f1(const ConfusionMatrix& cm) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& m : per_class_prf(cm)) {
        if (m.absent()) continue;
        sum += m.f1;
        ++used;
    }
    return used == 0 ? 0.0 : sum / static_cast<double>(used);
}

RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& positives) {
    if (scores.size() != positives.size()) {
        throw std::invalid_argument("roc: " + std::to_string(scores.size()) + " scores but " +
                                    std::to_string(positives.size()) + " labels");
    }
    const auto p = static_cast<std::size_t>(std::count(positives.begin(), positives.end(), true));
    const std::size_t n = positives.size() - p;
    if (p == 0 || n == 0) throw DegenerateClass("roc: need at least one positive and one negative");
    if (std::any_of(scores.begin(), scores.end(), [](double s) { return std::isnan(s); })) {
        throw std::invalid_argument("roc: NaN score");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == s; ++i) {
            if (positives[order[i]]) ++tp; else ++fp;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n),
                                static_cast<double>(tp) / static_cast<double>(p)});
    }
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

}  // namespace herb::eval
