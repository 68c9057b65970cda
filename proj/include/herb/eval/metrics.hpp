#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace herb::eval {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

    std::size_t classes() const { return classes_; }
    std::uint64_t& at(std::size_t truth, std::size_t predicted) { return counts_.at(truth * classes_ + predicted); }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * classes_ + predicted); }

    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_sum(std::size_t truth) const;
    std::uint64_t col_sum(std::size_t predicted) const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t classes_ = 0;
    std::vector<std::uint64_t> counts_;
};

// Throws std::invalid_argument for mismatched lengths or labels outside [0, classes).
ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                 std::size_t classes);

// Throws std::invalid_argument when the matrix is empty.
double accuracy(const ConfusionMatrix& cm);

struct ClassPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;  // row sum
    bool precision_undefined = false;  // column sum 0
    bool recall_undefined = false;     // row sum 0
    // Neither true nor predicted anywhere: left out of the macro mean.
    bool absent() const { return precision_undefined && recall_undefined; }
};

// Zero denominators give 0 with the matching flag set.
std::vector<ClassPRF> per_class_prf(const ConfusionMatrix& cm);
double macro_f1(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    bool operator==(const RocPoint&) const = default;
};

// Starts at (0,0) and ends at (1,1); one point per distinct score, descending.
struct RocCurve {
    std::vector<RocPoint> points;
};

class DegenerateClass : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Threshold sweep with tied scores crossing together. Throws DegenerateClass
// without at least one positive and one negative, std::invalid_argument for NaN scores.
RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& positives);

// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

}  // namespace herb::eval
