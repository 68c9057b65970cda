#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "herb/common/tensor.hpp"
#include "herb/eval/metrics.hpp"

namespace herb::eval {

struct EvalReport {
    std::vector<std::string> classes;
    std::string source_split;
    std::size_t samples = 0;
    double accuracy = 0.0;
    double loss = 0.0;
    // Per-class AUC and curve are empty for classes lacking positives or negatives.
    std::vector<std::optional<double>> auc_per_class;
    std::vector<std::optional<RocCurve>> roc;
    // Macro is the headline figure; both average only defined classes.
    double auc_macro = 0.0;
    double auc_micro = 0.0;
    std::vector<ClassPRF> prf;
    double f1_macro = 0.0;
    ConfusionMatrix confusion;
};

// Predictions are row argmaxes (lowest index on ties). `classes` may be empty,
// in which case class names default to their indices.
EvalReport build_report(const Tensor& probs, std::span<const std::size_t> truth, double loss,
                        std::vector<std::string> classes = {}, std::string source_split = {});

// Top-level keys: accuracy, loss, auc_macro, auc_micro, f1_macro, per_class, confusion, roc.
nlohmann::json report_to_json(const EvalReport& report);

// Confusion matrix with a header row and column of class names.
std::string confusion_csv(const EvalReport& report);
// fpr,tpr rows for one class; empty string for a degenerate class.
std::string roc_csv(const EvalReport& report, std::size_t cls);
std::string roc_svg(const EvalReport& report, std::size_t cls);

enum class EmitFormat { json, csv, svg };

// json: the report document at `path`.
// csv: confusion matrix at `path`, ROC points in `<stem>_roc/<class>.csv`.
// svg: one ROC plot per class in the directory `path`.
void emit(const EvalReport& report, EmitFormat format, const std::filesystem::path& path);

// File-name-safe form of a class label.
std::string slug(std::string_view label);

}  // namespace herb::eval
