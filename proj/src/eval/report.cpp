#include "herb/eval/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "herb/nnrt/forward.hpp"

namespace herb::eval {

namespace fs = std::filesystem;

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string number(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

EvalReport build_report(const Tensor& probs, std::span<const std::size_t> truth, double loss,
                        std::vector<std::string> classes, std::string source_split) {
    if (probs.rank() != 2) throw std::invalid_argument("probabilities must be N x C, got " + shape_to_string(probs.shape()));
    const auto n = static_cast<std::size_t>(probs.dim(0));
    const auto c = static_cast<std::size_t>(probs.dim(1));
    if (n != truth.size()) {
        throw std::invalid_argument("probabilities have " + std::to_string(n) + " rows but " +
                                    std::to_string(truth.size()) + " labels were given");
    }
    if (classes.empty()) {
        for (std::size_t i = 0; i < c; ++i) classes.push_back(std::to_string(i));
    }
    if (classes.size() != c) {
        throw std::invalid_argument("probabilities have " + std::to_string(c) + " columns but " +
                                    std::to_string(classes.size()) + " class names");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < c; ++j) row += probs[i * c + j];
        if (std::abs(row - 1.0) > 1e-6) {
            throw std::invalid_argument("probability row " + std::to_string(i) + " sums to " + std::to_string(row));
        }
    }

    EvalReport r;
    r.classes = std::move(classes);
    r.source_split = std::move(source_split);
    r.samples = n;
    r.loss = loss;
    const auto predicted = nnrt::argmax_rows(probs);
    r.confusion = confusion_matrix(truth, predicted, c);
    r.accuracy = accuracy(r.confusion);
    r.prf = per_class_prf(r.confusion);
    r.f1_macro = macro_f1(r.confusion);

    std::vector<double> scores(n);
    std::vector<bool> positives(n);
    std::vector<double> pooled_scores;
    std::vector<bool> pooled_positives;
    pooled_scores.reserve(n * c);
    pooled_positives.reserve(n * c);
    double auc_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = probs[i * c + k];
            positives[i] = truth[i] == k;
            pooled_scores.push_back(scores[i]);
            pooled_positives.push_back(positives[i]);
        }
        try {
            RocCurve curve = roc_curve(scores, positives);
            const double a = auc(curve);
            r.auc_per_class.emplace_back(a);
            r.roc.emplace_back(std::move(curve));
            auc_sum += a;
            ++defined;
        } catch (const DegenerateClass&) {
            r.auc_per_class.emplace_back();
            r.roc.emplace_back();
        }
    }
    r.auc_macro = defined == 0 ? 0.0 : auc_sum / static_cast<double>(defined);
    try {
        r.auc_micro = auc(roc_curve(pooled_scores, pooled_positives));
    } catch (const DegenerateClass&) {
        r.auc_micro = 0.0;
    }
    return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
    using nlohmann::json;
    json per_class = json::array();
    json roc = json::array();
    for (std::size_t k = 0; k < r.classes.size(); ++k) {
        const auto& m = r.prf[k];
        json flags = json::array();
        if (m.precision_undefined) flags.push_back("precision_undefined");
        if (m.recall_undefined) flags.push_back("recall_undefined");
        if (!r.auc_per_class[k]) flags.push_back("roc_degenerate");
        per_class.push_back({{"class", r.classes[k]},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"auc", r.auc_per_class[k] ? json(*r.auc_per_class[k]) : json(nullptr)},
                             {"support", m.support},
                             {"flags", flags}});
        json points = json(nullptr);
        if (r.roc[k]) {
            points = json::array();
            for (const auto& p : r.roc[k]->points) points.push_back({p.fpr, p.tpr});
        }
        roc.push_back({{"class", r.classes[k]}, {"degenerate", !r.roc[k].has_value()}, {"points", points}});
    }
    json matrix = json::array();
    for (std::size_t i = 0; i < r.confusion.classes(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < r.confusion.classes(); ++j) row.push_back(r.confusion.at(i, j));
        matrix.push_back(row);
    }
    return {{"accuracy", r.accuracy},
            {"loss", r.loss},
            {"auc_macro", r.auc_macro},
            {"auc_micro", r.auc_micro},
            {"f1_macro", r.f1_macro},
            {"per_class", per_class},
            {"confusion",
             {{"labels", r.classes}, {"matrix", matrix}, {"total", r.confusion.total()}, {"source_split", r.source_split}}},
            {"roc", roc}};
}

std::string confusion_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "true\\predicted";
    for (const auto& name : r.classes) out << ',' << csv_field(name);
    out << '\n';
    for (std::size_t i = 0; i < r.classes.size(); ++i) {
        out << csv_field(r.classes[i]);
        for (std::size_t j = 0; j < r.classes.size(); ++j) out << ',' << r.confusion.at(i, j);
        out << '\n';
    }
    return out.str();
}

std::string roc_csv(const EvalReport& r, std::size_t cls) {
    if (!r.roc.at(cls)) return {};
    std::ostringstream out;
    out << "fpr,tpr\n";
    for (const auto& p : r.roc[cls]->points) out << number(p.fpr) << ',' << number(p.tpr) << '\n';
    return out.str();
}

std::string roc_svg(const EvalReport& r, std::size_t cls) {
    constexpr double size = 240.0;
    constexpr double margin = 30.0;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin << "\" height=\""
        << size + 2 * margin << "\">\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin + size << "\" x2=\"" << margin + size << "\" y2=\"" << margin
        << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
    if (r.roc.at(cls)) {
        out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
        for (const auto& p : r.roc[cls]->points) {
            out << margin + p.fpr * size << ',' << margin + (1.0 - p.tpr) * size << ' ';
        }
        out << "\"/>\n";
    }
    std::string title = r.classes.at(cls);
    std::string escaped;
    for (char c : title) {
        switch (c) {
            case '<': escaped += "&lt;"; break;
            case '>': escaped += "&gt;"; break;
            case '&': escaped += "&amp;"; break;
            default: escaped += c;
        }
    }
    out << "<text x=\"" << margin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">" << escaped;
    if (r.auc_per_class[cls]) out << " (AUC " << std::fixed << std::setprecision(3) << *r.auc_per_class[cls] << ")";
    else out << " (degenerate)";
    out << "</text>\n</svg>\n";
    return out.str();
}

std::string slug(std::string_view label) {
    std::string out;
    for (char c : label) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '.';
        out += keep ? c : '_';
    }
    return out.empty() ? "_" : out;
}

void emit(const EvalReport& report, EmitFormat format, const fs::path& path) {
    switch (format) {
        case EmitFormat::json:
            write_text(path, report_to_json(report).dump(2) + "\n");
            break;
        case EmitFormat::csv: {
            write_text(path, confusion_csv(report));
            const fs::path dir = path.parent_path() / (path.stem().string() + "_roc");
            for (std::size_t k = 0; k < report.classes.size(); ++k) {
                if (report.roc[k]) write_text(dir / (slug(report.classes[k]) + ".csv"), roc_csv(report, k));
            }
            break;
        }
        case EmitFormat::svg:
            for (std::size_t k = 0; k < report.classes.size(); ++k) {
                write_text(path / (slug(report.classes[k]) + ".svg"), roc_svg(report, k));
            }
            break;
    }
}

}  // namespace herb::eval
