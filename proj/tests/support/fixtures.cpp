#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace herb::fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

TempDir::TempDir() {
    std::string pattern = (fs::temp_directory_path() / "herb-test-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

RawImage shape_image(std::size_t cls, Rng& rng, int width, int height) {
    static constexpr std::uint8_t palette[][3] = {
        {210, 40, 40}, {40, 190, 60}, {50, 60, 210}, {220, 200, 40}, {200, 50, 200}, {40, 200, 200},
    };
    const auto& base = palette[cls % 6];
    const int shape = static_cast<int>(cls % 3);

    RawImage img = make_image(width, height, 3);
    const int gray = 90 + static_cast<int>(rng.below(70));
    std::fill(img.pixels.begin(), img.pixels.end(), static_cast<std::uint8_t>(gray));

    std::uint8_t color[3];
    for (int c = 0; c < 3; ++c) {
        color[c] = static_cast<std::uint8_t>(std::clamp(base[c] + static_cast<int>(rng.below(61)) - 30, 0, 255));
    }
    const int min_side = std::min(width, height);
    const int size = min_side / 5 + static_cast<int>(rng.below(static_cast<std::uint64_t>(min_side / 5) + 1));
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - size) + 1));
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - size) + 1));
    const double half = size / 2.0;
    for (int y = y0; y < y0 + size; ++y) {
        for (int x = x0; x < x0 + size; ++x) {
            const double u = x - x0 + 0.5;
            const double v = y - y0 + 0.5;
            bool inside = true;
            if (shape == 0) inside = (u - half) * (u - half) + (v - half) * (v - half) <= half * half;
            if (shape == 2) inside = std::abs(u - half) <= v / 2.0;
            if (!inside) continue;
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[c];
        }
    }
    return img;
}

void write_shape_corpus(const fs::path& root, const std::vector<std::string>& classes, std::size_t per_class,
                        std::uint64_t seed) {
    for (std::size_t k = 0; k < classes.size(); ++k) {
        const fs::path dir = root / classes[k];
        fs::create_directories(dir);
        Rng rng(seed, k);
        for (std::size_t i = 0; i < per_class; ++i) {
            const int w = 200 + static_cast<int>(rng.below(120));
            const int h = 200 + static_cast<int>(rng.below(120));
            const RawImage img = shape_image(k, rng, w, h);
            char name[32];
            if (i % 2 == 0) {
                std::snprintf(name, sizeof name, "%03zu.png", i);
                write_png(dir / name, img);
            } else {
                std::snprintf(name, sizeof name, "%03zu.jpg", i);
                write_file_bytes(dir / name, encode_jpeg(img, 95));
            }
        }
    }
}

std::vector<std::string> class_names(std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < count; ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "class_%03zu", k);
        out.emplace_back(name);
    }
    return out;
}

dataset::DatasetManifest synthetic_manifest(std::size_t classes, std::size_t per_class) {
    dataset::DatasetManifest m;
    m.classes = class_names(classes);
    for (const auto& label : m.classes) {
        for (std::size_t i = 0; i < per_class; ++i) {
            dataset::ImageRecord r;
            r.id = label + "/" + std::to_string(i);
            r.source_path = label + "/" + std::to_string(i) + ".png";
            r.class_label = label;
            r.width = 64;
            r.height = 48;
            m.records.push_back(std::move(r));
        }
    }
    m.recount();
    return m;
}

Tensor random_tensor(Tensor::Shape shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (float& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

namespace {

bool is_rate(const json& j) { return j.is_number() && j.get<double>() >= 0.0 && j.get<double>() <= 1.0; }

}  // namespace

std::vector<std::string> eval_report_schema_errors(const json& doc) {
    std::vector<std::string> errors;
    auto fail = [&](const std::string& m) { errors.push_back(m); };
    if (!doc.is_object()) return {"report is not an object"};

    const std::vector<std::string> keys{"accuracy", "auc_macro", "auc_micro", "confusion", "f1_macro", "loss", "per_class", "roc"};
    std::vector<std::string> present;
    for (auto it = doc.begin(); it != doc.end(); ++it) present.push_back(it.key());
    std::sort(present.begin(), present.end());
    if (present != keys) fail("top-level keys differ from the schema");

    for (const char* k : {"accuracy", "auc_macro", "auc_micro", "f1_macro"}) {
        if (!doc.contains(k) || !is_rate(doc[k])) fail(std::string(k) + " must be a number in [0,1]");
    }
    if (!doc.contains("loss") || !doc["loss"].is_number() || doc["loss"].get<double>() < 0.0) {
        fail("loss must be a non-negative number");
    }

    std::size_t classes = 0;
    if (doc.contains("confusion") && doc["confusion"].is_object()) {
        const auto& c = doc["confusion"];
        if (!c.contains("labels") || !c["labels"].is_array()) {
            fail("confusion.labels must be an array");
        } else {
            classes = c["labels"].size();
        }
        if (!c.contains("source_split") || !c["source_split"].is_string()) fail("confusion.source_split missing");
        if (!c.contains("matrix") || !c["matrix"].is_array() || c["matrix"].size() != classes) {
            fail("confusion.matrix must have one row per class");
        } else {
            std::uint64_t total = 0;
            for (const auto& row : c["matrix"]) {
                if (!row.is_array() || row.size() != classes) {
                    fail("confusion.matrix rows must have one column per class");
                    continue;
                }
                for (const auto& v : row) {
                    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
                        fail("confusion counts must be non-negative integers");
                    } else {
                        total += v.get<std::uint64_t>();
                    }
                }
            }
            if (!c.contains("total") || c["total"] != total) fail("confusion.total does not equal the matrix sum");
        }
    } else {
        fail("confusion must be an object");
    }

    if (!doc.contains("per_class") || !doc["per_class"].is_array() || doc["per_class"].size() != classes) {
        fail("per_class must have one entry per class");
    } else {
        for (const auto& e : doc["per_class"]) {
            if (!e.is_object() || !e.contains("class") || !e["class"].is_string()) {
                fail("per_class entry without a class name");
                continue;
            }
            for (const char* k : {"precision", "recall", "f1"}) {
                if (!e.contains(k) || !is_rate(e[k])) fail(std::string("per_class.") + k + " must be in [0,1]");
            }
            if (!e.contains("auc") || !(e["auc"].is_null() || is_rate(e["auc"]))) fail("per_class.auc must be null or in [0,1]");
            if (!e.contains("support") || !e["support"].is_number_integer()) fail("per_class.support missing");
            if (!e.contains("flags") || !e["flags"].is_array()) fail("per_class.flags missing");
        }
    }

    if (!doc.contains("roc") || !doc["roc"].is_array() || doc["roc"].size() != classes) {
        fail("roc must have one entry per class");
    } else {
        for (const auto& e : doc["roc"]) {
            if (!e.is_object() || !e.contains("degenerate") || !e["degenerate"].is_boolean() || !e.contains("points")) {
                fail("roc entry malformed");
                continue;
            }
            if (e["degenerate"].get<bool>()) {
                if (!e["points"].is_null()) fail("degenerate roc entry must have null points");
                continue;
            }
            const auto& pts = e["points"];
            if (!pts.is_array() || pts.size() < 2) {
                fail("roc points must be an array of at least two points");
                continue;
            }
            double fpr = 0.0, tpr = 0.0;
            for (const auto& p : pts) {
                if (!p.is_array() || p.size() != 2 || !is_rate(p[0]) || !is_rate(p[1])) {
                    fail("roc point must be [fpr, tpr] in [0,1]");
                    break;
                }
                if (p[0].get<double>() < fpr || p[1].get<double>() < tpr) fail("roc points must be non-decreasing");
                fpr = p[0].get<double>();
                tpr = p[1].get<double>();
            }
            if (pts.front() != json::array({0.0, 0.0}) || pts.back() != json::array({1.0, 1.0})) {
                fail("roc curve must run from (0,0) to (1,1)");
            }
        }
    }
    return errors;
}

}  // namespace herb::fixtures
