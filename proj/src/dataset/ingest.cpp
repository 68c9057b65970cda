#include "herb/dataset/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "herb/common/image.hpp"

namespace herb::dataset {

namespace fs = std::filesystem;

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (directories ? entry.is_directory() : entry.is_regular_file()) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

IngestResult ingest_directory(const fs::path& root) {
    if (!fs::is_directory(root)) throw std::runtime_error("dataset root " + root.string() + " does not exist");

    IngestResult result;
    auto& manifest = result.manifest;
    for (const auto& class_dir : sorted_entries(root, true)) {
        const std::string label = class_dir.filename().string();
        manifest.classes.push_back(label);
        std::size_t accepted = 0;
        for (const auto& file : sorted_entries(class_dir, false)) {
            if (!has_image_extension(file)) {
                result.rejects.push_back({file, "unsupported file type (expected PNG or JPEG)"});
                continue;
            }
            RawImage img;
            try {
                img = read_image(file);
            } catch (const std::exception& e) {
                result.rejects.push_back({file, e.what()});
                continue;
            }
            const double longer = std::max(img.width, img.height);
            const double shorter = std::min(img.width, img.height);
            if (longer > kMaxAspectRatio * shorter) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "aspect ratio %.2f:1 exceeds %.0f:1 threshold", longer / shorter,
                              kMaxAspectRatio);
                result.rejects.push_back({file, buf});
                continue;
            }
            ImageRecord r;
            r.id = label + "/" + file.filename().string();
            r.source_path = file;
            r.class_label = label;
            r.width = img.width;
            r.height = img.height;
            manifest.records.push_back(std::move(r));
            ++accepted;
        }
        if (accepted == 0) result.warnings.push_back("class '" + label + "' has no usable images");
    }
    if (manifest.classes.empty()) throw std::runtime_error("no class subdirectories found under " + root.string());
    manifest.recount();
    return result;
}

void write_rejects(const fs::path& path, const std::vector<Reject>& rejects) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write rejects report " + path.string());
    for (const auto& r : rejects) {
        out << nlohmann::json{{"path", r.path.generic_string()}, {"reason", r.reason}}.dump() << '\n';
    }
}

}  // namespace herb::dataset
