#include "herb/dataset/manifest.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace herb::dataset {

using nlohmann::json;

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
        case Split::unassigned: break;
    }
    return "unassigned";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "validation") return Split::validation;
    if (text == "test") return Split::test;
    if (text == "unassigned") return Split::unassigned;
    throw std::invalid_argument("unknown split '" + std::string(text) + "'");
}

std::optional<std::size_t> DatasetManifest::class_index(std::string_view label) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == label) return i;
    }
    return std::nullopt;
}

void DatasetManifest::recount() {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i) index.emplace(classes[i], i);
    counts.assign(classes.size(), 0);
    for (const auto& r : records) {
        if (auto it = index.find(r.class_label); it != index.end()) ++counts[it->second];
    }
}

std::vector<const ImageRecord*> DatasetManifest::records_in(Split split) const {
    std::vector<const ImageRecord*> out;
    for (const auto& r : records) {
        if (r.split == split) out.push_back(&r);
    }
    return out;
}

std::string manifest_to_jsonl(const DatasetManifest& manifest) {
    std::ostringstream os;
    os << json{{"version", 1}, {"classes", manifest.classes}}.dump() << '\n';
    for (const auto& r : manifest.records) {
        json line{{"id", r.id},
                  {"path", r.source_path.generic_string()},
                  {"label", r.class_label},
                  {"width", r.width},
                  {"height", r.height},
                  {"split", to_string(r.split)}};
        os << line.dump() << '\n';
    }
    return os.str();
}

DatasetManifest manifest_from_jsonl(std::string_view text) {
    DatasetManifest manifest;
    std::istringstream in{std::string(text)};
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
            if (!have_header) {
                if (j.at("version").get<int>() != 1) {
                    throw std::runtime_error("unsupported manifest version");
                }
                manifest.classes = j.at("classes").get<std::vector<std::string>>();
                have_header = true;
                continue;
            }
            ImageRecord r;
            r.id = j.at("id").get<std::string>();
            r.source_path = j.at("path").get<std::string>();
            r.class_label = j.at("label").get<std::string>();
            r.width = j.at("width").get<int>();
            r.height = j.at("height").get<int>();
            r.split = parse_split(j.value("split", "unassigned"));
            manifest.records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw std::runtime_error("manifest has no header line");
    manifest.recount();
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << manifest_to_jsonl(manifest);
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return manifest_from_jsonl(buffer.str());
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::duplicate_class: return "duplicate_class";
        case ViolationKind::duplicate_id: return "duplicate_id";
        case ViolationKind::unknown_label: return "unknown_label";
        case ViolationKind::count_mismatch: return "count_mismatch";
        case ViolationKind::split_exclusivity: return "split_exclusivity";
        case ViolationKind::split_coverage: return "split_coverage";
        case ViolationKind::bad_dimensions: return "bad_dimensions";
    }
    return "unknown";
}

std::vector<Violation> validate_manifest(const DatasetManifest& manifest) {
    std::vector<Violation> report;

    std::set<std::string> seen_classes;
    for (const auto& c : manifest.classes) {
        if (!seen_classes.insert(c).second) {
            report.push_back({ViolationKind::duplicate_class, c, "class '" + c + "' declared more than once"});
        }
    }

    // id -> splits it was seen in, in first-seen order
    std::map<std::string, std::vector<Split>> by_id;
    std::size_t assigned = 0;
    for (const auto& r : manifest.records) {
        by_id[r.id].push_back(r.split);
        if (r.split != Split::unassigned) ++assigned;
        if (!seen_classes.contains(r.class_label)) {
            report.push_back({ViolationKind::unknown_label, r.id,
                              "record '" + r.id + "' has label '" + r.class_label + "' outside the class list"});
        }
        if (r.width < 1 || r.height < 1) {
            report.push_back({ViolationKind::bad_dimensions, r.id,
                              "record '" + r.id + "' has dimensions " + std::to_string(r.width) + "x" +
                                  std::to_string(r.height)});
        }
    }

    for (const auto& [id, splits] : by_id) {
        if (splits.size() < 2) continue;
        const std::set<Split> distinct(splits.begin(), splits.end());
        if (distinct.size() > 1) {
            report.push_back({ViolationKind::split_exclusivity, id,
                              "record '" + id + "' appears in " + std::to_string(distinct.size()) + " splits"});
        } else {
            report.push_back({ViolationKind::duplicate_id, id,
                              "id '" + id + "' occurs " + std::to_string(splits.size()) + " times"});
        }
    }

    if (assigned != 0 && assigned != manifest.records.size()) {
        report.push_back({ViolationKind::split_coverage, "",
                          std::to_string(manifest.records.size() - assigned) +
                              " records are unassigned in a split manifest"});
    }

    if (manifest.counts.size() != manifest.classes.size()) {
        report.push_back({ViolationKind::count_mismatch, "",
                          "counts has " + std::to_string(manifest.counts.size()) + " entries for " +
                              std::to_string(manifest.classes.size()) + " classes"});
    } else {
        std::map<std::string, std::size_t> actual;
        for (const auto& r : manifest.records) ++actual[r.class_label];
        for (std::size_t i = 0; i < manifest.classes.size(); ++i) {
            const auto& c = manifest.classes[i];
            const std::size_t n = actual.contains(c) ? actual[c] : 0;
            if (manifest.counts[i] != n) {
                report.push_back({ViolationKind::count_mismatch, c,
                                  "class '" + c + "' count " + std::to_string(manifest.counts[i]) +
                                      " but " + std::to_string(n) + " records"});
            }
        }
    }
    return report;
}

}  // namespace herb::dataset
