#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace herb::dataset {

enum class Split { unassigned, train, validation, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ImageRecord {
    std::string id;
    std::filesystem::path source_path;
    std::string class_label;
    int width = 0;
    int height = 0;
    Split split = Split::unassigned;

    bool operator==(const ImageRecord&) const = default;
};

struct DatasetManifest {
    std::vector<std::string> classes;
    std::vector<ImageRecord> records;
    // Parallel to `classes`.
    std::vector<std::size_t> counts;

    // Index of `label` in `classes`, if present.
    std::optional<std::size_t> class_index(std::string_view label) const;
    // Recomputes `counts` from `records`; records with unknown labels are ignored.
    void recount();
    std::vector<const ImageRecord*> records_in(Split split) const;

    bool operator==(const DatasetManifest&) const = default;
};

// JSON-lines: a header line {"version":1,"classes":[...]} followed by one
// {"id","path","label","width","height","split"} object per record.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);
std::string manifest_to_jsonl(const DatasetManifest& manifest);
DatasetManifest manifest_from_jsonl(std::string_view text);

enum class ViolationKind {
    duplicate_class,
    duplicate_id,
    unknown_label,
    count_mismatch,
    split_exclusivity,
    split_coverage,
    bad_dimensions,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string subject;  // record id or class label
    std::string message;
};

// Empty result <=> every manifest invariant holds.
std::vector<Violation> validate_manifest(const DatasetManifest& manifest);

}  // namespace herb::dataset
