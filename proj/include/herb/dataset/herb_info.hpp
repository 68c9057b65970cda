#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace herb::dataset {

struct HerbInfo {
    std::string scientific_name;
    std::vector<std::string> common_names;
    std::string description;
    std::string medicinal_uses;
    std::vector<std::string> regions;

    bool operator==(const HerbInfo&) const = default;
};

void to_json(nlohmann::json& j, const HerbInfo& info);
void from_json(const nlohmann::json& j, HerbInfo& info);

// Immutable after construction; safe for concurrent readers.
class HerbInfoStore {
public:
    HerbInfoStore() = default;
    // Throws std::invalid_argument on an empty or duplicate scientific name.
    explicit HerbInfoStore(std::vector<HerbInfo> records);

    std::optional<HerbInfo> lookup(std::string_view scientific_name) const;
    bool contains(std::string_view scientific_name) const;
    std::size_t size() const { return by_name_.size(); }
    bool empty() const { return by_name_.empty(); }
    // Sorted by scientific name.
    std::vector<HerbInfo> all() const;

private:
    std::map<std::string, HerbInfo, std::less<>> by_name_;
};

// File format: a single JSON array of HerbInfo objects.
HerbInfoStore load_herb_info(const std::filesystem::path& path);
HerbInfoStore parse_herb_info(std::string_view json_text);
void save_herb_info(const std::filesystem::path& path, const HerbInfoStore& store);

}  // namespace herb::dataset
