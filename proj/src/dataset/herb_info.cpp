#include "herb/dataset/herb_info.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace herb::dataset {

using nlohmann::json;

void to_json(json& j, const HerbInfo& info) {
    j = json{{"scientific_name", info.scientific_name},
             {"common_names", info.common_names},
             {"description", info.description},
             {"medicinal_uses", info.medicinal_uses},
             {"regions", info.regions}};
}

void from_json(const json& j, HerbInfo& info) {
    info.scientific_name = j.at("scientific_name").get<std::string>();
    info.common_names = j.value("common_names", std::vector<std::string>{});
    info.description = j.value("description", std::string{});
    info.medicinal_uses = j.value("medicinal_uses", std::string{});
    info.regions = j.value("regions", std::vector<std::string>{});
}

HerbInfoStore::HerbInfoStore(std::vector<HerbInfo> records) {
    for (auto& r : records) {
        if (r.scientific_name.empty()) throw std::invalid_argument("herb info record with empty scientific_name");
        const std::string key = r.scientific_name;
        if (!by_name_.emplace(key, std::move(r)).second) {
            throw std::invalid_argument("duplicate herb info entry '" + key + "'");
        }
    }
}

std::optional<HerbInfo> HerbInfoStore::lookup(std::string_view scientific_name) const {
    if (auto it = by_name_.find(scientific_name); it != by_name_.end()) return it->second;
    return std::nullopt;
}

bool HerbInfoStore::contains(std::string_view scientific_name) const {
    return by_name_.find(scientific_name) != by_name_.end();
}

std::vector<HerbInfo> HerbInfoStore::all() const {
    std::vector<HerbInfo> out;
    out.reserve(by_name_.size());
    for (const auto& [_, info] : by_name_) out.push_back(info);
    return out;
}

HerbInfoStore parse_herb_info(std::string_view json_text) {
    const json doc = json::parse(json_text);
    if (!doc.is_array()) throw std::invalid_argument("herb info document must be a JSON array");
    return HerbInfoStore(doc.get<std::vector<HerbInfo>>());
}

HerbInfoStore load_herb_info(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open herb info file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_herb_info(buffer.str());
}

void save_herb_info(const std::filesystem::path& path, const HerbInfoStore& store) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write herb info file " + path.string());
    out << json(store.all()).dump(2) << '\n';
}

}  // namespace herb::dataset
