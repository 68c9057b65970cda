#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace herb::cli {

// CLI11 config reader/writer for JSON files. Top-level keys are global options
// or subcommand names; a subcommand's object holds its options by long name.
class ConfigJSON : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        nlohmann::json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames()[0];
            if (opt->get_type_size() != 0) {
                if (opt->count() == 1) {
                    j[name] = opt->results().at(0);
                } else if (opt->count() > 1) {
                    j[name] = opt->results();
                } else if (default_also && !opt->get_default_str().empty()) {
                    j[name] = opt->get_default_str();
                }
            } else if (opt->count() > 0) {
                j[name] = true;
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            const auto nested = nlohmann::json::parse(to_config(sub, default_also, false, ""));
            if (!nested.empty()) j[sub->get_name()] = nested;
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        return items(j, "", {});
    }

private:
    static std::string scalar(const nlohmann::json& j) {
        if (j.is_string()) return j.get<std::string>();
        if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
        if (j.is_number()) return j.dump();
        throw CLI::ConversionError("unsupported config value " + j.dump());
    }

    std::vector<CLI::ConfigItem> items(const nlohmann::json& j, const std::string& name,
                                       std::vector<std::string> prefix) const {
        std::vector<CLI::ConfigItem> out;
        if (j.is_object()) {
            if (!name.empty()) prefix.push_back(name);
            for (auto it = j.begin(); it != j.end(); ++it) {
                auto sub = items(it.value(), it.key(), prefix);
                out.insert(out.end(), sub.begin(), sub.end());
            }
            return out;
        }
        CLI::ConfigItem item;
        item.name = name;
        item.parents = prefix;
        if (j.is_array()) {
            for (const auto& v : j) item.inputs.push_back(scalar(v));
        } else {
            item.inputs.push_back(scalar(j));
        }
        out.push_back(std::move(item));
        return out;
    }
};

}  // namespace herb::cli
