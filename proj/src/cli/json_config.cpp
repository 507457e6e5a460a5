#include "json_config.hpp"

#include <istream>

#include <nlohmann/json.hpp>

namespace unrollrisk::cli {

namespace {

using nlohmann::json;

std::string scalar_text(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

void collect(const json& object, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
  for (const auto& [key, value] : object.items()) {
    if (value.is_object()) {
      parents.push_back(key);
      collect(value, parents, out);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& element : value) {
        if (element.is_structured()) throw CLI::ConfigError("config key '" + key + "': nested arrays are not supported");
        item.inputs.push_back(scalar_text(element));
      }
    } else if (!value.is_null()) {
      item.inputs.push_back(scalar_text(value));
    }
    out.push_back(std::move(item));
  }
}

json app_values(const CLI::App* app, bool default_also) {
  json out = json::object();
  for (const CLI::Option* opt : app->get_options({})) {
    if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    const auto& results = opt->results();
    if (!results.empty()) {
      if (results.size() == 1 && opt->get_items_expected_max() <= 1) {
        out[name] = results.front();
      } else {
        out[name] = results;
      }
    } else if (default_also && !opt->get_default_str().empty()) {
      out[name] = opt->get_default_str();
    }
  }
  for (const CLI::App* sub : app->get_subcommands({})) {
    json nested = app_values(sub, default_also);
    if (!nested.empty()) out[sub->get_name()] = std::move(nested);
  }
  return out;
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  return app_values(app, default_also).dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  json doc;
  try {
    doc = json::parse(input);
  } catch (const json::parse_error& e) {
    throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw CLI::ConfigError("config root must be a JSON object");
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  collect(doc, parents, items);
  return items;
}

}  // namespace unrollrisk::cli
