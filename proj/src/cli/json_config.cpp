#include <istream>
#include <string>

#include <json.hpp>

#include "commands.hpp"
#include "evc/error.hpp"

namespace evc::cli {
namespace {

using nlohmann::json;

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

void flatten(const json& obj, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
  for (const auto& [key, value] : obj.items()) {
    if (value.is_null()) continue;
    if (value.is_object()) {
      parents.push_back(key);
      flatten(value, parents, items);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& e : value) item.inputs.push_back(scalar_text(e));
    } else {
      item.inputs.push_back(scalar_text(value));
    }
    items.push_back(std::move(item));
  }
}

void dump_app(const CLI::App* app, bool default_also, json& out) {
  for (const CLI::Option* opt : app->get_options()) {
    if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (r.size() == 1)
        out[name] = r.front();
      else
        out[name] = r;
    } else if (default_also && !opt->get_default_str().empty()) {
      out[name] = opt->get_default_str();
    }
  }
  for (const CLI::App* sub : app->get_subcommands([](const CLI::App*) { return true; })) {
    json child = json::object();
    dump_app(sub, default_also, child);
    if (!child.empty()) out[sub->get_name()] = std::move(child);
  }
}

// Nested objects map to subcommands: {"seed": 3, "train": {"epochs": 20}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json out = json::object();
    dump_app(app, default_also, out);
    return out.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, std::string("config file: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::Config, "config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    std::vector<std::string> parents;
    flatten(j, parents, items);
    return items;
  }
};

}  // namespace

std::shared_ptr<CLI::Config> make_json_config() { return std::make_shared<JsonConfig>(); }

}  // namespace evc::cli
