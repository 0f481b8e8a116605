#pragma once

#include <filesystem>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>

#include "qtp/errors.hpp"
#include "qtp/jsonl.hpp"

namespace qtp {

struct PromptTemplate {
  std::string name;
  std::string body;

  bool has_placeholder(std::string_view key) const {
    return body.find("{" + std::string(key) + "}") != std::string::npos;
  }
};

/// Fills {key} slots.  Keys missing from the body are simply not filled;
/// stages that require a slot call require_placeholders first, so a
/// mis-edited template fails loudly before any model call.
inline std::string render_prompt(const PromptTemplate& tmpl,
                                 const std::map<std::string, std::string>& values) {
  std::string out = tmpl.body;
  for (const auto& [key, value] : values) {
    std::string slot = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = out.find(slot, pos)) != std::string::npos) {
      out.replace(pos, slot.size(), value);
      pos += value.size();
    }
  }
  return out;
}

inline void require_placeholders(const PromptTemplate& tmpl,
                                 std::initializer_list<std::string_view> keys) {
  for (std::string_view key : keys) {
    if (!tmpl.has_placeholder(key))
      throw ConfigError("template '" + tmpl.name + "' is missing the {" + std::string(key) +
                        "} placeholder");
  }
}

/// Loads every *.txt file in a directory; the stem is the template name.
class PromptLibrary {
 public:
  PromptLibrary() = default;

  explicit PromptLibrary(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
      throw ConfigError("prompt directory " + dir.string() + " does not exist");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() == ".txt")
        templates_[entry.path().stem().string()] =
            PromptTemplate{entry.path().stem().string(), read_file(entry.path())};
    }
  }

  const PromptTemplate& get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
      throw ConfigError("no prompt template named '" + name + "'");
    return it->second;
  }

  bool contains(const std::string& name) const { return templates_.count(name) > 0; }

  void set(const std::string& name, std::string body) {
    templates_[name] = PromptTemplate{name, std::move(body)};
  }

 private:
  std::map<std::string, PromptTemplate> templates_;
};

}  // namespace qtp
