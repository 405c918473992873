#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "postsource/errors.hpp"

namespace postsource {

// Validator for the narrow JSON-schema subset the shipped schema files use:
// type, properties, required, additionalProperties (bool), items, enum,
// minItems. Anything else in a schema is ignored rather than half-enforced.

struct schema_violation {
  std::string path;
  std::string message;
};

namespace detail {

inline bool type_matches(const nlohmann::json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "number") return v.is_number();
  if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  fail(errc::invalid_config, "schema: unknown type name '" + t + "'");
}

inline void validate_node(const nlohmann::json& v, const nlohmann::json& sc,
                          const std::string& path, std::vector<schema_violation>& out) {
  require(sc.is_object(), errc::invalid_config, "schema: every schema node must be an object");

  if (auto it = sc.find("type"); it != sc.end()) {
    bool ok = false;
    if (it->is_string()) ok = type_matches(v, it->get<std::string>());
    else
      for (const auto& t : *it) ok = ok || type_matches(v, t.get<std::string>());
    if (!ok) {
      out.push_back({path, "type mismatch, expected " + it->dump()});
      return;  // child checks would only cascade
    }
  }

  if (auto it = sc.find("enum"); it != sc.end()) {
    bool ok = false;
    for (const auto& cand : *it) ok = ok || cand == v;
    if (!ok) out.push_back({path, "value " + v.dump() + " not in enum"});
  }

  if (v.is_object()) {
    const nlohmann::json* props = nullptr;
    if (auto it = sc.find("properties"); it != sc.end()) props = &*it;
    if (auto it = sc.find("required"); it != sc.end())
      for (const auto& name : *it)
        if (!v.contains(name.get<std::string>()))
          out.push_back({path, "missing required key '" + name.get<std::string>() + "'"});
    bool allow_extra = true;
    if (auto it = sc.find("additionalProperties"); it != sc.end() && it->is_boolean())
      allow_extra = it->get<bool>();
    for (const auto& [key, child] : v.items()) {
      const std::string child_path = path + "/" + key;
      if (props && props->contains(key)) validate_node(child, (*props)[key], child_path, out);
      else if (!allow_extra) out.push_back({child_path, "unexpected key"});
    }
  }

  if (v.is_array()) {
    if (auto it = sc.find("minItems"); it != sc.end() && v.size() < it->get<std::size_t>())
      out.push_back({path, "array shorter than minItems"});
    if (auto it = sc.find("items"); it != sc.end())
      for (std::size_t i = 0; i < v.size(); ++i)
        validate_node(v[i], *it, path + "/" + std::to_string(i), out);
  }
}

}  // namespace detail

inline std::vector<schema_violation> validate_against_schema(const nlohmann::json& value,
                                                             const nlohmann::json& schema) {
  std::vector<schema_violation> out;
  detail::validate_node(value, schema, "", out);
  return out;
}

}  // namespace postsource
