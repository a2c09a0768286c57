#include "spas/json_schema.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "spas_schemas.hpp"  // generated

namespace spas::schema {
namespace {

using nlohmann::json;

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& schema, const json& doc, const std::string& at,
             std::vector<std::string>& errs) const {
    if (schema.is_boolean()) {
      if (!schema.get<bool>()) errs.push_back(at + ": no value allowed here");
      return;
    }
    if (!schema.is_object()) return;

    if (auto it = schema.find("$ref"); it != schema.end()) {
      check(resolve(it->get<std::string>()), doc, at, errs);
    }
    if (auto it = schema.find("type"); it != schema.end()) {
      bool ok = false;
      if (it->is_array()) {
        for (const auto& t : *it) ok = ok || has_type(doc, t.get<std::string>());
      } else {
        ok = has_type(doc, it->get<std::string>());
      }
      if (!ok) {
        errs.push_back(at + ": expected type " + it->dump() + ", got " + doc.type_name());
        return;
      }
    }
    if (auto it = schema.find("const"); it != schema.end() && doc != *it)
      errs.push_back(at + ": expected " + it->dump());
    if (auto it = schema.find("enum"); it != schema.end()) {
      bool found = false;
      for (const auto& v : *it) found = found || v == doc;
      if (!found) errs.push_back(at + ": value " + doc.dump() + " not in " + it->dump());
    }
    if (doc.is_number()) check_number(schema, doc, at, errs);
    if (doc.is_string()) {
      if (auto it = schema.find("minLength");
          it != schema.end() && doc.get<std::string>().size() < it->get<std::size_t>())
        errs.push_back(at + ": string shorter than " + it->dump());
    }
    if (doc.is_array()) check_array(schema, doc, at, errs);
    if (doc.is_object()) check_object(schema, doc, at, errs);

    if (auto it = schema.find("allOf"); it != schema.end())
      for (const auto& sub : *it) check(sub, doc, at, errs);
    if (auto it = schema.find("anyOf"); it != schema.end()) {
      auto best = combine(*it, doc, at);
      if (best.matches == 0) append(errs, best.closest);
    }
    if (auto it = schema.find("oneOf"); it != schema.end()) {
      auto best = combine(*it, doc, at);
      if (best.matches == 0) append(errs, best.closest);
      if (best.matches > 1)
        errs.push_back(at + ": matches " + std::to_string(best.matches) +
                       " alternatives, expected exactly one");
    }
  }

 private:
  struct Combined {
    std::size_t matches = 0;
    std::vector<std::string> closest;
  };

  // The failing alternative with the fewest errors explains the mismatch best.
  Combined combine(const json& alternatives, const json& doc,
                   const std::string& at) const {
    Combined out;
    bool have = false;
    for (const auto& sub : alternatives) {
      std::vector<std::string> e;
      check(sub, doc, at, e);
      if (e.empty()) {
        ++out.matches;
      } else if (!have || e.size() < out.closest.size()) {
        out.closest = std::move(e);
        have = true;
      }
    }
    return out;
  }

  static void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
    to.insert(to.end(), from.begin(), from.end());
  }

  static bool has_type(const json& doc, const std::string& t) {
    if (t == "object") return doc.is_object();
    if (t == "array") return doc.is_array();
    if (t == "string") return doc.is_string();
    if (t == "boolean") return doc.is_boolean();
    if (t == "null") return doc.is_null();
    if (t == "number") return doc.is_number();
    if (t == "integer") {
      if (doc.is_number_integer()) return true;
      if (!doc.is_number_float()) return false;
      const double v = doc.get<double>();
      return std::isfinite(v) && v == std::floor(v);
    }
    return false;
  }

  static void check_number(const json& schema, const json& doc, const std::string& at,
                           std::vector<std::string>& errs) {
    const double v = doc.get<double>();
    auto bound = [&](const char* key, auto&& violates, const char* what) {
      if (auto it = schema.find(key); it != schema.end() && violates(it->get<double>()))
        errs.push_back(at + ": " + doc.dump() + " " + what + " " + it->dump());
    };
    bound("minimum", [&](double b) { return v < b; }, "is less than");
    bound("maximum", [&](double b) { return v > b; }, "is greater than");
    bound("exclusiveMinimum", [&](double b) { return v <= b; }, "must be greater than");
    bound("exclusiveMaximum", [&](double b) { return v >= b; }, "must be less than");
  }

  void check_array(const json& schema, const json& doc, const std::string& at,
                   std::vector<std::string>& errs) const {
    if (auto it = schema.find("minItems"); it != schema.end() && doc.size() < it->get<std::size_t>())
      errs.push_back(at + ": fewer than " + it->dump() + " items");
    if (auto it = schema.find("maxItems"); it != schema.end() && doc.size() > it->get<std::size_t>())
      errs.push_back(at + ": more than " + it->dump() + " items");
    if (auto it = schema.find("items"); it != schema.end())
      for (std::size_t i = 0; i < doc.size(); ++i)
        check(*it, doc[i], at + "/" + std::to_string(i), errs);
  }

  void check_object(const json& schema, const json& doc, const std::string& at,
                    std::vector<std::string>& errs) const {
    if (auto it = schema.find("required"); it != schema.end())
      for (const auto& key : *it)
        if (!doc.contains(key.get<std::string>()))
          errs.push_back(at + ": missing required property \"" + key.get<std::string>() + "\"");
    const auto props = schema.find("properties");
    const auto extra = schema.find("additionalProperties");
    for (const auto& [key, value] : doc.items()) {
      const std::string child = at + "/" + key;
      if (props != schema.end() && props->contains(key)) {
        check((*props)[key], value, child, errs);
      } else if (extra != schema.end()) {
        if (extra->is_boolean() && !extra->get<bool>())
          errs.push_back(at + ": unknown property \"" + key + "\"");
        else
          check(*extra, value, child, errs);
      }
    }
  }

  const json& resolve(const std::string& ref) const {
    if (ref.rfind("#", 0) != 0) throw std::runtime_error("unsupported $ref " + ref);
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  const json& root_;
};

}  // namespace

std::vector<std::string> validate(const nlohmann::json& schema, const nlohmann::json& doc) {
  std::vector<std::string> errs;
  Validator(schema).check(schema, doc, "", errs);
  for (auto& e : errs)
    if (e.rfind(":", 0) == 0) e = "(root)" + e;
  return errs;
}

const nlohmann::json& published(const std::string& name) {
  static const std::map<std::string, nlohmann::json> schemas = [] {
    std::map<std::string, nlohmann::json> m;
    for (const auto& [stem, text] : generated::kSchemas) m.emplace(stem, nlohmann::json::parse(text));
    return m;
  }();
  return schemas.at(name);
}

}  // namespace spas::schema
