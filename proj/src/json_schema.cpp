#include "hoicraft/json_schema.hpp"

#include <algorithm>
#include <fstream>

#include "hoicraft/error.hpp"
#include "hoicraft/llm_gateway.hpp"

namespace hoicraft {

using nlohmann::json;

namespace {

bool has_type(const json& v, const std::string& t) {
  if (t == "null") return v.is_null();
  if (t == "boolean") return v.is_boolean();
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>()));
  }
  if (t == "number") return v.is_number();
  return false;
}

}  // namespace

JsonSchema::JsonSchema(json schema) : root_(std::move(schema)) {}

JsonSchema JsonSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open schema: " + path);
  try {
    return JsonSchema(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("schema is not valid JSON: ") + e.what());
  }
}

std::vector<std::string> JsonSchema::errors(const json& instance) const {
  std::vector<std::string> out;
  check(root_, instance, "", out);
  return out;
}

const json& JsonSchema::resolve(const std::string& ref) const {
  if (ref.rfind("#/", 0) != 0) throw Error(ErrorCode::SchemaError, "only local references are supported: " + ref);
  return root_.at(json::json_pointer(ref.substr(1)));
}

void JsonSchema::check(const json& s, const json& v, const std::string& path, std::vector<std::string>& out) const {
  const auto where = path.empty() ? std::string("/") : path;
  if (s.is_boolean()) {
    if (!s.get<bool>()) out.push_back(where + ": not allowed");
    return;
  }
  if (s.contains("$ref")) {
    check(resolve(s.at("$ref").get<std::string>()), v, path, out);
    return;
  }
  if (s.contains("type")) {
    const auto& t = s.at("type");
    bool ok = false;
    if (t.is_string()) {
      ok = has_type(v, t.get<std::string>());
    } else {
      for (const auto& alt : t) ok = ok || has_type(v, alt.get<std::string>());
    }
    if (!ok) {
      out.push_back(where + ": expected type " + t.dump());
      return;
    }
  }
  if (s.contains("const") && v != s.at("const")) out.push_back(where + ": must equal " + s.at("const").dump());
  if (s.contains("enum")) {
    const auto& e = s.at("enum");
    if (std::find(e.begin(), e.end(), v) == e.end()) out.push_back(where + ": not one of " + e.dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s.at("minimum").get<double>()) out.push_back(where + ": below minimum");
    if (s.contains("maximum") && x > s.at("maximum").get<double>()) out.push_back(where + ": above maximum");
    if (s.contains("exclusiveMinimum") && x <= s.at("exclusiveMinimum").get<double>()) {
      out.push_back(where + ": must be greater than " + s.at("exclusiveMinimum").dump());
    }
  }
  if (v.is_string()) {
    const auto n = utf8_length(v.get<std::string>());
    if (s.contains("minLength") && n < s.at("minLength").get<std::size_t>()) out.push_back(where + ": too short");
    if (s.contains("maxLength") && n > s.at("maxLength").get<std::size_t>()) out.push_back(where + ": too long");
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s.at("minItems").get<std::size_t>()) out.push_back(where + ": too few items");
    if (s.contains("maxItems") && v.size() > s.at("maxItems").get<std::size_t>()) out.push_back(where + ": too many items");
    if (s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(s.at("items"), v[i], path + "/" + std::to_string(i), out);
    }
  }
  if (v.is_object()) {
    if (s.contains("required")) {
      for (const auto& r : s.at("required")) {
        if (!v.contains(r.get<std::string>())) out.push_back(where + ": missing '" + r.get<std::string>() + "'");
      }
    }
    const json empty = json::object();
    const auto& props = s.contains("properties") ? s.at("properties") : empty;
    for (const auto& [key, val] : v.items()) {
      const auto child = path + "/" + key;
      if (props.contains(key)) {
        check(props.at(key), val, child, out);
      } else if (s.contains("additionalProperties")) {
        check(s.at("additionalProperties"), val, child, out);
      }
    }
  }
  if (s.contains("allOf")) {
    for (const auto& sub : s.at("allOf")) check(sub, v, path, out);
  }
  auto count_matches = [&](const json& subs) {
    int n = 0;
    for (const auto& sub : subs) {
      std::vector<std::string> tmp;
      check(sub, v, path, tmp);
      n += tmp.empty() ? 1 : 0;
    }
    return n;
  };
  if (s.contains("anyOf") && count_matches(s.at("anyOf")) == 0) out.push_back(where + ": matches no anyOf branch");
  if (s.contains("oneOf") && count_matches(s.at("oneOf")) != 1) out.push_back(where + ": must match exactly one oneOf branch");
}

}  // namespace hoicraft
