#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace hoicraft {

/// Validator for the draft-07 subset our schemas use: type, enum, const,
/// properties, required, additionalProperties, items, min/maxItems,
/// min/maxLength, minimum, maximum, exclusiveMinimum, anyOf, oneOf, allOf and
/// local "#/definitions/..." references.
class JsonSchema {
 public:
  explicit JsonSchema(nlohmann::json schema);
  static JsonSchema load(const std::string& path);

  /// One message per violation, each prefixed with a JSON pointer.
  std::vector<std::string> errors(const nlohmann::json& instance) const;
  bool valid(const nlohmann::json& instance) const { return errors(instance).empty(); }

 private:
  void check(const nlohmann::json& schema, const nlohmann::json& v, const std::string& path,
             std::vector<std::string>& out) const;
  const nlohmann::json& resolve(const std::string& ref) const;

  nlohmann::json root_;
};

}  // namespace hoicraft
