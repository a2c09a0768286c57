#pragma once

// Validator for the JSON Schema subset used by the published config and
// report schemas: type, enum, const, properties, required,
// additionalProperties, items, minItems, maxItems, minimum, maximum,
// exclusiveMinimum, exclusiveMaximum, minLength, allOf, anyOf, oneOf and
// local $ref. Other keywords are ignored.

#include <string>
#include <vector>

#include <json.hpp>

namespace spas::schema {

/// One message per violation, each prefixed with the JSON pointer of the
/// offending value. Empty means valid.
std::vector<std::string> validate(const nlohmann::json& schema,
                                  const nlohmann::json& doc);

/// Published schemas compiled into the binary, by file stem
/// ("config", "verification_report", ...). Throws std::out_of_range for an
/// unknown name.
const nlohmann::json& published(const std::string& name);

}  // namespace spas::schema
