#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mlego::corpus {

enum class AttributeKind { Integer, Timestamp, Float, Geo, Category };

std::string_view to_string(AttributeKind kind) noexcept;
AttributeKind parse_attribute_kind(std::string_view s);

/// One declared attribute. A geo attribute reads two numeric columns and
/// exposes them as the ordered dimensions `<name>.lon` and `<name>.lat`.
struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::Integer;
  std::vector<std::string> columns;  // source columns; defaults to {name}

  std::vector<std::string> ordered_dimensions() const;
  bool is_ordered() const noexcept { return kind != AttributeKind::Category; }
};

/// Declares which column carries the text and how the remaining columns are
/// typed. The document id attribute is always available as the ordered
/// dimension "id", taken from `id_column` when present or the row number.
struct Schema {
  std::string text_column = "text";
  std::optional<std::string> id_column;
  std::vector<AttributeSpec> attributes;

  static Schema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Ordered dimension names, "id" first.
  std::vector<std::string> ordered_dimensions() const;
  std::vector<std::string> categorical_attributes() const;
  bool has_ordered(std::string_view dim) const;
  bool has_categorical(std::string_view name) const;
};

/// Accepts integer seconds, "YYYY-MM-DD", "YYYY-MM", "YYYY-MM-DD HH:MM:SS" or the
/// same with a 'T' separator. Returns seconds since the Unix epoch (UTC).
std::int64_t parse_timestamp(std::string_view text);

}  // namespace mlego::corpus
