#include "mlego/corpus/attribute.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>

#include "mlego/common/error.hpp"

namespace mlego::corpus {

std::string_view to_string(AttributeKind kind) noexcept {
  switch (kind) {
    case AttributeKind::Integer: return "int";
    case AttributeKind::Timestamp: return "timestamp";
    case AttributeKind::Float: return "float";
    case AttributeKind::Geo: return "geo";
    case AttributeKind::Category: return "category";
  }
  return "int";
}

AttributeKind parse_attribute_kind(std::string_view s) {
  if (s == "int" || s == "integer") return AttributeKind::Integer;
  if (s == "timestamp" || s == "time") return AttributeKind::Timestamp;
  if (s == "float" || s == "real") return AttributeKind::Float;
  if (s == "geo") return AttributeKind::Geo;
  if (s == "category" || s == "categorical") return AttributeKind::Category;
  throw InvalidArgument("unknown attribute kind '" + std::string(s) + "'");
}

std::vector<std::string> AttributeSpec::ordered_dimensions() const {
  if (kind == AttributeKind::Category) return {};
  if (kind == AttributeKind::Geo) return {name + ".lon", name + ".lat"};
  return {name};
}

Schema Schema::from_json(const nlohmann::json& j) {
  Schema s;
  s.text_column = j.value("text", std::string("text"));
  if (j.contains("id") && !j["id"].is_null()) s.id_column = j["id"].get<std::string>();
  for (const auto& a : j.value("attributes", nlohmann::json::array())) {
    AttributeSpec spec;
    spec.name = a.at("name").get<std::string>();
    spec.kind = parse_attribute_kind(a.value("kind", std::string("int")));
    if (a.contains("columns")) {
      spec.columns = a["columns"].get<std::vector<std::string>>();
    } else {
      spec.columns = {spec.name};
    }
    if (spec.name == "id") throw InvalidArgument("attribute name 'id' is reserved");
    if (spec.kind == AttributeKind::Geo && spec.columns.size() != 2)
      throw InvalidArgument("geo attribute '" + spec.name + "' needs two columns [lon, lat]");
    if (spec.kind != AttributeKind::Geo && spec.columns.size() != 1)
      throw InvalidArgument("attribute '" + spec.name + "' needs exactly one column");
    s.attributes.push_back(std::move(spec));
  }
  return s;
}

nlohmann::json Schema::to_json() const {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : attributes) {
    attrs.push_back({{"name", a.name}, {"kind", to_string(a.kind)}, {"columns", a.columns}});
  }
  nlohmann::json j{{"text", text_column}, {"attributes", attrs}};
  j["id"] = id_column ? nlohmann::json(*id_column) : nlohmann::json(nullptr);
  return j;
}

std::vector<std::string> Schema::ordered_dimensions() const {
  std::vector<std::string> dims{"id"};
  for (const auto& a : attributes)
    for (auto& d : a.ordered_dimensions()) dims.push_back(std::move(d));
  return dims;
}

std::vector<std::string> Schema::categorical_attributes() const {
  std::vector<std::string> out;
  for (const auto& a : attributes)
    if (a.kind == AttributeKind::Category) out.push_back(a.name);
  return out;
}

bool Schema::has_ordered(std::string_view dim) const {
  const auto dims = ordered_dimensions();
  return std::find(dims.begin(), dims.end(), dim) != dims.end();
}

bool Schema::has_categorical(std::string_view name) const {
  return std::any_of(attributes.begin(), attributes.end(), [&](const AttributeSpec& a) {
    return a.kind == AttributeKind::Category && a.name == name;
  });
}

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw InvalidArgument("empty timestamp");

  // Plain integer: already epoch seconds.
  {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && p == text.data() + text.size()) return v;
  }

  int year = 0, month = 1, day = 1, hh = 0, mm = 0, ss = 0;
  const auto bad = [&] { return InvalidArgument("unparseable timestamp '" + std::string(text) + "'"); };
  if (text.size() < 7 || text[4] != '-') throw bad();
  if (!parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5, 2), month)) throw bad();
  if (text.size() >= 10) {
    if (text[7] != '-' || !parse_int(text.substr(8, 2), day)) throw bad();
  } else if (text.size() != 7) {
    throw bad();
  }
  if (text.size() > 10) {
    if ((text[10] != 'T' && text[10] != ' ') || text.size() < 19) throw bad();
    if (!parse_int(text.substr(11, 2), hh) || !parse_int(text.substr(14, 2), mm) ||
        !parse_int(text.substr(17, 2), ss))
      throw bad();
  }
  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) throw bad();
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

}  // namespace mlego::corpus
