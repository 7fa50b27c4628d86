#include "mlego/corpus/ingest.hpp"

#include <charconv>
#include <fstream>
#include <map>

#include "mlego/common/error.hpp"

namespace mlego::corpus {

namespace {

constexpr std::size_t kMaxWarnings = 20;

double parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw InvalidArgument("not a number: '" + std::string(s) + "'");
  return v;
}

double ordered_from_text(AttributeKind kind, std::string_view s) {
  if (kind == AttributeKind::Timestamp) return static_cast<double>(parse_timestamp(s));
  double v = parse_number(s);
  if (kind == AttributeKind::Integer && v != static_cast<double>(static_cast<std::int64_t>(v)))
    throw InvalidArgument("not an integer: '" + std::string(s) + "'");
  return v;
}

double ordered_from_json(AttributeKind kind, const nlohmann::json& v) {
  if (v.is_number()) {
    double x = v.get<double>();
    if (kind == AttributeKind::Integer && x != static_cast<double>(static_cast<std::int64_t>(x)))
      throw InvalidArgument("not an integer");
    return x;
  }
  if (v.is_string()) return ordered_from_text(kind, v.get_ref<const std::string&>());
  throw InvalidArgument("expected number or string");
}

// Abstracts over a CSV record (by header position) and a JSON object.
class RowView {
 public:
  virtual ~RowView() = default;
  virtual bool has(const std::string& col) const = 0;
  virtual std::string text(const std::string& col) const = 0;
  virtual double ordered(const std::string& col, AttributeKind kind) const = 0;
};

class CsvRow final : public RowView {
 public:
  CsvRow(const std::map<std::string, std::size_t>& header, const std::vector<std::string>& fields)
      : header_(header), fields_(fields) {}
  bool has(const std::string& col) const override { return header_.count(col) != 0; }
  std::string text(const std::string& col) const override { return fields_.at(header_.at(col)); }
  double ordered(const std::string& col, AttributeKind kind) const override {
    return ordered_from_text(kind, fields_.at(header_.at(col)));
  }

 private:
  const std::map<std::string, std::size_t>& header_;
  const std::vector<std::string>& fields_;
};

class JsonRow final : public RowView {
 public:
  explicit JsonRow(const nlohmann::json& obj) : obj_(obj) {}
  bool has(const std::string& col) const override { return obj_.contains(col) && !obj_[col].is_null(); }
  std::string text(const std::string& col) const override {
    const auto& v = obj_.at(col);
    return v.is_string() ? v.get<std::string>() : v.dump();
  }
  double ordered(const std::string& col, AttributeKind kind) const override {
    return ordered_from_json(kind, obj_.at(col));
  }

 private:
  const nlohmann::json& obj_;
};

class Ingestor {
 public:
  Ingestor(const std::string& name, const Schema& schema, const TokenizerConfig& tok,
           IngestReport& report)
      : schema_(schema), tok_(tok), builder_(name, schema, tok), report_(report) {}

  void row(const RowView& r, std::size_t row_number) {
    ++report_.rows_read;
    try {
      builder_.add(convert(r, row_number));
    } catch (const std::exception& e) {
      skip("row " + std::to_string(row_number) + ": " + e.what());
    }
  }

  void skip(std::string why) {
    ++report_.rows_skipped;
    builder_.add_skipped();
    if (report_.warnings.size() < kMaxWarnings) report_.warnings.push_back(std::move(why));
  }

  Dataset finish() { return builder_.build(); }

 private:
  DatasetBuilder::Row convert(const RowView& r, std::size_t row_number) const {
    DatasetBuilder::Row out;
    if (!r.has(schema_.text_column)) throw InvalidArgument("missing text column");
    out.words = tokenize(r.text(schema_.text_column), tok_);
    if (schema_.id_column) {
      if (!r.has(*schema_.id_column)) throw InvalidArgument("missing id column");
      out.doc_id = static_cast<std::int64_t>(r.ordered(*schema_.id_column, AttributeKind::Integer));
    } else {
      out.doc_id = static_cast<std::int64_t>(row_number);
    }
    for (const auto& a : schema_.attributes) {
      for (const auto& c : a.columns)
        if (!r.has(c)) throw InvalidArgument("missing column '" + c + "'");
      switch (a.kind) {
        case AttributeKind::Category:
          out.categories[a.name] = r.text(a.columns[0]);
          break;
        case AttributeKind::Geo: {
          const double lon = r.ordered(a.columns[0], AttributeKind::Float);
          const double lat = r.ordered(a.columns[1], AttributeKind::Float);
          if (lon < -180 || lon > 180 || lat < -90 || lat > 90)
            throw InvalidArgument("geo coordinate out of range");
          out.ordered[a.name + ".lon"] = lon;
          out.ordered[a.name + ".lat"] = lat;
          break;
        }
        default:
          out.ordered[a.name] = r.ordered(a.columns[0], a.kind);
      }
    }
    return out;
  }

  const Schema& schema_;
  TokenizerConfig tok_;
  DatasetBuilder builder_;
  IngestReport& report_;
};

}  // namespace

SourceFormat guess_format(const std::string& path) {
  auto ends_with = [&](std::string_view suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends_with(".jsonl") || ends_with(".ndjson") || ends_with(".json")) return SourceFormat::Jsonl;
  return SourceFormat::Csv;
}

bool read_csv_record(std::istream& in, std::vector<std::string>& fields, char sep) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string cur;
  bool quoted = false;
  bool any = false;
  for (int ch; (ch = in.get()) != std::char_traits<char>::eof();) {
    any = true;
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          cur.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == sep) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(cur));
  return true;
}

Dataset ingest(std::istream& source, SourceFormat format, const std::string& name,
               const Schema& schema, const TokenizerConfig& tokenizer, IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  Ingestor ing(name, schema, tokenizer, rep);

  if (format == SourceFormat::Csv) {
    std::vector<std::string> fields;
    if (!read_csv_record(source, fields)) throw Error("CSV source is empty");
    std::map<std::string, std::size_t> header;
    for (std::size_t i = 0; i < fields.size(); ++i) header[fields[i]] = i;
    if (header.count(schema.text_column) == 0)
      throw InvalidArgument("CSV header lacks text column '" + schema.text_column + "'");
    const std::size_t width = fields.size();
    std::size_t row = 0;
    while (read_csv_record(source, fields)) {
      if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
      if (fields.size() != width) {
        ++rep.rows_read;
        ing.skip("row " + std::to_string(row++) + ": expected " + std::to_string(width) +
                 " fields, got " + std::to_string(fields.size()));
        continue;
      }
      ing.row(CsvRow(header, fields), row++);
    }
  } else {
    std::string line;
    std::size_t row = 0;
    while (std::getline(source, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object()) {
        ++rep.rows_read;
        ing.skip("row " + std::to_string(row++) + ": invalid JSON object");
        continue;
      }
      ing.row(JsonRow(obj), row++);
    }
  }
  return ing.finish();
}

Dataset ingest_file(const std::string& path, const std::string& name, const Schema& schema,
                    const TokenizerConfig& tokenizer, IngestReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path);
  return ingest(in, guess_format(path), name, schema, tokenizer, report);
}

}  // namespace mlego::corpus
