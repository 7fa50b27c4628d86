#pragma once

#include <istream>
#include <string>
#include <vector>

#include "mlego/corpus/dataset.hpp"

namespace mlego::corpus {

enum class SourceFormat { Csv, Jsonl };

// Guess from the file extension; ".jsonl"/".ndjson"/".json" are JSON lines,
// everything else CSV.
SourceFormat guess_format(const std::string& path);

// RFC 4180-ish: quoted fields may contain separators, doubled quotes and
// newlines. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, char sep = ',');

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::vector<std::string> warnings;  // first few skip reasons
};

// Malformed rows are skipped and counted. Throws Error when nothing usable
// remains (empty vocabulary).
Dataset ingest(std::istream& source, SourceFormat format, const std::string& name,
               const Schema& schema, const TokenizerConfig& tokenizer,
               IngestReport* report = nullptr);

Dataset ingest_file(const std::string& path, const std::string& name, const Schema& schema,
                    const TokenizerConfig& tokenizer, IngestReport* report = nullptr);

}  // namespace mlego::corpus
