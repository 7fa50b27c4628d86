#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mlego/corpus/attribute.hpp"
#include "mlego/corpus/region.hpp"
#include "mlego/corpus/tokenizer.hpp"

namespace mlego::corpus {

using TokenId = std::uint32_t;
using DocIndex = std::uint32_t;

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terms);

  std::size_t size() const noexcept { return terms_.size(); }
  const std::string& term(TokenId id) const { return terms_.at(id); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  // Returns size() when absent.
  TokenId find(std::string_view term) const;
  std::uint64_t hash() const noexcept { return hash_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TokenId> index_;
  std::uint64_t hash_ = 0;
};

/// Token sequences for a subset of documents, viewed in place. The owning
/// dataset (or OwnedCorpus) must outlive the slice.
struct CorpusSlice {
  std::vector<std::span<const TokenId>> docs;
  std::size_t vocab_size = 0;
  std::uint64_t vocab_hash = 0;

  std::size_t total_tokens() const noexcept;
};

/// Self-contained token storage for tests and generators.
struct OwnedCorpus {
  std::vector<std::vector<TokenId>> docs;
  std::size_t vocab_size = 0;
  std::uint64_t vocab_hash = 0;

  CorpusSlice slice() const;
  CorpusSlice slice(std::span<const std::size_t> which) const;
};

/// Immutable attribute-tagged corpus with a frozen vocabulary and an index
/// for counting/selecting documents by region.
class Dataset {
 public:
  struct CategoricalColumn {
    std::vector<std::string> dictionary;
    std::vector<std::int32_t> codes;
    std::unordered_map<std::string, std::int32_t> lookup;
    std::vector<std::vector<DocIndex>> buckets;  // per code, ascending
  };

  Dataset() = default;

  const std::string& name() const noexcept { return name_; }
  const Schema& schema() const noexcept { return schema_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  const TokenizerConfig& tokenizer() const noexcept { return tokenizer_; }
  std::size_t num_docs() const noexcept { return doc_ids_.size(); }
  std::size_t num_tokens() const noexcept { return tokens_.size(); }
  std::size_t skipped_rows() const noexcept { return skipped_rows_; }

  std::span<const TokenId> tokens(DocIndex doc) const;
  std::int64_t doc_id(DocIndex doc) const { return doc_ids_.at(doc); }
  double ordered_value(std::string_view dim, DocIndex doc) const;
  const std::string& category_value(std::string_view attr, DocIndex doc) const;

  bool matches(const Region& region, DocIndex doc) const;

  // Throws InvalidArgument for attributes the schema does not declare.
  void check_region(const Region& region) const;
  std::size_t count_docs(const Region& region) const;
  // Ascending document indices.
  std::vector<DocIndex> select_docs(const Region& region) const;
  std::vector<DocIndex> select_docs(std::span<const Region> union_of) const;

  CorpusSlice slice(std::span<const DocIndex> docs) const;
  CorpusSlice slice_all() const;

  CategoryDomains category_domains() const;
  // Min/max per ordered dimension.
  std::map<std::string, Interval> ordered_extents() const;

  nlohmann::json manifest() const;
  void save(const std::filesystem::path& dir) const;
  static Dataset load(const std::filesystem::path& dir);

 private:
  friend class DatasetBuilder;

  void build_index();
  std::pair<const DocIndex*, const DocIndex*> candidate_range(const Region& region,
                                                              std::vector<DocIndex>& scratch) const;

  std::string name_;
  Schema schema_;
  TokenizerConfig tokenizer_;
  Vocabulary vocab_;
  std::vector<std::int64_t> doc_ids_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<TokenId> tokens_;
  std::map<std::string, std::vector<double>, std::less<>> ordered_;
  std::map<std::string, CategoricalColumn, std::less<>> categorical_;
  std::map<std::string, std::vector<DocIndex>, std::less<>> sorted_;  // per ordered dim
  std::size_t skipped_rows_ = 0;
};

/// Accumulates raw documents, then freezes the vocabulary (min_df) and the
/// attribute index.
class DatasetBuilder {
 public:
  DatasetBuilder(std::string name, Schema schema, TokenizerConfig tokenizer);

  struct Row {
    std::int64_t doc_id = 0;
    std::vector<std::string> words;
    std::map<std::string, double> ordered;       // by ordered dimension name
    std::map<std::string, std::string> categories;
  };

  void add(Row row);
  void add_skipped(std::size_t n = 1) { skipped_ += n; }
  std::size_t size() const noexcept { return rows_.size(); }

  // Throws Error when the resulting vocabulary is empty or doc ids repeat.
  Dataset build();

 private:
  std::string name_;
  Schema schema_;
  TokenizerConfig tokenizer_;
  std::vector<Row> rows_;
  std::size_t skipped_ = 0;
};

}  // namespace mlego::corpus
