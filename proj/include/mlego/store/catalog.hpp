#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlego/corpus/region.hpp"
#include "mlego/lda/config.hpp"
#include "mlego/lda/model.hpp"
#include "mlego/store/region_index.hpp"

namespace mlego::store {

using ModelId = std::uint64_t;

/// A stored, reusable model: its region, document count and parameters.
struct ModelRecord {
  ModelId id = 0;
  std::string dataset;
  corpus::Region region;
  std::size_t num_docs = 0;
  std::size_t word_count = 0;
  lda::Algo algo = lda::Algo::Vb;
  lda::LdaConfig cfg;
  std::uint64_t vocab_hash = 0;
  std::size_t K = 0, V = 0;
  std::size_t merges = 0;  // 0 when trained directly
  double train_seconds = 0;
  std::string created_at;
  std::uint64_t payload_digest = 0;

  nlohmann::json to_json() const;
  static ModelRecord from_json(const nlohmann::json& j);
};

struct MaterializeMeta {
  std::string dataset;
  lda::LdaConfig cfg;
  std::size_t merges = 0;
  double train_seconds = 0;
};

/// Models that may stand in for part of a query.
struct CandidateFilter {
  lda::Algo algo = lda::Algo::Vb;
  std::size_t K = 0;
  double alpha = 0, eta = 0;
  std::uint64_t vocab_hash = 0;

  bool accepts(const ModelRecord& r) const noexcept;
};

/// Immutable view of the catalog at one point in time.
class CatalogSnapshot {
 public:
  const std::vector<ModelRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  const ModelRecord* find(ModelId id) const;

  // Records whose region intersects the query (index lookup).
  std::vector<const ModelRecord*> overlapping(const corpus::Region& query) const;
  // Same answer by linear scan; kept for verification.
  std::vector<const ModelRecord*> overlapping_scan(const corpus::Region& query) const;
  // Overlapping records split into those fully inside the query (reuse
  // candidates) and those that stick out (excluded).
  struct Split {
    std::vector<const ModelRecord*> contained;
    std::vector<const ModelRecord*> partial;
  };
  Split candidates(const corpus::Region& query, const CandidateFilter& filter) const;

  lda::Payload payload(ModelId id) const;

 private:
  friend class Catalog;
  std::vector<ModelRecord> records_;  // ascending id
  RegionIndex index_;
  std::filesystem::path root_;
  // In-memory catalogs keep payloads here; disk-backed ones read on demand.
  std::shared_ptr<const std::map<ModelId, lda::Payload>> memory_;
};

/// Registry of materialized models. Writes are serialised; readers take a
/// snapshot and never observe a partially written model.
class Catalog {
 public:
  // Empty path: purely in-memory catalog.
  explicit Catalog(std::filesystem::path root = {});

  ModelId materialize(const lda::Payload& payload, const corpus::Region& region, const MaterializeMeta& meta);

  std::shared_ptr<const CatalogSnapshot> snapshot() const;
  std::size_t size() const { return snapshot()->size(); }
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  void publish(std::vector<ModelRecord> records, std::shared_ptr<const std::map<ModelId, lda::Payload>> memory);

  std::filesystem::path root_;
  mutable std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const CatalogSnapshot> snap_;
  ModelId next_id_ = 1;
};

}  // namespace mlego::store
