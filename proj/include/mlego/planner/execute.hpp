#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "mlego/corpus/dataset.hpp"
#include "mlego/lda/model.hpp"
#include "mlego/planner/search.hpp"
#include "mlego/store/catalog.hpp"

namespace mlego::planner {

struct QueryOptions {
  double alpha = 0.5;
  lda::Algo algo = lda::Algo::Vb;
  lda::LdaConfig cfg;
  CostModel cost;  // K, V and iterations are taken from cfg and the dataset
  Method method = Method::Auto;
  double decay = 1.0;  // CGS merge decay
  bool materialize = false;
  std::size_t max_trace = 1000;
};

/// The search instance for one query against one catalog snapshot.
struct Prepared {
  Problem problem;
  std::vector<const store::ModelRecord*> candidates;  // parallel to problem.models
  std::vector<store::ModelId> excluded_partial;
  std::vector<store::ModelId> duplicates_dropped;
};

Prepared prepare(const corpus::Dataset& ds, const store::CatalogSnapshot& snap, const corpus::Region& query,
                 const QueryOptions& opts);

/// What a plan leaves to train. Regions when the region arithmetic applies,
/// otherwise only the document list.
struct Uncovered {
  std::vector<corpus::Region> regions;
  bool by_documents = false;
  std::vector<corpus::DocIndex> docs;
};

Uncovered uncovered_part(const corpus::Dataset& ds, const corpus::Region& query,
                         const std::vector<corpus::Region>& covered);

struct QueryResult {
  lda::TopicModel model;
  lda::Payload payload;  // merged parameters
  ScoredPlan plan;
  std::vector<store::ModelId> reused;
  Uncovered uncovered;
  std::optional<store::ModelId> materialized;
  double search_seconds = 0, train_seconds = 0, merge_seconds = 0;
  nlohmann::json trace;
};

// Search, train the uncovered remainder once, merge with the reused
// payloads. Throws InvalidArgument when the query matches no documents.
QueryResult execute_query(const corpus::Dataset& ds, store::Catalog& catalog, const corpus::Region& query,
                          const QueryOptions& opts);

// Cost constants fitted on this machine: three probe trainings of n, 1.5n
// and 2n documents and a few merges.
struct Calibration {
  CostModel cost;
  struct Probe {
    std::size_t docs;
    double measured, predicted;
  };
  std::vector<Probe> train_probes;
  double merge_seconds = 0;
  nlohmann::json to_json() const;
};
Calibration calibrate(const corpus::Dataset& ds, const lda::LdaConfig& cfg, lda::Algo algo, std::size_t n,
                      CostModel base = {});

}  // namespace mlego::planner
