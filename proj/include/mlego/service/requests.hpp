#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mlego/batch/batch.hpp"
#include "mlego/planner/execute.hpp"
#include "mlego/service/config.hpp"

namespace mlego::service {

/// {"dataset", "predicate", "alpha", "lda": {...}, "algo", "method",
///  "materialize_result"}; lda keys override the configured defaults.
struct QueryRequest {
  std::string dataset;
  corpus::Region predicate;
  double alpha = 0.5;
  planner::QueryOptions options;

  static QueryRequest from_json(const nlohmann::json& j, const ServiceConfig& defaults);
};

/// {"dataset", "queries": [{"predicate", "alpha"}], "lda", "algo", ...}
struct BatchRequest {
  std::string dataset;
  std::vector<batch::BatchQuery> queries;
  planner::QueryOptions options;

  static BatchRequest from_json(const nlohmann::json& j, const ServiceConfig& defaults);
};

// Top words per topic with weights, plan summary, timings.
nlohmann::json answer_json(const corpus::Dataset& ds, const planner::QueryResult& r, std::size_t top_words);

}  // namespace mlego::service
