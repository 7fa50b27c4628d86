#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "mlego/lda/config.hpp"
#include "mlego/planner/cost.hpp"
#include "mlego/planner/search.hpp"

namespace mlego::service {

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  std::string host = "0.0.0.0";
  int port = 8080;
  std::size_t max_parallel_jobs = 2;
  lda::LdaConfig lda;
  lda::Algo algo = lda::Algo::Vb;
  planner::CostModel cost;
  planner::Method method = planner::Method::Auto;
  double decay = 1.0;
  std::size_t top_words = 10;

  // Keys missing from `j` keep their value in `base`.
  static ServiceConfig from_json(const nlohmann::json& j, ServiceConfig base);
  static ServiceConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Explicit path, else $MLEGO_CONFIG, else ./mlego.json when present,
  // else defaults.
  static ServiceConfig load(const std::optional<std::filesystem::path>& path = std::nullopt);
};

}  // namespace mlego::service
