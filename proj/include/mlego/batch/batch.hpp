#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlego/corpus/dataset.hpp"
#include "mlego/planner/execute.hpp"

namespace mlego::batch {

using planner::Mask;

/// What the benefit arithmetic needs: document counts for arbitrary regions,
/// the category universe, and the cost model.
struct Geometry {
  std::function<std::size_t(const corpus::Region&)> count;
  corpus::CategoryDomains domains;
  planner::CostModel cost;
  // Documents: benefit measured in data volume rather than seconds.
  enum class Measure { TrainCost, Documents } measure = Measure::TrainCost;

  double train(const corpus::Region& r) const {
    const std::size_t n = count(r);
    return measure == Measure::Documents ? static_cast<double>(n) : cost.cost_train(n);
  }
};

// Fragments of the union of the plans' uncovered areas that at least two
// plans need. `uncovered[i]` is plan i's (pairwise disjoint) uncovered list;
// each fragment's `sources` are plan indices.
std::vector<corpus::Fragment> shared_regions(std::span<const std::vector<corpus::Region>> uncovered,
                                             const corpus::CategoryDomains& domains = {});

// Sum over shared fragments of (multiplicity - 1) * c_train(fragment).
double benefit(std::span<const corpus::Fragment> shared, const Geometry& g);

// Gain from dropping model m from a plan: its region would then be trained
// together with the other plans' uncovered areas. Sum of multiplicity times
// c_train over the overlap, minus c_train(m). Positive means drop.
double model_benefit(const corpus::Region& m, std::span<const std::vector<corpus::Region>> others_uncovered,
                     const Geometry& g);

// 1 / (|M| + 1 - j), taken as 1 from the last layer on.
double layer_bound_factor(std::size_t j, std::size_t max_models);
// True when every value in layer j is below factor * best: no deeper layer
// can beat `best`.
bool layer_cutoff(double best, std::span<const double> layer_values, std::size_t j, std::size_t max_models);

/// One query's search state inside a batch.
struct QueryPlans {
  corpus::Region query;
  planner::Problem problem;
  std::vector<corpus::Region> regions;  // candidate regions, parallel to problem.models
  std::vector<Mask> rl;
  Mask top1 = 0;
};

struct Removal {
  std::uint64_t model_id = 0;
  double delta_b = 0;
};

struct QueryChoice {
  Mask mask = 0;
  std::vector<Removal> removed;
  double score = 0;  // summed delta B minus the train-time difference
  bool changed = false;
  bool rejected = false;  // heuristic pick would have lowered B or raised T
};

struct Combination {
  std::vector<QueryChoice> choices;
  std::vector<corpus::Fragment> shared;
  double benefit = 0;
  // Predicted execution time: each group of shared fragments needed by the
  // same queries trained once, each query's private remainder, the merges.
  double T = 0;
  double T_independent = 0;  // per-query top-1 plans, no sharing
  bool sharing = true;       // false when sharing would not beat T_independent
  double benefit_top1 = 0;
  double T_top1 = 0;

  nlohmann::json to_json(std::span<const QueryPlans> qs) const;
};

/// Shared accounting for a candidate combination.
class Evaluator {
 public:
  Evaluator(std::span<const QueryPlans> qs, const Geometry& g) : qs_(qs), g_(g) {}

  const std::vector<corpus::Region>& uncovered(std::size_t q, Mask m) const;
  // c_train of the uncovered part plus the merges, for one query alone.
  double time(std::size_t q, Mask m) const;
  double benefit(std::span<const Mask> plans) const;
  std::vector<corpus::Fragment> shared(std::span<const Mask> plans) const;
  // Execution time with shared fragments trained once.
  double total(std::span<const Mask> plans) const;
  const Geometry& geometry() const noexcept { return g_; }

 private:
  std::span<const QueryPlans> qs_;
  const Geometry& g_;
  mutable std::map<std::pair<std::size_t, Mask>, std::vector<corpus::Region>> cache_;
};

// Fixed-order heuristic: per query, drop every model whose delta B is
// positive from each RL plan, rank by removed benefit minus the extra
// training over the top-1 plan, keep the best. A pick is installed only if
// it does not lower the benefit and does not raise T.
Combination optimize_batch(std::span<const QueryPlans> qs, const Geometry& g);

// Layered variant for one query with the others fixed: L1 = RL plans, each
// next layer drops one more model. Value = B(P with q -> p) - dt(top1, p).
struct LayeredResult {
  Mask best = 0;
  double best_value = 0;
  std::optional<std::size_t> cutoff_layer;  // layer at which the bound fired
  std::vector<std::vector<std::pair<Mask, double>>> layers;  // all layers, values included
};
LayeredResult layered_search(std::span<const QueryPlans> qs, std::size_t q, std::span<const Mask> current,
                             const Geometry& g);

/// Batch execution against a dataset and catalog.
struct BatchQuery {
  corpus::Region region;
  double alpha = 0;
};

struct BatchOptions {
  planner::QueryOptions query;  // alpha ignored, taken per query
};

struct BatchResult {
  std::vector<planner::QueryResult> results;
  bool optimized = false;  // false: queries ran independently
  std::vector<std::string> warnings;
  double seconds = 0;
  nlohmann::json trace;
};

std::vector<QueryPlans> plan_queries(const corpus::Dataset& ds, const store::CatalogSnapshot& snap,
                                     std::span<const BatchQuery> queries, const planner::QueryOptions& opts);

Geometry dataset_geometry(const corpus::Dataset& ds, const planner::QueryOptions& opts);

BatchResult execute_batch(const corpus::Dataset& ds, store::Catalog& catalog, std::span<const BatchQuery> queries,
                          const BatchOptions& opts);

}  // namespace mlego::batch
