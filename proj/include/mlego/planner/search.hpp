#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mlego/planner/plan.hpp"

namespace mlego::planner {

enum class Method {
  Auto,          // threshold search, fusing the merge list when that is safe
  Psoa,          // threshold search over the loss, merge-cost and train-cost lists
  PsoaPlusPlus,  // fused merge+train list (alpha = 0 only; otherwise as Psoa)
  Nai,           // exhaustive generate-and-rank
};

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view s);

struct ListStats {
  std::string name;
  std::size_t items_read = 0;
  std::size_t layers = 0;  // layers generated so far
};

struct SearchResult {
  ScoredPlan best;
  Method method = Method::Psoa;
  bool fused = false;
  bool exhausted = false;  // stopped because a list ran out
  std::vector<Mask> rl;
  CriticalX critical;
  std::vector<ListStats> lists;
  std::vector<double> thresholds;  // per round, capped
  std::size_t rounds = 0;
  double final_threshold = 0;
  std::size_t plans_scored = 0;

  nlohmann::json to_json(const Problem& p) const;
};

struct SearchOptions {
  Method method = Method::Auto;
  std::size_t max_trace = 2000;  // threshold values kept in the trace
};

// Returns the optimal plan under `better`; with method Nai the lists are
// skipped and every subset is scored.
SearchResult search(const Problem& p, double alpha, const SearchOptions& opts = {});

// The train-cost list on its own: plans in the order the layered,
// pushed-down generator emits them, with layer boundaries.
struct TrainOrder {
  std::vector<Mask> plans;
  std::vector<std::size_t> layer_ends;
};
TrainOrder train_list(const Problem& p, const std::vector<Mask>& rl);

}  // namespace mlego::planner
