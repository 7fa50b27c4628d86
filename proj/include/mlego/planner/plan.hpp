#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "mlego/corpus/region.hpp"
#include "mlego/planner/cost.hpp"

namespace mlego::planner {

// A plan is a subset of the candidate models, one bit per candidate.
using Mask = std::uint64_t;
inline constexpr std::size_t kMaxCandidates = 64;

inline Mask bit(std::size_t i) noexcept { return Mask{1} << i; }
inline std::size_t popcount(Mask m) noexcept { return static_cast<std::size_t>(std::popcount(m)); }

/// One search instance: candidates (all inside the query), which pairs of
/// them overlap, and the size of the query.
struct Problem {
  struct Candidate {
    std::uint64_t id = 0;
    std::size_t N = 0;
  };
  std::vector<Candidate> models;  // ascending id
  std::vector<Mask> conflicts;    // conflicts[i]: models overlapping i
  std::size_t N_query = 0;
  CostModel cost;

  std::size_t size() const noexcept { return models.size(); }
  bool valid(Mask plan) const noexcept;
  std::size_t covered(Mask plan) const noexcept;
  // Smallest member doc count, 0 for the empty plan.
  std::size_t min_member(Mask plan) const noexcept;

  // Throws InvalidArgument past kMaxCandidates.
  static Problem from_regions(std::vector<Candidate> models, const std::vector<corpus::Region>& regions,
                              std::size_t N_query, const CostModel& cost);
};

struct ScoredPlan {
  Mask mask = 0;
  std::size_t N_covered = 0;
  std::size_t N_uncovered = 0;
  std::size_t x = 0;  // merges
  double l_p = 0;
  double c_train = 0;
  double c_merge = 0;
  double c_norm = 0;
  double sc = 0;

  nlohmann::json to_json(const Problem& p) const;
};

// x = |plan| - 1, plus one if the plan leaves data to train.
std::size_t merge_count(const Problem& p, Mask plan) noexcept;

// The monotone aggregate used for both scores and thresholds.
double aggregate(double alpha, double l_p, double c_merge, double c_train, double norm) noexcept;

ScoredPlan score(const Problem& p, Mask plan, double alpha);

// Deterministic total order: score, then normalised time, then loss, then
// the members' ids compared lexicographically.
bool better(const Problem& p, const ScoredPlan& a, const ScoredPlan& b) noexcept;

// Maximal sets of pairwise non-overlapping candidates, ascending by mask.
std::vector<Mask> rl_plans(const Problem& p);

// Generate-and-rank over all 2^n subsets.
ScoredPlan nai_search(const Problem& p, double alpha);

// Every valid plan, by brute force (tests and oracles).
std::vector<Mask> all_valid_plans(const Problem& p);

struct PlanNode {
  Mask mask = 0;
  std::size_t N = 0;           // documents covered
  std::size_t min_member = 0;  // smallest member's N
};

struct PushDown {
  std::vector<PlanNode> kept;     // sorted by N descending
  std::vector<PlanNode> demoted;
};

// Demote p2 when another plan p1 of the layer can shed its smallest member
// and still cover at least N(p2). Plans of maximal N always stay.
PushDown push_down(std::vector<PlanNode> layer);

struct CriticalX {
  double x_bound_rl = 0;  // min over RL plans of c_train(min member) / t_m
  double x_bound_min = 0;  // c_train(smallest candidate) / t_m
  std::size_t max_plan_size = 0;
  bool merge_cost_ignorable = false;

  nlohmann::json to_json() const;
};

CriticalX critical_x(const Problem& p, const std::vector<Mask>& rl);

}  // namespace mlego::planner
