#include "mlego/planner/plan.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "mlego/common/error.hpp"

namespace mlego::planner {

bool Problem::valid(Mask plan) const noexcept {
  for (Mask rest = plan; rest; rest &= rest - 1) {
    const auto i = static_cast<std::size_t>(std::countr_zero(rest));
    if (conflicts[i] & plan) return false;
  }
  return true;
}

std::size_t Problem::covered(Mask plan) const noexcept {
  std::size_t n = 0;
  for (Mask rest = plan; rest; rest &= rest - 1) n += models[static_cast<std::size_t>(std::countr_zero(rest))].N;
  return n;
}

std::size_t Problem::min_member(Mask plan) const noexcept {
  if (!plan) return 0;
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (Mask rest = plan; rest; rest &= rest - 1)
    n = std::min(n, models[static_cast<std::size_t>(std::countr_zero(rest))].N);
  return n;
}

Problem Problem::from_regions(std::vector<Candidate> models, const std::vector<corpus::Region>& regions,
                              std::size_t N_query, const CostModel& cost) {
  if (models.size() > kMaxCandidates)
    throw InvalidArgument(std::to_string(models.size()) + " candidate models exceed the limit of " +
                          std::to_string(kMaxCandidates) + "; materialize coarser models");
  if (regions.size() != models.size()) throw InvalidArgument("one region per candidate expected");
  Problem p;
  p.models = std::move(models);
  p.N_query = N_query;
  p.cost = cost;
  p.conflicts.assign(p.models.size(), 0);
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t j = i + 1; j < regions.size(); ++j)
      if (corpus::intersects(regions[i], regions[j])) {
        p.conflicts[i] |= bit(j);
        p.conflicts[j] |= bit(i);
      }
  return p;
}

std::size_t merge_count(const Problem& p, Mask plan) noexcept {
  const std::size_t cov = p.covered(plan);
  const std::size_t parts = popcount(plan) + (cov < p.N_query ? 1 : 0);
  return parts == 0 ? 0 : parts - 1;
}

double aggregate(double alpha, double l_p, double c_merge, double c_train, double norm) noexcept {
  double c = norm > 0 ? (c_train + c_merge) / norm : 0.0;
  c = std::clamp(c, 0.0, 1.0);
  return alpha * l_p + (1.0 - alpha) * c + kScoreEpsilon;
}

ScoredPlan score(const Problem& p, Mask plan, double alpha) {
  ScoredPlan s;
  s.mask = plan;
  s.N_covered = p.covered(plan);
  s.N_uncovered = s.N_covered < p.N_query ? p.N_query - s.N_covered : 0;
  s.x = merge_count(p, plan);
  s.l_p = p.cost.loss(s.x);
  s.c_train = p.cost.cost_train(s.N_uncovered);
  s.c_merge = p.cost.cost_merge(s.x);
  const double norm = p.cost.cost_train(p.N_query);
  s.c_norm = norm > 0 ? std::clamp((s.c_train + s.c_merge) / norm, 0.0, 1.0) : 0.0;
  s.sc = aggregate(alpha, s.l_p, s.c_merge, s.c_train, norm);
  return s;
}

bool better(const Problem& p, const ScoredPlan& a, const ScoredPlan& b) noexcept {
  if (a.sc != b.sc) return a.sc < b.sc;
  if (a.c_norm != b.c_norm) return a.c_norm < b.c_norm;
  if (a.l_p != b.l_p) return a.l_p < b.l_p;
  // Lexicographic on ascending member ids; candidates are stored by id so
  // this is the order of the lowest set bits.
  Mask x = a.mask, y = b.mask;
  while (x && y) {
    const auto i = std::countr_zero(x), j = std::countr_zero(y);
    if (i != j) return p.models[static_cast<std::size_t>(i)].id < p.models[static_cast<std::size_t>(j)].id;
    x &= x - 1;
    y &= y - 1;
  }
  return !x && y;
}

namespace {

// Bron-Kerbosch with pivoting on the compatibility graph (complement of
// the conflict graph); its maximal cliques are our maximal independent sets.
void bron_kerbosch(const Problem& p, Mask all, Mask r, Mask cand, Mask excl, std::vector<Mask>& out) {
  if (!cand && !excl) {
    out.push_back(r);
    return;
  }
  auto compat = [&](std::size_t i) { return all & ~p.conflicts[i] & ~bit(i); };
  // Pivot with the most compatible neighbours among the candidates.
  Mask pool = cand | excl;
  std::size_t pivot = static_cast<std::size_t>(std::countr_zero(pool));
  std::size_t best = 0;
  for (Mask rest = pool; rest; rest &= rest - 1) {
    const auto u = static_cast<std::size_t>(std::countr_zero(rest));
    const std::size_t n = popcount(cand & compat(u));
    if (n >= best) {
      best = n;
      pivot = u;
    }
  }
  for (Mask rest = cand & ~compat(pivot); rest; rest &= rest - 1) {
    const auto v = static_cast<std::size_t>(std::countr_zero(rest));
    bron_kerbosch(p, all, r | bit(v), cand & compat(v), excl & compat(v), out);
    cand &= ~bit(v);
    excl |= bit(v);
  }
}

}  // namespace

std::vector<Mask> rl_plans(const Problem& p) {
  std::vector<Mask> out;
  if (p.models.empty()) return {0};
  const Mask all = p.size() == 64 ? ~Mask{0} : bit(p.size()) - 1;
  bron_kerbosch(p, all, 0, all, 0, out);
  std::sort(out.begin(), out.end());
  return out;
}

ScoredPlan nai_search(const Problem& p, double alpha) {
  if (p.size() > 40) throw InvalidArgument("exhaustive search beyond 40 candidates is not supported");
  const Mask end = bit(p.size());
  ScoredPlan best = score(p, 0, alpha);
  for (Mask m = 1; m < end; ++m) {
    if (!p.valid(m)) continue;
    auto s = score(p, m, alpha);
    if (better(p, s, best)) best = s;
  }
  return best;
}

std::vector<Mask> all_valid_plans(const Problem& p) {
  std::vector<Mask> out;
  const Mask end = bit(p.size());
  for (Mask m = 0; m < end; ++m)
    if (p.valid(m)) out.push_back(m);
  return out;
}

PushDown push_down(std::vector<PlanNode> layer) {
  PushDown out;
  // Best and runner-up "shed the smallest member" coverage, so each plan is
  // compared against the best of the others.
  std::optional<std::size_t> top, second;
  std::size_t top_at = layer.size(), n_max = 0;
  for (std::size_t i = 0; i < layer.size(); ++i) {
    n_max = std::max(n_max, layer[i].N);
    if (!layer[i].mask) continue;  // the empty plan has no children
    const std::size_t shed = layer[i].N - layer[i].min_member;
    if (!top || shed > *top) {
      second = top;
      top = shed;
      top_at = i;
    } else if (!second || shed > *second) {
      second = shed;
    }
  }
  for (std::size_t i = 0; i < layer.size(); ++i) {
    const auto& other = i == top_at ? second : top;
    const bool demote = other && *other >= layer[i].N && layer[i].N != n_max;
    (demote ? out.demoted : out.kept).push_back(layer[i]);
  }
  std::stable_sort(out.kept.begin(), out.kept.end(), [](const PlanNode& a, const PlanNode& b) {
    return a.N != b.N ? a.N > b.N : a.mask < b.mask;
  });
  return out;
}

CriticalX critical_x(const Problem& p, const std::vector<Mask>& rl) {
  CriticalX c;
  const double tm = p.cost.t_m();
  auto ratio = [&](std::size_t n) {
    const double ct = p.cost.cost_train(n);
    if (tm <= 0) return std::numeric_limits<double>::infinity();
    return ct / tm;
  };
  c.x_bound_rl = std::numeric_limits<double>::infinity();
  for (Mask plan : rl) {
    c.max_plan_size = std::max(c.max_plan_size, popcount(plan));
    if (plan) c.x_bound_rl = std::min(c.x_bound_rl, ratio(p.min_member(plan)));
  }
  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (const auto& m : p.models) smallest = std::min(smallest, m.N);
  c.x_bound_min = p.models.empty() ? std::numeric_limits<double>::infinity() : ratio(smallest);
  c.merge_cost_ignorable = static_cast<double>(c.max_plan_size) <= c.x_bound_min;
  return c;
}

nlohmann::json CriticalX::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"x_bound_rl", num(x_bound_rl)}, {"x_bound_min", num(x_bound_min)},
          {"max_plan_size", max_plan_size}, {"merge_cost_ignorable", merge_cost_ignorable}};
}

nlohmann::json ScoredPlan::to_json(const Problem& p) const {
  std::vector<std::uint64_t> ids;
  for (Mask rest = mask; rest; rest &= rest - 1) ids.push_back(p.models[static_cast<std::size_t>(std::countr_zero(rest))].id);
  return {{"models", ids}, {"N_covered", N_covered}, {"N_uncovered", N_uncovered}, {"x", x},
          {"l_p", l_p},    {"c_train", c_train},     {"c_merge", c_merge},         {"c_norm", c_norm},
          {"sc", sc}};
}

}  // namespace mlego::planner
