#include "mlego/planner/search.hpp"

#include <algorithm>
#include <optional>
#include <unordered_set>

#include "mlego/common/error.hpp"

namespace mlego::planner {

namespace {

// Plans by model count, one more model per layer, each layer sorted by
// merge count so the loss and merge-cost values never decrease.
class CountLayers {
 public:
  explicit CountLayers(const Problem& p) : p_(p) { plans_.push_back(0); frontier_ = {0}; layers_ = 1; }

  std::optional<Mask> at(std::size_t i) {
    while (i >= plans_.size() && !frontier_.empty()) grow();
    if (i >= plans_.size()) return std::nullopt;
    return plans_[i];
  }
  std::size_t layers() const noexcept { return layers_; }

 private:
  void grow() {
    std::vector<std::pair<std::size_t, Mask>> next;
    for (Mask s : frontier_) {
      const std::size_t start = s ? static_cast<std::size_t>(64 - std::countl_zero(s)) : 0;
      for (std::size_t i = start; i < p_.size(); ++i)
        if (!(p_.conflicts[i] & s)) next.emplace_back(0, s | bit(i));
    }
    for (auto& [x, m] : next) x = merge_count(p_, m);
    std::sort(next.begin(), next.end());
    frontier_.clear();
    for (const auto& [_, m] : next) {
      frontier_.push_back(m);
      plans_.push_back(m);
    }
    if (!next.empty()) ++layers_;
  }

  const Problem& p_;
  std::vector<Mask> plans_;
  std::vector<Mask> frontier_;
  std::size_t layers_ = 0;
};

// Plans by covered documents, descending, rooted at the RL plans: each
// layer is pushed down, then the next layer is the children of the kept
// plans (one model removed) plus whatever was demoted.
class TrainLayers {
 public:
  TrainLayers(const Problem& p, const std::vector<Mask>& rl) : p_(p) {
    for (Mask m : rl)
      if (seen_.insert(m).second) pending_.push_back(node(m));
  }

  std::optional<Mask> at(std::size_t i) {
    while (i >= plans_.size() && !pending_.empty()) grow();
    if (i >= plans_.size()) return std::nullopt;
    return plans_[i];
  }
  std::size_t layers() const noexcept { return layer_ends_.size(); }
  const std::vector<Mask>& plans() const noexcept { return plans_; }
  const std::vector<std::size_t>& layer_ends() const noexcept { return layer_ends_; }

 private:
  PlanNode node(Mask m) const { return {m, p_.covered(m), p_.min_member(m)}; }

  void grow() {
    auto pd = push_down(std::move(pending_));
    pending_ = std::move(pd.demoted);
    for (const auto& k : pd.kept) {
      plans_.push_back(k.mask);
      for (Mask rest = k.mask; rest; rest &= rest - 1) {
        const Mask child = k.mask & ~(rest & -rest);
        if (seen_.insert(child).second) pending_.push_back(node(child));
      }
    }
    layer_ends_.push_back(plans_.size());
  }

  const Problem& p_;
  std::vector<PlanNode> pending_;
  std::unordered_set<Mask> seen_;
  std::vector<Mask> plans_;
  std::vector<std::size_t> layer_ends_;
};

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Auto: return "auto";
    case Method::Psoa: return "psoa";
    case Method::PsoaPlusPlus: return "psoa++";
    case Method::Nai: return "nai";
  }
  return "auto";
}

Method parse_method(std::string_view s) {
  if (s == "auto") return Method::Auto;
  if (s == "psoa") return Method::Psoa;
  if (s == "psoa++" || s == "psoapp") return Method::PsoaPlusPlus;
  if (s == "nai") return Method::Nai;
  throw InvalidArgument("unknown search method '" + std::string(s) + "'");
}

TrainOrder train_list(const Problem& p, const std::vector<Mask>& rl) {
  TrainLayers t(p, rl);
  for (std::size_t i = 0; t.at(i); ++i) {
  }
  return {t.plans(), t.layer_ends()};
}

SearchResult search(const Problem& p, double alpha, const SearchOptions& opts) {
  if (!(alpha >= 0 && alpha <= 1)) throw InvalidArgument("alpha must lie in [0, 1]");
  if (p.size() > kMaxCandidates) throw InvalidArgument("too many candidate models");
  SearchResult r;
  r.method = opts.method;
  if (opts.method == Method::Nai) {
    r.best = nai_search(p, alpha);
    r.exhausted = true;
    r.plans_scored = std::size_t{1} << p.size();
    return r;
  }

  r.rl = rl_plans(p);
  r.critical = critical_x(p, r.rl);
  r.fused = alpha == 0 && (opts.method == Method::PsoaPlusPlus ||
                           (opts.method == Method::Auto && r.critical.merge_cost_ignorable));
  const double norm = p.cost.cost_train(p.N_query);

  CountLayers counts(p);
  TrainLayers train(p, r.rl);
  std::unordered_set<Mask> scored;
  std::optional<ScoredPlan> best;
  auto consider = [&](Mask m) {
    if (!scored.insert(m).second) return;
    auto s = score(p, m, alpha);
    if (!best || better(p, s, *best)) best = s;
  };

  // Last values read from each list; unseen plans are at least this bad
  // in every component.
  double lp_last = 0, merge_last = 0, train_last = 0;
  std::size_t lp_pos = 0, merge_pos = 0, train_pos = 0;
  for (;;) {
    if (!r.fused) {
      auto a = counts.at(lp_pos);
      auto b = counts.at(merge_pos);
      if (!a || !b) {
        r.exhausted = true;
        break;
      }
      ++lp_pos;
      ++merge_pos;
      lp_last = p.cost.loss(merge_count(p, *a));
      merge_last = p.cost.cost_merge(merge_count(p, *b));
      consider(*a);
      consider(*b);
    }
    auto c = train.at(train_pos);
    if (!c) {
      r.exhausted = true;
      break;
    }
    ++train_pos;
    const std::size_t cov = p.covered(*c);
    train_last = p.cost.cost_train(cov < p.N_query ? p.N_query - cov : 0);
    consider(*c);

    // Fused: the merge cost is part of each plan's score but not of the
    // bound, which then only relies on c_train.
    const double th = r.fused ? aggregate(alpha, 0, 0, train_last, norm)
                              : aggregate(alpha, lp_last, merge_last, train_last, norm);
    ++r.rounds;
    if (r.thresholds.size() < opts.max_trace) r.thresholds.push_back(th);
    r.final_threshold = th;
    if (best->sc < th) break;
  }
  r.best = *best;
  r.plans_scored = scored.size();
  if (!r.fused) {
    r.lists.push_back({"loss", lp_pos, counts.layers()});
    r.lists.push_back({"merge_cost", merge_pos, counts.layers()});
  }
  r.lists.push_back({r.fused ? "train_merge_fused" : "train_cost", train_pos, train.layers()});
  return r;
}

nlohmann::json SearchResult::to_json(const Problem& p) const {
  nlohmann::json lists_j = nlohmann::json::array();
  for (const auto& l : lists) lists_j.push_back({{"name", l.name}, {"items_read", l.items_read}, {"layers", l.layers}});
  nlohmann::json rl_j = nlohmann::json::array();
  for (Mask m : rl) {
    std::vector<std::uint64_t> ids;
    for (Mask rest = m; rest; rest &= rest - 1) ids.push_back(p.models[static_cast<std::size_t>(std::countr_zero(rest))].id);
    rl_j.push_back(ids);
  }
  return {
      {"method", to_string(method)},
      {"fused", fused},
      {"exhausted", exhausted},
      {"rl_plans", rl_j},
      {"critical_x", critical.to_json()},
      {"lists", lists_j},
      {"threshold", {{"trajectory", thresholds}, {"rounds", rounds}, {"final", final_threshold}}},
      {"plans_scored", plans_scored},
      {"chosen", best.to_json(p)},
  };
}

}  // namespace mlego::planner
