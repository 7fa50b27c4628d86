#include "mlego/batch/batch.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "mlego/common/error.hpp"
#include "mlego/common/timer.hpp"
#include "mlego/lda/train.hpp"
#include "mlego/merge/merge.hpp"

namespace mlego::batch {

namespace {

std::vector<std::uint64_t> member_ids(const planner::Problem& p, Mask m) {
  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (m & planner::bit(i)) ids.push_back(p.models[i].id);
  return ids;
}

}  // namespace

std::vector<corpus::Fragment> shared_regions(std::span<const std::vector<corpus::Region>> uncovered,
                                             const corpus::CategoryDomains& domains) {
  std::vector<corpus::Region> flat;
  std::vector<std::uint32_t> owner;
  for (std::size_t i = 0; i < uncovered.size(); ++i)
    for (const auto& r : uncovered[i]) {
      flat.push_back(r);
      owner.push_back(static_cast<std::uint32_t>(i));
    }
  std::vector<corpus::Fragment> out;
  for (auto& f : corpus::overlay(flat, domains)) {
    std::set<std::uint32_t> plans;
    for (auto s : f.sources) plans.insert(owner[s]);
    if (plans.size() < 2) continue;
    f.multiplicity = static_cast<int>(plans.size());
    f.sources.assign(plans.begin(), plans.end());
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

// Sum over k >= from of c_train(part with multiplicity >= k).
// Equals the per-fragment sum of (multiplicity - 1) * c_train when c_train
// is additive; for the quadratic cost it does not drop when a fragment is
// split by another plan's boundary.
double level_sum(std::span<const corpus::Fragment> frags, int from, const Geometry& g) {
  std::map<int, double> docs;  // multiplicity -> documents
  int top = 0;
  for (const auto& f : frags) {
    docs[f.multiplicity] += static_cast<double>(g.count(f.region));
    top = std::max(top, f.multiplicity);
  }
  auto cost = [&](double n) {
    return g.measure == Geometry::Measure::Documents ? n : g.cost.cost_train(static_cast<std::size_t>(n));
  };
  double b = 0;
  for (int k = from; k <= top; ++k) {
    double n = 0;
    for (auto it = docs.lower_bound(k); it != docs.end(); ++it) n += it->second;
    b += cost(n);
  }
  return b;
}

}  // namespace

double benefit(std::span<const corpus::Fragment> shared, const Geometry& g) { return level_sum(shared, 2, g); }

double model_benefit(const corpus::Region& m, std::span<const std::vector<corpus::Region>> others_uncovered,
                     const Geometry& g) {
  std::vector<corpus::Region> clipped;
  for (const auto& plan : others_uncovered)
    for (const auto& r : plan)
      if (auto both = corpus::intersect(r, m)) clipped.push_back(std::move(*both));
  return level_sum(corpus::overlay(clipped, g.domains), 1, g) - g.train(m);
}

double layer_bound_factor(std::size_t j, std::size_t max_models) {
  if (j == 0) throw InvalidArgument("layers are numbered from 1");
  return j >= max_models ? 1.0 : 1.0 / static_cast<double>(max_models + 1 - j);
}

bool layer_cutoff(double best, std::span<const double> layer_values, std::size_t j, std::size_t max_models) {
  const double bound = layer_bound_factor(j, max_models) * best;
  return std::all_of(layer_values.begin(), layer_values.end(), [&](double v) { return v < bound; });
}

const std::vector<corpus::Region>& Evaluator::uncovered(std::size_t q, Mask m) const {
  auto key = std::pair(q, m);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const auto& qp = qs_[q];
  std::vector<corpus::Region> covered;
  for (std::size_t i = 0; i < qp.problem.size(); ++i)
    if (m & planner::bit(i)) covered.push_back(qp.regions[i]);
  return cache_.emplace(key, corpus::region_difference(qp.query, covered, g_.domains)).first->second;
}

double Evaluator::time(std::size_t q, Mask m) const {
  const auto& p = qs_[q].problem;
  const std::size_t cov = p.covered(m);
  return p.cost.cost_train(p.N_query - std::min(cov, p.N_query)) + p.cost.cost_merge(planner::merge_count(p, m));
}

std::vector<corpus::Fragment> Evaluator::shared(std::span<const Mask> plans) const {
  std::vector<std::vector<corpus::Region>> unc;
  for (std::size_t q = 0; q < plans.size(); ++q) unc.push_back(uncovered(q, plans[q]));
  return shared_regions(unc, g_.domains);
}

double Evaluator::benefit(std::span<const Mask> plans) const {
  auto s = shared(plans);
  return batch::benefit(s, g_);
}

double Evaluator::total(std::span<const Mask> plans) const {
  std::map<std::vector<std::uint32_t>, double> units;  // queries -> documents
  std::vector<double> shared_docs(plans.size(), 0);
  std::vector<std::size_t> unit_count(plans.size(), 0);
  for (const auto& f : shared(plans)) {
    const double n = static_cast<double>(g_.count(f.region));
    if (n == 0) continue;
    units[f.sources] += n;
    for (auto q : f.sources) shared_docs[q] += n;
  }
  double t = 0;
  for (const auto& [sig, n] : units) {
    t += g_.cost.cost_train(static_cast<std::size_t>(n));
    for (auto q : sig) ++unit_count[q];
  }
  for (std::size_t q = 0; q < plans.size(); ++q) {
    const auto& p = qs_[q].problem;
    const double unc = static_cast<double>(p.N_query - p.covered(plans[q]));
    const double priv = unc - shared_docs[q];
    const std::size_t parts = planner::popcount(plans[q]) + unit_count[q] + (priv > 0 ? 1 : 0);
    t += p.cost.cost_train(static_cast<std::size_t>(priv)) + p.cost.cost_merge(parts ? parts - 1 : 0);
  }
  return t;
}

Combination optimize_batch(std::span<const QueryPlans> qs, const Geometry& g) {
  Evaluator ev(qs, g);
  Combination c;
  std::vector<Mask> plans;
  for (const auto& q : qs) plans.push_back(q.top1);
  c.choices.resize(qs.size());
  for (std::size_t q = 0; q < qs.size(); ++q) {
    c.choices[q].mask = plans[q];
    c.T_independent += ev.time(q, plans[q]);
  }
  double B = ev.benefit(plans);
  double T = ev.total(plans);
  c.benefit_top1 = B;
  c.T_top1 = T;

  for (std::size_t q = 0; q < qs.size(); ++q) {
    const auto& qp = qs[q];
    const auto& cost = qp.problem.cost;
    std::vector<std::vector<corpus::Region>> others;
    for (std::size_t o = 0; o < qs.size(); ++o)
      if (o != q) others.push_back(ev.uncovered(o, plans[o]));

    Mask members = 0;
    for (Mask r : qp.rl) members |= r;
    std::vector<double> delta(qp.problem.size(), 0);
    for (std::size_t i = 0; i < qp.problem.size(); ++i)
      if (members & planner::bit(i)) delta[i] = model_benefit(qp.regions[i], others, g);

    auto unc_cost = [&](Mask m) { return cost.cost_train(qp.problem.N_query - qp.problem.covered(m)); };
    QueryChoice best;
    best.mask = plans[q];
    for (Mask r : qp.rl) {
      QueryChoice cand;
      cand.mask = r;
      for (std::size_t i = 0; i < qp.problem.size(); ++i)
        if ((r & planner::bit(i)) && delta[i] > 0) {
          cand.mask &= ~planner::bit(i);
          cand.removed.push_back({qp.problem.models[i].id, delta[i]});
          cand.score += delta[i];
        }
      cand.score -= unc_cost(cand.mask) - unc_cost(qp.top1);
      if (cand.score > best.score) best = std::move(cand);
    }
    if (best.mask != plans[q]) {
      auto trial = plans;
      trial[q] = best.mask;
      const double B2 = ev.benefit(trial);
      const double T2 = ev.total(trial);
      if (B2 >= B && T2 <= T) {
        plans = std::move(trial);
        B = B2;
        T = T2;
        best.changed = true;
      } else {
        best.rejected = true;
        best.mask = plans[q];
      }
    }
    c.choices[q] = std::move(best);
  }
  c.shared = ev.shared(plans);
  c.benefit = B;
  c.T = T;
  if (T > c.T_independent) {
    // The extra merges outweigh the shared training: run the top-1 plans
    // on their own.
    c.sharing = false;
    c.T = c.T_independent;
    for (std::size_t q = 0; q < qs.size(); ++q) {
      plans[q] = qs[q].top1;
      c.choices[q].mask = qs[q].top1;
      c.choices[q].changed = false;
      c.choices[q].removed.clear();
    }
    c.shared = ev.shared(plans);
    c.benefit = c.benefit_top1;
  }
  return c;
}

LayeredResult layered_search(std::span<const QueryPlans> qs, std::size_t q, std::span<const Mask> current,
                             const Geometry& g) {
  Evaluator ev(qs, g);
  const auto& qp = qs[q];
  std::vector<Mask> plans(current.begin(), current.end());
  auto unc_cost = [&](Mask m) { return qp.problem.cost.cost_train(qp.problem.N_query - qp.problem.covered(m)); };
  auto value = [&](Mask m) {
    plans[q] = m;
    return ev.benefit(plans) - (unc_cost(m) - unc_cost(qp.top1));
  };
  std::size_t max_models = 0;
  for (Mask r : qp.rl) max_models = std::max(max_models, planner::popcount(r));

  LayeredResult out;
  std::unordered_set<Mask> seen;
  std::vector<Mask> layer;
  for (Mask r : qp.rl)
    if (seen.insert(r).second) layer.push_back(r);
  bool have_best = false;
  for (std::size_t j = 1; !layer.empty(); ++j) {
    std::vector<std::pair<Mask, double>> scored;
    std::vector<double> values;
    for (Mask m : layer) {
      scored.emplace_back(m, value(m));
      values.push_back(scored.back().second);
    }
    if (have_best && !out.cutoff_layer && layer_cutoff(out.best_value, values, j, max_models))
      out.cutoff_layer = j;
    if (!out.cutoff_layer)
      for (const auto& [m, v] : scored)
        if (!have_best || v > out.best_value || (v == out.best_value && m < out.best)) {
          out.best = m;
          out.best_value = v;
          have_best = true;
        }
    out.layers.push_back(std::move(scored));
    std::vector<Mask> next;
    for (Mask m : layer)
      for (Mask rest = m; rest; rest &= rest - 1) {
        const Mask child = m & ~(rest & (~rest + 1));
        if (seen.insert(child).second) next.push_back(child);
      }
    std::sort(next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

nlohmann::json Combination::to_json(std::span<const QueryPlans> qs) const {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t q = 0; q < choices.size(); ++q) {
    const auto& ch = choices[q];
    nlohmann::json removed = nlohmann::json::array();
    for (const auto& r : ch.removed) removed.push_back({{"model_id", r.model_id}, {"delta_b", r.delta_b}});
    per.push_back({{"query", q},
                   {"top1", member_ids(qs[q].problem, qs[q].top1)},
                   {"chosen", member_ids(qs[q].problem, ch.mask)},
                   {"removed", removed},
                   {"score", ch.score},
                   {"changed", ch.changed},
                   {"rejected", ch.rejected}});
  }
  nlohmann::json frags = nlohmann::json::array();
  for (const auto& f : shared)
    frags.push_back({{"region", f.region.to_json()}, {"multiplicity", f.multiplicity}, {"queries", f.sources}});
  return {{"queries", per},
          {"shared_fragments", frags},
          {"benefit", benefit},
          {"benefit_top1", benefit_top1},
          {"sharing", sharing},
          {"T_predicted", T},
          {"T_top1_predicted", T_top1},
          {"T_independent_predicted", T_independent}};
}

Geometry dataset_geometry(const corpus::Dataset& ds, const planner::QueryOptions& opts) {
  Geometry g;
  g.count = [&ds](const corpus::Region& r) { return ds.count_docs(r); };
  g.domains = ds.category_domains();
  g.cost = opts.cost;
  g.cost.K = opts.cfg.K;
  g.cost.V = ds.vocab().size();
  g.cost.iters = opts.cfg.max_iters;
  return g;
}

std::vector<QueryPlans> plan_queries(const corpus::Dataset& ds, const store::CatalogSnapshot& snap,
                                     std::span<const BatchQuery> queries, const planner::QueryOptions& opts) {
  std::vector<QueryPlans> out;
  for (const auto& bq : queries) {
    auto o = opts;
    o.alpha = bq.alpha;
    auto prep = planner::prepare(ds, snap, bq.region, o);
    if (prep.problem.N_query == 0) throw InvalidArgument("query matches no documents");
    QueryPlans qp;
    qp.query = bq.region;
    for (const auto* r : prep.candidates) qp.regions.push_back(r->region);
    qp.problem = std::move(prep.problem);
    auto sr = planner::search(qp.problem, bq.alpha, {o.method, 0});
    qp.rl = std::move(sr.rl);
    qp.top1 = sr.best.mask;
    out.push_back(std::move(qp));
  }
  return out;
}

namespace {

BatchResult run_independent(const corpus::Dataset& ds, store::Catalog& catalog, std::span<const BatchQuery> queries,
                            const BatchOptions& opts, std::vector<std::string> warnings) {
  Stopwatch sw;
  BatchResult out;
  out.warnings = std::move(warnings);
  nlohmann::json traces = nlohmann::json::array();
  for (const auto& q : queries) {
    auto o = opts.query;
    o.alpha = q.alpha;
    out.results.push_back(planner::execute_query(ds, catalog, q.region, o));
    traces.push_back(out.results.back().trace);
  }
  out.seconds = sw.seconds();
  out.trace = {{"optimized", false}, {"warnings", out.warnings}, {"queries", traces}, {"seconds", out.seconds}};
  return out;
}

}  // namespace

BatchResult execute_batch(const corpus::Dataset& ds, store::Catalog& catalog, std::span<const BatchQuery> queries,
                          const BatchOptions& opts) {
  BatchResult out;
  if (queries.empty()) {
    out.optimized = true;
    out.trace = {{"optimized", true}, {"queries", nlohmann::json::array()}};
    return out;
  }
  opts.query.cfg.validate();
  for (const auto& q : queries) {
    if (!(q.alpha >= 0 && q.alpha <= 1)) throw InvalidArgument("alpha must lie in [0, 1]");
    q.region.validate();
    ds.check_region(q.region);
  }
  const bool mixed = std::any_of(queries.begin(), queries.end(), [&](const auto& q) { return q.alpha != queries[0].alpha; });
  if (mixed) return run_independent(ds, catalog, queries, opts, {"mixed alpha in batch; queries run independently"});

  Stopwatch total;
  auto snap = catalog.snapshot();
  const auto g = dataset_geometry(ds, opts.query);
  std::vector<QueryPlans> qs;
  Combination comb;
  try {
    qs = plan_queries(ds, *snap, queries, opts.query);
    comb = optimize_batch(qs, g);
  } catch (const InvalidArgument& e) {
    // Region arithmetic is limited to two ordered dimensions.
    return run_independent(ds, catalog, queries, opts, {std::string("batch optimization unavailable: ") + e.what()});
  }
  const double plan_seconds = total.seconds();

  // Shared fragments needed by the same set of queries are trained as one
  // model, once.
  struct Unit {
    std::vector<std::uint32_t> queries;
    std::vector<corpus::Region> regions;
    std::vector<corpus::DocIndex> docs;
    lda::Payload payload;
    double seconds = 0;
  };
  std::map<std::vector<std::uint32_t>, Unit> by_sig;
  for (const auto& f : comb.sharing ? comb.shared : std::vector<corpus::Fragment>{}) {
    auto& u = by_sig[f.sources];
    u.queries = f.sources;
    u.regions.push_back(f.region);
  }
  std::vector<Unit> units;
  for (auto& [_, u] : by_sig) {
    u.docs = ds.select_docs(u.regions);
    if (ds.slice(u.docs).total_tokens() == 0) continue;
    auto t = lda::train(ds.slice(u.docs), opts.query.cfg, opts.query.algo);
    u.payload = std::move(t.payload);
    u.seconds = t.seconds;
    units.push_back(std::move(u));
  }

  nlohmann::json per = nlohmann::json::array();
  for (std::size_t q = 0; q < qs.size(); ++q) {
    const auto& qp = qs[q];
    planner::QueryResult r;
    const Mask mask = comb.choices[q].mask;
    r.plan = planner::score(qp.problem, mask, queries[q].alpha);
    std::vector<corpus::Region> covered;
    for (std::size_t i = 0; i < qp.problem.size(); ++i)
      if (mask & planner::bit(i)) {
        r.reused.push_back(qp.problem.models[i].id);
        covered.push_back(qp.regions[i]);
      }
    r.uncovered = planner::uncovered_part(ds, qp.query, covered);

    std::vector<lda::Payload> parts;
    for (auto id : r.reused) parts.push_back(snap->payload(id));
    std::vector<corpus::DocIndex> from_units;
    std::vector<std::size_t> used;
    for (std::size_t u = 0; u < units.size(); ++u)
      if (std::binary_search(units[u].queries.begin(), units[u].queries.end(), static_cast<std::uint32_t>(q))) {
        parts.push_back(units[u].payload);
        from_units.insert(from_units.end(), units[u].docs.begin(), units[u].docs.end());
        used.push_back(u);
      }
    std::sort(from_units.begin(), from_units.end());
    std::vector<corpus::DocIndex> priv;
    std::set_difference(r.uncovered.docs.begin(), r.uncovered.docs.end(), from_units.begin(), from_units.end(),
                        std::back_inserter(priv));
    if (ds.slice(priv).total_tokens() > 0) {
      auto t = lda::train(ds.slice(priv), opts.query.cfg, opts.query.algo);
      r.train_seconds = t.seconds;
      parts.push_back(std::move(t.payload));
    }
    if (parts.empty()) throw InvalidArgument("query selects no tokens to model");
    Stopwatch sw;
    r.model = merge::merge_models(parts, opts.query.cfg.eta, opts.query.decay, &r.payload);
    r.merge_seconds = sw.seconds();
    if (opts.query.materialize && !(r.reused.size() == 1 && r.uncovered.docs.empty()))
      r.materialized = catalog.materialize(r.payload, qp.query, {ds.name(), opts.query.cfg, parts.size() - 1, r.train_seconds});
    r.trace = {{"query", qp.query.to_json()},
               {"models", r.reused},
               {"shared_units", used},
               {"private_documents", priv.size()},
               {"merges", parts.size() - 1},
               {"materialized", r.materialized ? nlohmann::json(*r.materialized) : nlohmann::json(nullptr)}};
    per.push_back(r.trace);
    out.results.push_back(std::move(r));
  }
  out.optimized = true;
  out.seconds = total.seconds();

  nlohmann::json units_j = nlohmann::json::array();
  for (const auto& u : units)
    units_j.push_back({{"queries", u.queries}, {"documents", u.docs.size()}, {"train_ms", u.seconds * 1e3}});
  out.trace = comb.to_json(qs);
  out.trace["optimized"] = true;
  out.trace["warnings"] = nlohmann::json::array();
  out.trace["shared_units"] = units_j;
  out.trace["executions"] = per;
  out.trace["T_actual_seconds"] = out.seconds;
  out.trace["plan_seconds"] = plan_seconds;
  return out;
}

}  // namespace mlego::batch
