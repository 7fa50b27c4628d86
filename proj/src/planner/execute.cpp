#include "mlego/planner/execute.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mlego/common/error.hpp"
#include "mlego/common/timer.hpp"
#include "mlego/lda/train.hpp"
#include "mlego/merge/merge.hpp"

namespace mlego::planner {

namespace {

CostModel effective_cost(const corpus::Dataset& ds, const QueryOptions& opts) {
  CostModel c = opts.cost;
  c.K = opts.cfg.K;
  c.V = ds.vocab().size();
  c.iters = opts.cfg.max_iters;
  return c;
}

nlohmann::json ids_json(const std::vector<store::ModelId>& ids) { return ids; }

}  // namespace

Prepared prepare(const corpus::Dataset& ds, const store::CatalogSnapshot& snap, const corpus::Region& query,
                 const QueryOptions& opts) {
  query.validate();
  ds.check_region(query);
  const store::CandidateFilter filter{opts.algo, opts.cfg.K, opts.cfg.alpha, opts.cfg.eta, ds.vocab().hash()};
  auto split = snap.candidates(query, filter);

  Prepared out;
  for (const auto* r : split.partial)
    if (r->dataset == ds.name()) out.excluded_partial.push_back(r->id);

  // Models over the same region are interchangeable for the plan; keep the
  // least merged, then the oldest.
  std::map<corpus::Region, const store::ModelRecord*> by_region;
  for (const auto* r : split.contained) {
    if (r->dataset != ds.name()) continue;
    auto [it, fresh] = by_region.emplace(r->region, r);
    if (fresh) continue;
    auto rank = [](const store::ModelRecord* m) { return std::pair(m->merges, m->id); };
    if (rank(r) < rank(it->second)) {
      out.duplicates_dropped.push_back(it->second->id);
      it->second = r;
    } else {
      out.duplicates_dropped.push_back(r->id);
    }
  }
  for (const auto& [_, r] : by_region) out.candidates.push_back(r);
  std::sort(out.candidates.begin(), out.candidates.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::sort(out.duplicates_dropped.begin(), out.duplicates_dropped.end());

  std::vector<Problem::Candidate> models;
  std::vector<corpus::Region> regions;
  for (const auto* r : out.candidates) {
    models.push_back({r->id, r->num_docs});
    regions.push_back(r->region);
  }
  out.problem = Problem::from_regions(std::move(models), regions, ds.count_docs(query), effective_cost(ds, opts));
  return out;
}

Uncovered uncovered_part(const corpus::Dataset& ds, const corpus::Region& query,
                         const std::vector<corpus::Region>& covered) {
  Uncovered u;
  try {
    u.regions = corpus::region_difference(query, covered, ds.category_domains());
    u.docs = ds.select_docs(u.regions);
    return u;
  } catch (const InvalidArgument&) {
    // Too many ordered dimensions for the grid decomposition.
  }
  u.regions.clear();
  u.by_documents = true;
  for (auto d : ds.select_docs(query))
    if (std::none_of(covered.begin(), covered.end(), [&](const auto& c) { return ds.matches(c, d); }))
      u.docs.push_back(d);
  return u;
}

QueryResult execute_query(const corpus::Dataset& ds, store::Catalog& catalog, const corpus::Region& query,
                          const QueryOptions& opts) {
  opts.cfg.validate();
  if (!(opts.alpha >= 0 && opts.alpha <= 1)) throw InvalidArgument("alpha must lie in [0, 1]");
  Stopwatch total;
  auto snap = catalog.snapshot();
  auto prep = prepare(ds, *snap, query, opts);
  const auto& p = prep.problem;
  if (p.N_query == 0) throw InvalidArgument("query matches no documents");

  QueryResult out;
  Stopwatch sw;
  auto sr = search(p, opts.alpha, {opts.method, opts.max_trace});
  out.search_seconds = sw.seconds();
  out.plan = sr.best;

  std::vector<corpus::Region> covered;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (out.plan.mask & bit(i)) {
      out.reused.push_back(p.models[i].id);
      covered.push_back(prep.candidates[i]->region);
    }
  out.uncovered = uncovered_part(ds, query, covered);
  if (out.uncovered.docs.size() != out.plan.N_uncovered)
    throw CorruptData("catalog document counts disagree with the dataset");

  std::vector<lda::Payload> parts;
  for (auto id : out.reused) parts.push_back(snap->payload(id));
  // Documents that tokenized to nothing carry no evidence; skip them.
  if (auto slice = ds.slice(out.uncovered.docs); slice.total_tokens() > 0) {
    auto t = lda::train(slice, opts.cfg, opts.algo);
    out.train_seconds = t.seconds;
    parts.push_back(std::move(t.payload));
  }
  if (parts.empty()) throw InvalidArgument("query selects no tokens to model");
  sw.reset();
  out.model = merge::merge_models(parts, opts.cfg.eta, opts.decay, &out.payload);
  out.merge_seconds = sw.seconds();

  const bool same_as_reused = out.reused.size() == 1 && out.uncovered.docs.empty();
  if (opts.materialize && !same_as_reused)
    out.materialized = catalog.materialize(out.payload, query, {ds.name(), opts.cfg, out.plan.x, out.train_seconds});

  nlohmann::json cands = nlohmann::json::array();
  for (const auto* r : prep.candidates)
    cands.push_back({{"model_id", r->id}, {"N", r->num_docs}, {"region", r->region.to_json()}});
  nlohmann::json unc_regions = nlohmann::json::array();
  for (const auto& r : out.uncovered.regions) unc_regions.push_back(r.to_json());
  out.trace = {
      {"query", query.to_json()},
      {"alpha", opts.alpha},
      {"algo", lda::to_string(opts.algo)},
      {"N_query", p.N_query},
      {"cost_model", p.cost.to_json()},
      {"candidates", cands},
      {"excluded_partial", ids_json(prep.excluded_partial)},
      {"duplicates_dropped", ids_json(prep.duplicates_dropped)},
      {"search", sr.to_json(p)},
      {"uncovered", {{"regions", unc_regions}, {"by_documents", out.uncovered.by_documents},
                     {"documents", out.uncovered.docs.size()}}},
      {"materialized", out.materialized ? nlohmann::json(*out.materialized) : nlohmann::json(nullptr)},
      {"timings_ms", {{"search", out.search_seconds * 1e3}, {"train", out.train_seconds * 1e3},
                      {"merge", out.merge_seconds * 1e3}, {"total", total.millis()}}},
  };
  return out;
}

nlohmann::json Calibration::to_json() const {
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& pr : train_probes)
    probes.push_back({{"docs", pr.docs}, {"measured_s", pr.measured}, {"predicted_s", pr.predicted}});
  return {{"cost_model", cost.to_json()}, {"train_probes", probes}, {"merge_seconds", merge_seconds}};
}

Calibration calibrate(const corpus::Dataset& ds, const lda::LdaConfig& cfg, lda::Algo algo, std::size_t n,
                      CostModel base) {
  if (n == 0 || 2 * n > ds.num_docs()) throw InvalidArgument("calibration needs 2n documents");
  Calibration c;
  c.cost = base;
  c.cost.K = cfg.K;
  c.cost.V = ds.vocab().size();
  c.cost.iters = cfg.max_iters;

  double log_kappa = 0;
  std::vector<lda::Payload> payloads;
  const std::size_t sizes[] = {n, n + n / 2, 2 * n};
  for (std::size_t m : sizes) {
    std::vector<corpus::DocIndex> docs(m);
    for (std::size_t i = 0; i < m; ++i) docs[i] = static_cast<corpus::DocIndex>(i);
    auto t = lda::train(ds.slice(docs), cfg, algo);
    c.train_probes.push_back({m, t.seconds, 0});
    const double units = static_cast<double>(cfg.max_iters) * double(m) * double(m) * double(cfg.K);
    log_kappa += std::log(std::max(t.seconds, 1e-9) / units);
    payloads.push_back(std::move(t.payload));
  }
  c.cost.kappa_train = std::exp(log_kappa / 3);
  for (auto& pr : c.train_probes) pr.predicted = c.cost.cost_train(pr.docs);

  // A two-way merge is one merge; repeat until the timing is stable.
  Stopwatch sw;
  std::size_t reps = 0;
  do {
    std::span<const lda::Payload> two(payloads.data(), 2);
    (void)merge::merge_models(two, cfg.eta, 1.0);
    ++reps;
  } while (sw.seconds() < 0.05 && reps < 1000);
  c.merge_seconds = sw.seconds() / double(reps);
  c.cost.kappa_merge = c.merge_seconds / (double(cfg.K) * double(c.cost.V));
  return c;
}

}  // namespace mlego::planner
