// Acceptance checks: one PASS/FAIL line per criterion. Exit status is 0 when
// every criterion ran to a verdict; --strict also fails on any FAIL.
#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "mlego/batch/batch.hpp"
#include "mlego/bench/bench.hpp"
#include "mlego/common/rng.hpp"
#include "mlego/common/timer.hpp"
#include "mlego/corpus/synthetic.hpp"
#include "mlego/lda/eval.hpp"
#include "mlego/lda/train.hpp"
#include "mlego/merge/merge.hpp"
#include "mlego/planner/execute.hpp"
#include "mlego/planner/search.hpp"
#include "mlego/store/grid.hpp"
#include "test_support.hpp"

using namespace mlego;
using planner::bit;
using planner::Mask;
using planner::Problem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ---- planner oracles ------------------------------------------------------

struct Span1 {
  int lo, hi;
};

Problem random_problem(std::mt19937_64& rng, std::size_t n, std::vector<Span1>* out_spans = nullptr) {
  const int len = 200;
  std::uniform_int_distribution<int> pos(0, len - 1);
  std::vector<Span1> spans;
  while (spans.size() < n) {
    int a = pos(rng), b = pos(rng);
    if (a == b) continue;
    spans.push_back({std::min(a, b), std::max(a, b)});
  }
  Problem p;
  p.N_query = len;
  for (std::size_t i = 0; i < n; ++i) p.models.push_back({10 + i, static_cast<std::size_t>(spans[i].hi - spans[i].lo)});
  p.conflicts.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && spans[i].lo < spans[j].hi && spans[j].lo < spans[i].hi) p.conflicts[i] |= bit(j);
  std::uniform_real_distribution<double> u(0, 1);
  p.cost.iters = 10;
  p.cost.K = 10;
  p.cost.V = 100;
  p.cost.kappa_train = std::pow(10.0, -7 + 2 * u(rng));
  p.cost.kappa_merge = std::pow(10.0, -9 + 6 * u(rng));
  p.cost.loss_gamma = 0.5 + 0.49 * u(rng);
  if (out_spans) *out_spans = spans;
  return p;
}

bool independent(const Problem& p, Mask m) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if ((m & bit(i)) && (p.conflicts[i] & m)) return false;
  return true;
}

// Score from the definitions: loss 1 - gamma^x, train cost quadratic in the
// uncovered count, x merges, normalised by training the whole query.
double oracle_sc(const Problem& p, Mask m, double alpha) {
  long cov = 0, k = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (m & bit(i)) {
      cov += static_cast<long>(p.models[i].N);
      ++k;
    }
  const long unc = static_cast<long>(p.N_query) - cov;
  const long x = std::max(0L, k - 1 + (unc > 0 ? 1 : 0));
  const double lp = 1 - std::pow(p.cost.loss_gamma, double(x));
  auto train = [&](long n) { return p.cost.kappa_train * p.cost.iters * double(n) * double(n) * p.cost.K; };
  const double norm = train(static_cast<long>(p.N_query));
  const double c = std::clamp((train(unc) + p.cost.kappa_merge * double(p.cost.K * p.cost.V) * double(x)) / norm, 0.0, 1.0);
  return alpha * lp + (1 - alpha) * c + 1e-9;
}

Verdict planner_optimality() {
  std::mt19937_64 rng(2024);
  Stopwatch sw;
  int bad = 0, runs = 0;
  for (int t = 0; t < 200; ++t) {
    auto p = random_problem(rng, 1 + t % 12);
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      double best = INFINITY;
      for (Mask m = 0; m < (Mask{1} << p.size()); ++m)
        if (independent(p, m)) best = std::min(best, oracle_sc(p, m, alpha));
      for (auto method : {planner::Method::Auto, planner::Method::Psoa, planner::Method::PsoaPlusPlus}) {
        auto r = planner::search(p, alpha, {method});
        ++runs;
        if (std::abs(r.best.sc - best) > 1e-9) ++bad;
      }
    }
  }
  const double s = sw.seconds();
  std::ostringstream d;
  d << runs << " searches, " << bad << " off the exhaustive optimum, " << s << " s";
  return {bad == 0 && s < 60, d.str()};
}

Verdict rl_closure() {
  std::mt19937_64 rng(2024);
  std::size_t plans = 0, violations = 0;
  for (int t = 0; t < 200; ++t) {
    auto p = random_problem(rng, 1 + t % 12);
    const auto rl = planner::rl_plans(p);
    for (Mask m = 0; m < (Mask{1} << p.size()); ++m) {
      if (!independent(p, m)) continue;
      ++plans;
      if (!std::any_of(rl.begin(), rl.end(), [&](Mask r) { return (m & ~r) == 0; })) ++violations;
    }
  }
  std::ostringstream d;
  d << plans << " valid plans, " << violations << " outside every RL plan";
  return {violations == 0, d.str()};
}

Verdict push_down_order() {
  std::mt19937_64 rng(99);
  std::size_t violations = 0, emitted = 0;
  for (int t = 0; t < 100; ++t) {
    auto p = random_problem(rng, 2 + t % 13);
    const auto order = planner::train_list(p, planner::rl_plans(p));
    double prev = -1;
    for (Mask m : order.plans) {
      const double c = p.cost.cost_train(p.N_query - p.covered(m));
      if (c < prev) ++violations;
      prev = c;
      ++emitted;
    }
  }
  // p1 = {3000, 200} + {2200}: dropping the 200-doc member leaves 5200 >= 4700.
  const auto pd = planner::push_down({{0b0011, 5400, 200}, {0b1100, 4700, 1500}});
  const bool example = pd.kept.size() == 1 && pd.kept[0].N == 5400 && pd.demoted.size() == 1 && pd.demoted[0].N == 4700;
  std::ostringstream d;
  d << emitted << " plans over 100 trees, " << violations << " order violations; worked example "
    << (example ? "demotes p2" : "WRONG");
  return {violations == 0 && example, d.str()};
}

Verdict psoa_speedup() {
  bench::PlanSearchOptions o;
  o.models = {20, 24};
  o.trials = 3;
  o.seed = 5;
  auto r = bench::bench_plansearch(o);  // throws if any method disagrees with NAI
  bool ok = true;
  std::ostringstream d;
  for (std::size_t m : o.models) {
    const auto* nai = r.find("NAI", m);
    const auto* psoa = r.find("PSOA", m);
    const double ratio = psoa->mean_ms / nai->mean_ms;
    ok = ok && ratio < 0.10;
    d << "m=" << m << " PSOA/NAI=" << ratio << "; ";
  }
  // PSOA++ against PSOA whenever the fusion flag fires.
  std::size_t fused = 0, differ = 0;
  for (std::size_t m : {20, 24})
    for (std::size_t t = 0; t < 10; ++t) {
      const auto p = bench::synthetic_catalog(m, derive_seed(77, m * 100 + t));
      const auto a = planner::search(p, 0.0, {planner::Method::Psoa});
      const auto b = planner::search(p, 0.0, {planner::Method::PsoaPlusPlus});
      if (!b.fused) continue;
      ++fused;
      differ += a.best.mask != b.best.mask;
    }
  d << "PSOA++ fused on " << fused << " of 20, " << differ << " differing from PSOA";
  return {ok && differ == 0, d.str()};
}

// ---- merge ----------------------------------------------------------------

lda::Payload random_payload(lda::Algo algo, std::size_t K, std::size_t V, std::size_t N, unsigned seed, double eta) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  lda::Payload p;
  p.algo = algo;
  p.params = Matrix(K, V);
  for (auto& x : p.params.values()) x = algo == lda::Algo::Vb ? eta + u(g) : std::floor(u(g) * 3);
  p.num_docs = N;
  p.vocab_hash = 1;
  return p;
}

Verdict merge_exactness() {
  const double eta = 0.01;
  double vb_err = 0, cgs_err = 0;
  bool identities = true;
  for (unsigned t = 0; t < 50; ++t) {
    std::vector<lda::Payload> vb, cgs;
    const std::size_t n = 1 + t % 6;
    for (unsigned i = 0; i < n; ++i) {
      vb.push_back(random_payload(lda::Algo::Vb, 5, 11, 10 + 37 * i + t, 100 * t + i, eta));
      cgs.push_back(random_payload(lda::Algo::Cgs, 5, 11, 10 + 37 * i + t, 100 * t + i + 50, eta));
    }
    std::size_t Nmax = 0;
    for (const auto& p : vb) Nmax = std::max(Nmax, p.num_docs);
    const auto mv = merge::merge_vb(vb, eta);
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t v = 0; v < 11; ++v) {
        double s = eta;
        for (const auto& p : vb) s += double(p.num_docs) / double(Nmax) * (p.params(k, v) - eta);
        vb_err = std::max(vb_err, std::abs(mv.params(k, v) - s));
      }
    double total_in = 0, total_out = 0;
    for (const auto& p : cgs)
      for (double x : p.params.values()) total_in += x;
    const auto mc = merge::merge_cgs(cgs, eta, 1.0);
    for (double x : mc.payload.params.values()) total_out += x;
    cgs_err = std::max(cgs_err, std::abs(total_in - total_out));
    if (n == 1) {
      identities = identities && std::memcmp(mv.params.data(), vb[0].params.data(), 55 * sizeof(double)) == 0;
      identities = identities && std::memcmp(mc.payload.params.data(), cgs[0].params.data(), 55 * sizeof(double)) == 0;
    }
  }
  std::ostringstream d;
  d << "vb max err " << vb_err << ", cgs count drift " << cgs_err << ", identities " << (identities ? "exact" : "NOT exact");
  return {vb_err <= 1e-12 && cgs_err <= 1e-6 && identities, d.str()};
}

Verdict merge_quality() {
  corpus::SyntheticConfig sc;
  sc.num_docs = 5000;
  sc.seed = 11;
  const auto ds = corpus::generate_dataset(sc, "quality");
  bench::MergeBenchOptions o;
  o.cfg.K = 20;
  o.cfg.max_iters = 50;
  o.n_max = 10;
  o.seed = 11;
  Stopwatch sw;
  const auto r = bench::bench_merge(ds, o);  // throws unless x = 1 reproduces ORIG
  const double s = sw.seconds();
  const double rho_vb = r.spearman_dp(lda::Algo::Vb), rho_cgs = r.spearman_dp(lda::Algo::Cgs);
  const bool dp0 = r.dp(lda::Algo::Vb)[0] == 0 && r.dp(lda::Algo::Cgs)[0] == 0;
  const std::size_t cgs_wins = r.cgs_not_worse();
  std::ostringstream d;
  d << "rho vb=" << rho_vb << " cgs=" << rho_cgs << ", DP(x=1)=0 " << (dp0 ? "yes" : "no") << ", CGS<=VB on "
    << cgs_wins << "/10, " << s << " s";
  return {rho_vb > 0.6 && rho_cgs > 0.6 && dp0 && cgs_wins >= 7 && s < 1800, d.str()};
}

// ---- coverage ---------------------------------------------------------------

Verdict coverage_trend() {
  corpus::SyntheticConfig sc;
  sc.num_docs = 3000;
  sc.seed = 3;
  const auto ds = corpus::generate_dataset(sc, "coverage");
  bench::CoverageOptions o;
  o.cfg.K = 20;
  o.cfg.max_iters = 50;
  o.repeats = 2;
  const auto r = bench::bench_coverage(ds, o);
  bool monotone = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    d << int(r.rows[i].ratio * 100) << "%:" << r.rows[i].sr << " ";
    if (i && r.rows[i].sr < r.rows[i - 1].sr) monotone = false;
  }
  const double gain = r.rows.back().sr / r.rows.front().sr;
  d << "; SR(100)/SR(0)=" << gain;
  return {monotone && gain >= 100, d.str()};
}

// ---- batch ------------------------------------------------------------------

constexpr int kLen = 120;

corpus::Region iv(double lo, double hi) {
  corpus::Region r;
  r.ranges["x"] = {lo, hi};
  return r;
}

batch::Geometry line_geometry() {
  batch::Geometry g;
  g.count = [](const corpus::Region& r) -> std::size_t {
    auto it = r.ranges.find("x");
    double lo = 0, hi = kLen;
    if (it != r.ranges.end()) {
      lo = std::max(lo, std::ceil(it->second.lo));
      hi = std::min(hi, std::ceil(it->second.hi));
    }
    return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
  };
  g.cost.iters = 1;
  g.cost.K = 1;
  g.cost.V = 1;
  g.cost.kappa_train = 1;
  g.cost.kappa_merge = 0.5;
  return g;
}

batch::QueryPlans line_query(int a, int b, const std::vector<std::pair<int, int>>& cat, const batch::Geometry& g) {
  batch::QueryPlans qp;
  qp.query = iv(a, b);
  std::vector<Problem::Candidate> c;
  std::uint64_t id = 1;
  for (auto [lo, hi] : cat) {
    if (lo >= a && hi <= b) {
      c.push_back({id, static_cast<std::size_t>(hi - lo)});
      qp.regions.push_back(iv(lo, hi));
    }
    ++id;
  }
  qp.problem = Problem::from_regions(c, qp.regions, static_cast<std::size_t>(b - a), g.cost);
  auto sr = planner::search(qp.problem, 0.0);
  qp.rl = sr.rl;
  qp.top1 = sr.best.mask;
  return qp;
}

Verdict batch_optimization() {
  corpus::SyntheticConfig sc;
  sc.num_docs = 3000;
  sc.seed = 21;
  const auto ds = corpus::generate_dataset(sc, "batch");
  batch::BatchOptions o;
  o.query.cfg.K = 10;
  o.query.cfg.max_iters = 30;
  o.query.algo = lda::Algo::Cgs;  // fixed sweep count keeps timings proportional to work
  store::Catalog cat;
  store::materialize_grid(ds, cat, 6, "time", o.query.cfg, o.query.algo);
  auto when = [&](double a, double b) {
    corpus::Region r;
    r.ranges["time"] = {double(sc.time_start) + a * double(sc.time_step), double(sc.time_start) + b * double(sc.time_step)};
    return r;
  };

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> center(600, 2400), half(200, 700);
  int benefit_bad = 0, shared_batches = 0, faster = 0;
  for (int t = 0; t < 50; ++t) {
    const int c = center(rng);
    std::vector<batch::BatchQuery> qs;
    for (int i = 0; i < 3; ++i) qs.push_back({when(std::max(0, c - half(rng)), std::min(3000, c + half(rng))), 0.0});
    auto r = batch::execute_batch(ds, cat, qs, o);
    if (r.trace["benefit"].get<double>() < r.trace["benefit_top1"].get<double>() - 1e-9) ++benefit_bad;
    if (r.trace["shared_fragments"].empty()) continue;
    ++shared_batches;
    double independent = 0;
    for (const auto& q : qs) {
      planner::QueryOptions qo = o.query;
      qo.alpha = q.alpha;
      Stopwatch sw;
      planner::execute_query(ds, cat, q.region, qo);
      independent += sw.seconds();
    }
    faster += r.seconds < independent;
  }

  // Layer cutoff against exhaustive enumeration on small catalogs.
  const auto g = line_geometry();
  std::uniform_int_distribution<int> pos(0, kLen);
  int cut_bad = 0, fired = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<int, int>> catalog;
    while (catalog.size() < 10) {
      int a = pos(rng), b = pos(rng);
      if (a != b) catalog.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::vector<batch::QueryPlans> plans;
    for (int i = 0; i < 3; ++i) {
      const int a = pos(rng) / 2, b = kLen / 2 + pos(rng) / 2;
      plans.push_back(line_query(a, std::max(b, a + 1), catalog, g));
    }
    std::vector<Mask> cur;
    for (const auto& q : plans) cur.push_back(q.top1);
    for (std::size_t q = 0; q < plans.size(); ++q) {
      const auto lr = batch::layered_search(plans, q, cur, g);
      if (!lr.cutoff_layer) continue;
      ++fired;
      batch::Evaluator ev(plans, g);
      const auto& p = plans[q].problem;
      auto unc = [&](Mask m) { return p.cost.cost_train(p.N_query - p.covered(m)); };
      double best = -INFINITY;
      for (Mask m : planner::all_valid_plans(p)) {
        auto with = cur;
        with[q] = m;
        best = std::max(best, ev.benefit(with) - (unc(m) - unc(plans[q].top1)));
      }
      if (best > lr.best_value + 1e-9) ++cut_bad;
    }
  }

  std::ostringstream d;
  d << "benefit below top-1 in " << benefit_bad << "/50; faster than independent in " << faster << "/" << shared_batches
    << " batches with shared regions; cutoff fired " << fired << " times, " << cut_bad << " missed a better plan";
  return {benefit_bad == 0 && faster == shared_batches && shared_batches > 0 && cut_bad == 0, d.str()};
}

// ---- lpp, determinism ---------------------------------------------------------

Verdict lpp_correctness() {
  const std::size_t V = 53;
  lda::TopicModel uni;
  uni.phi = Matrix(6, V, 1.0 / V);
  auto held = testing::owned({{1, 2, 3, 4, 5, 6, 7}, {8, 9, 52, 52}, {0, 11}}, V);
  const double e1 = std::abs(lda::lpp(uni, held.slice(), 0.1, 1).lpp + std::log(double(V)));

  lda::TopicModel one;
  one.phi = Matrix(1, 6);
  const double row[6] = {0.05, 0.1, 0.15, 0.2, 0.22, 0.28};
  for (int v = 0; v < 6; ++v) one.phi(0, v) = row[v];
  auto h2 = testing::owned({{0, 1, 2, 3, 4, 5}, {5, 5, 1}, {2, 4, 0, 0}}, 6);
  double direct = 0;
  int n = 0;
  for (const auto& d : h2.docs)
    for (std::size_t i = d.size() / 2; i < d.size(); ++i, ++n) direct += std::log(row[d[i]]);
  const double e2 = std::abs(lda::lpp(one, h2.slice(), 0.1, 1).lpp - direct / n);
  std::ostringstream d;
  d << "uniform err " << e1 << ", K=1 err " << e2;
  return {e1 <= 1e-12 && e2 <= 1e-12, d.str()};
}

Verdict determinism() {
  corpus::SyntheticConfig sc;
  sc.num_docs = 800;
  const auto ds = corpus::generate_dataset(sc, "det");
  std::ostringstream d;
  bool ok = true;
  for (auto algo : {lda::Algo::Vb, lda::Algo::Cgs}) {
    planner::QueryOptions o;
    o.cfg.K = 8;
    o.cfg.max_iters = 20;
    o.algo = algo;
    o.alpha = 0.3;
    std::uint64_t digest[2];
    for (int run = 0; run < 2; ++run) {
      store::Catalog cat;
      store::materialize_grid(ds, cat, 5, "id", o.cfg, algo);
      corpus::Region q;
      q.ranges["id"] = {50, 700};
      digest[run] = planner::execute_query(ds, cat, q, o).payload.digest();
    }
    ok = ok && digest[0] == digest[1];
    d << lda::to_string(algo) << " " << std::hex << digest[0] << (digest[0] == digest[1] ? " == " : " != ") << digest[1]
      << std::dec << "; ";
  }
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"planner optimality", planner_optimality},
      {"RL closure", rl_closure},
      {"push-down ordering", push_down_order},
      {"PSOA speedup", psoa_speedup},
      {"merge exactness", merge_exactness},
      {"merge quality", merge_quality},
      {"coverage trend", coverage_trend},
      {"batch optimization", batch_optimization},
      {"lpp correctness", lpp_correctness},
      {"determinism", determinism},
  };
  int failed = 0, errors = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << name << "  (" << v.detail << ")" << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria pass" << std::endl;
  if (errors) return 2;
  return strict && failed ? 1 : 0;
}
