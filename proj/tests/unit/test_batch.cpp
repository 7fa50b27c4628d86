#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mlego/batch/batch.hpp"
#include "mlego/common/error.hpp"
#include "mlego/corpus/synthetic.hpp"
#include "mlego/lda/train.hpp"

using namespace mlego;
using batch::Mask;

namespace {

constexpr int kLen = 120;

corpus::Region iv(double lo, double hi) {
  corpus::Region r;
  r.ranges["x"] = {lo, hi};
  return r;
}

// One document per integer point of [0, kLen).
batch::Geometry line_geometry(double kappa_merge = 1e-9) {
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
  g.cost.kappa_train = 1;  // c_t(n) = n^2
  g.cost.kappa_merge = kappa_merge;
  return g;
}

batch::QueryPlans make_query(int a, int b, const std::vector<std::pair<int, int>>& catalog, const batch::Geometry& g) {
  batch::QueryPlans qp;
  qp.query = iv(a, b);
  std::vector<planner::Problem::Candidate> c;
  std::uint64_t id = 1;
  for (auto [lo, hi] : catalog) {
    if (lo >= a && hi <= b) {
      c.push_back({id, static_cast<std::size_t>(hi - lo)});
      qp.regions.push_back(iv(lo, hi));
    }
    ++id;
  }
  qp.problem = planner::Problem::from_regions(c, qp.regions, static_cast<std::size_t>(b - a), g.cost);
  auto sr = planner::search(qp.problem, 0.0);
  qp.rl = sr.rl;
  qp.top1 = sr.best.mask;
  return qp;
}

std::vector<std::pair<int, int>> random_catalog(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> pos(0, kLen);
  std::vector<std::pair<int, int>> out;
  while (static_cast<int>(out.size()) < n) {
    int a = pos(rng), b = pos(rng);
    if (a == b) continue;
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  return out;
}

}  // namespace

TEST_SUITE("batch") {
  TEST_CASE("shared regions: disjoint, identical, grid-count oracle") {
    std::vector<std::vector<corpus::Region>> disjoint{{iv(0, 10)}, {iv(10, 20)}};
    CHECK(batch::shared_regions(disjoint).empty());

    std::vector<std::vector<corpus::Region>> same{{iv(0, 5), iv(8, 12)}, {iv(0, 5), iv(8, 12)}};
    auto s = batch::shared_regions(same);
    REQUIRE(!s.empty());
    for (const auto& f : s) CHECK(f.multiplicity == 2);

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pos(0, 40);
    for (int t = 0; t < 50; ++t) {
      std::vector<std::vector<corpus::Region>> three;
      std::vector<std::pair<int, int>> spans;
      for (int i = 0; i < 3; ++i) {
        int a = pos(rng), b = pos(rng);
        if (a == b) ++b;
        spans.emplace_back(std::min(a, b), std::max(a, b));
        three.push_back({iv(spans.back().first, spans.back().second)});
      }
      std::vector<int> want(41, 0), got(41, 0);
      for (int x = 0; x <= 40; ++x) {
        int k = 0;
        for (auto [a, b] : spans) k += (x >= a && x < b);
        want[x] = k >= 2 ? k : 0;
      }
      for (const auto& f : batch::shared_regions(three)) {
        CHECK(f.multiplicity >= 2);
        for (int x = 0; x <= 40; ++x)
          if (f.region.ranges.at("x").contains(x)) got[x] += f.multiplicity;
      }
      CHECK(got == want);
    }
  }

  TEST_CASE("benefit arithmetic") {
    auto g = line_geometry();
    CHECK(batch::benefit({}, g) == 0);
    std::vector<corpus::Fragment> one{{iv(0, 10), 3, {0, 1, 2}}};
    CHECK(batch::benefit(one, g) == 2 * 100.0);
  }

  TEST_CASE("model benefit") {
    auto g = line_geometry();
    std::vector<std::vector<corpus::Region>> others{{iv(50, 60)}, {iv(70, 80)}};
    CHECK(batch::model_benefit(iv(0, 10), others, g) == -100.0);

    std::vector<std::vector<corpus::Region>> around{{iv(0, 30)}, {iv(5, 20)}};
    CHECK(batch::model_benefit(iv(8, 18), around, g) == 2 * 100.0 - 100.0);

    // Overlap dr3 uncovered by both other plans: drop m3 iff 2 c(dr3) - c(m3) > 0.
    for (int w : {6, 7, 8, 10}) {
      std::vector<std::vector<corpus::Region>> o{{iv(0, w)}, {iv(0, w)}};
      const double db = batch::model_benefit(iv(0, 10), o, g);
      CHECK(db == 2.0 * w * w - 100.0);
      CHECK((db > 0) == (2 * g.train(iv(0, w)) - g.train(iv(0, 10)) > 0));
    }
  }

  TEST_CASE("layer cutoff factor") {
    CHECK(batch::layer_bound_factor(3, 5) == doctest::Approx(1.0 / 3));
    CHECK(batch::layer_bound_factor(5, 5) == 1.0);
    std::vector<double> lo{33.0, 10.0}, hi{34.0};
    CHECK(batch::layer_cutoff(100, lo, 3, 5));
    CHECK_FALSE(batch::layer_cutoff(100, hi, 3, 5));
    std::vector<double> last{99.0};
    CHECK(batch::layer_cutoff(100, last, 5, 5));
  }

  TEST_CASE("batch of one keeps the single-query plan") {
    auto g = line_geometry();
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
      auto cat = random_catalog(rng, 10);
      std::vector<batch::QueryPlans> qs{make_query(0, kLen, cat, g)};
      auto c = batch::optimize_batch(qs, g);
      CHECK(c.choices[0].mask == qs[0].top1);
      CHECK(c.benefit == 0);
      CHECK(c.shared.empty());
    }
  }

  TEST_CASE("optimized combination never worse than top-1") {
    auto g = line_geometry(0.5);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pos(0, kLen);
    int improved = 0;
    for (int t = 0; t < 60; ++t) {
      auto cat = random_catalog(rng, 12);
      std::vector<batch::QueryPlans> qs;
      for (int i = 0; i < 3; ++i) {
        int a = pos(rng) / 2, b = kLen / 2 + pos(rng) / 2;
        if (a == b) ++b;
        qs.push_back(make_query(a, b, cat, g));
      }
      auto c = batch::optimize_batch(qs, g);
      CHECK(c.benefit >= c.benefit_top1 - 1e-9);
      CHECK(c.T <= c.T_top1 + 1e-9);
      CHECK(c.T <= c.T_independent + 1e-9);
      // Ledger agrees with a recomputation from scratch.
      std::vector<Mask> chosen;
      for (const auto& ch : c.choices) chosen.push_back(ch.mask);
      batch::Evaluator ev(qs, g);
      CHECK(ev.benefit(chosen) == doctest::Approx(c.benefit).epsilon(1e-12));
      for (const auto& f : c.shared) CHECK(f.multiplicity >= 2);
      if (c.T < c.T_top1) ++improved;
    }
    MESSAGE("heuristic lowered T on " << improved << " of 60 batches");
  }

  TEST_CASE("dropping a model that others need uncovered pays") {
    auto g = line_geometry(0.5);
    // m = [40, 100) only fits the last query; five others need [41, 120).
    std::vector<std::pair<int, int>> cat{{40, 100}};
    std::vector<batch::QueryPlans> qs;
    for (int i = 0; i < 5; ++i) qs.push_back(make_query(41, 120, cat, g));
    qs.push_back(make_query(30, 100, cat, g));
    REQUIRE(qs.back().top1 == 1);
    auto c = batch::optimize_batch(qs, g);
    CHECK(c.choices.back().changed);
    CHECK(c.choices.back().mask == 0);
    REQUIRE(c.choices.back().removed.size() == 1);
    CHECK(c.choices.back().removed[0].delta_b == doctest::Approx(5 * 59.0 * 59 - 3600));
    CHECK(c.T < c.T_top1);
    CHECK(c.benefit > c.benefit_top1);
  }

  TEST_CASE("nested batches: benefit grows") {
    // Holds for a measure additive over fragments; the quadratic train
    // cost is not (splitting a fragment lowers the sum).
    auto g = line_geometry();
    g.measure = batch::Geometry::Measure::Documents;
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> pos(0, kLen);
    for (int t = 0; t < 30; ++t) {
      auto cat = random_catalog(rng, 8);
      std::vector<batch::QueryPlans> qs;
      for (int i = 0; i < 4; ++i) {
        int a = pos(rng) / 2, b = kLen / 2 + pos(rng) / 2;
        if (a == b) ++b;
        qs.push_back(make_query(a, b, cat, g));
      }
      double prev = 0;
      for (std::size_t k = 1; k <= qs.size(); ++k) {
        std::span<const batch::QueryPlans> sub(qs.data(), k);
        std::vector<Mask> plans;
        for (const auto& q : sub) plans.push_back(q.top1);
        const double b = batch::Evaluator(sub, g).benefit(plans);
        CHECK(b >= prev - 1e-9);
        prev = b;
      }
    }
  }

  TEST_CASE("layered search: nothing better after the cutoff") {
    auto g = line_geometry(0.5);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> pos(0, kLen);
    int fired = 0;
    for (int t = 0; t < 60; ++t) {
      auto cat = random_catalog(rng, 10);
      std::vector<batch::QueryPlans> qs;
      for (int i = 0; i < 3; ++i) {
        int a = pos(rng) / 2, b = kLen / 2 + pos(rng) / 2;
        qs.push_back(make_query(a, std::max(b, a + 1), cat, g));
      }
      std::vector<Mask> cur;
      for (const auto& q : qs) cur.push_back(q.top1);
      auto r = batch::layered_search(qs, 2, cur, g);
      if (!r.cutoff_layer) continue;
      ++fired;
      for (std::size_t j = *r.cutoff_layer; j <= r.layers.size(); ++j)
        for (const auto& [m, v] : r.layers[j - 1]) CHECK(v <= r.best_value + 1e-9);
    }
    MESSAGE("cutoff fired on " << fired << " of 60 instances");
  }

  TEST_CASE("execute batch on a dataset") {
    corpus::SyntheticConfig sc;
    sc.num_docs = 400;
    sc.num_topics = 4;
    sc.vocab_size = 80;
    sc.mean_doc_length = 30;
    const auto ds = corpus::generate_dataset(sc, "b");
    auto when = [&](std::size_t a, std::size_t b) {
      corpus::Region r;
      r.ranges["time"] = {double(sc.time_start + std::int64_t(a) * sc.time_step),
                          double(sc.time_start + std::int64_t(b) * sc.time_step)};
      return r;
    };
    batch::BatchOptions o;
    o.query.cfg.K = 4;
    o.query.cfg.max_iters = 10;
    store::Catalog cat;
    {
      std::vector<corpus::DocIndex> d;
      for (corpus::DocIndex i = 0; i < 100; ++i) d.push_back(i);
      auto t = lda::train(ds.slice(d), o.query.cfg, o.query.algo);
      cat.materialize(t.payload, when(0, 100), {"b", o.query.cfg, 0, t.seconds});
    }
    std::vector<batch::BatchQuery> qs{{when(0, 300), 0}, {when(0, 300), 0}, {when(250, 350), 0}};
    auto r = batch::execute_batch(ds, cat, qs, o);
    CHECK(r.optimized);
    REQUIRE(r.results.size() == 3);
    CHECK(r.trace["benefit"].get<double>() > 0);
    CHECK(r.trace["shared_fragments"].size() >= 1);
    CHECK(r.trace["T_predicted"].get<double>() < r.trace["T_independent_predicted"].get<double>());
    // Identical queries with identical plans get identical answers.
    CHECK(r.results[0].model.phi == r.results[1].model.phi);
    for (const auto& q : r.results) CHECK(q.model.K() == 4);

    std::vector<batch::BatchQuery> mixed{{when(0, 100), 0}, {when(0, 100), 0.5}};
    auto m = batch::execute_batch(ds, cat, mixed, o);
    CHECK_FALSE(m.optimized);
    CHECK(m.warnings.size() == 1);
    CHECK(m.results.size() == 2);

    CHECK(batch::execute_batch(ds, cat, {}, o).results.empty());
    std::vector<batch::BatchQuery> bad{{when(0, 100), 2.0}};
    CHECK_THROWS_AS(batch::execute_batch(ds, cat, bad, o), InvalidArgument);
  }
}
