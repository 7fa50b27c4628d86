#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "mlego/common/error.hpp"
#include "mlego/corpus/synthetic.hpp"
#include "mlego/service/config.hpp"
#include "mlego/service/jobs.hpp"
#include "mlego/service/requests.hpp"
#include "mlego/service/server.hpp"
#include "mlego/store/grid.hpp"
#include "test_support.hpp"

using namespace mlego;
using namespace mlego::service;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

// Scoped environment variable.
struct EnvVar {
  std::string name;
  explicit EnvVar(std::string n, const std::string& value) : name(std::move(n)) { setenv(name.c_str(), value.c_str(), 1); }
  ~EnvVar() { unsetenv(name.c_str()); }
};

corpus::SyntheticConfig small_corpus() {
  corpus::SyntheticConfig sc;
  sc.num_docs = 300;
  sc.num_topics = 4;
  sc.vocab_size = 120;
  sc.mean_doc_length = 30;
  return sc;
}

struct Fixture {
  testing::TempDir dir{"svc"};
  std::unique_ptr<Service> svc;
  std::unique_ptr<httplib::Client> http;

  Fixture() {
    ServiceConfig cfg;
    cfg.data_dir = dir.path();
    cfg.lda.K = 4;
    cfg.lda.max_iters = 10;
    svc = std::make_unique<Service>(cfg);
    svc->workspace().add_dataset(corpus::generate_dataset(small_corpus(), "sample"));
    const int port = svc->start_background();
    http = std::make_unique<httplib::Client>("127.0.0.1", port);
    http->set_read_timeout(60, 0);
  }

  httplib::Result post(const std::string& path, const json& body) {
    return http->Post(path, body.dump(), "application/json");
  }

  // Polls a job until it finishes.
  json finish(const std::string& id) {
    for (int i = 0; i < 600; ++i) {
      auto r = http->Get("/jobs/" + id);
      REQUIRE(r);
      auto j = json::parse(r->body);
      if (j["state"] == "done" || j["state"] == "failed") return j;
      std::this_thread::sleep_for(50ms);
    }
    FAIL("job " << id << " did not finish");
    return {};
  }

  json submit(const std::string& path, const json& body) {
    auto r = post(path, body);
    REQUIRE(r);
    REQUIRE(r->status == 202);
    return finish(json::parse(r->body)["job_id"]);
  }
};

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("config: defaults, overrides, file and environment") {
    ServiceConfig d;
    CHECK(d.port == 8080);
    CHECK(d.max_parallel_jobs == 2);
    auto c = ServiceConfig::from_json({{"port", 9000}, {"lda", {{"K", 7}}}, {"algo", "cgs"}});
    CHECK(c.port == 9000);
    CHECK(c.lda.K == 7);
    CHECK(c.lda.max_iters == d.lda.max_iters);
    CHECK(c.algo == lda::Algo::Cgs);
    CHECK(ServiceConfig::from_json(c.to_json()).to_json() == c.to_json());
    CHECK_THROWS_AS(ServiceConfig::from_json({{"port", 70000}}), InvalidArgument);
    CHECK_THROWS_AS(ServiceConfig::from_json({{"max_parallel_jobs", 0}}), InvalidArgument);
    CHECK_THROWS_AS(ServiceConfig::from_json({{"lda", {{"K", 0}}}}), InvalidArgument);
    CHECK_THROWS_AS(ServiceConfig::from_json(json::array()), InvalidArgument);

    testing::TempDir dir("cfg");
    const auto a = dir.path() / "a.json", b = dir.path() / "b.json";
    std::ofstream(a) << R"({"port": 1111})";
    std::ofstream(b) << R"({"port": 2222})";
    CHECK(ServiceConfig::load(a).port == 1111);
    {
      EnvVar env("MLEGO_CONFIG", b.string());
      CHECK(ServiceConfig::load().port == 2222);
      CHECK(ServiceConfig::load(a).port == 1111);  // explicit path wins
    }
    CHECK_THROWS_AS(ServiceConfig::load(dir.path() / "missing.json"), NotFound);
  }

  TEST_CASE("job queue runs at most the configured number of jobs at once") {
    JobQueue q(2);
    std::atomic<int> live{0}, peak{0};
    std::vector<std::string> ids;
    for (int i = 0; i < 8; ++i)
      ids.push_back(q.submit(JobKind::Query, [&, i] {
        const int now = ++live;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        std::this_thread::sleep_for(20ms);
        --live;
        return JobQueue::Output{{{"i", i}}, nullptr};
      }));
    for (const auto& id : ids) REQUIRE(q.wait(id, 10s));
    CHECK(peak.load() == 2);
    CHECK(q.peak_running() == 2);
    for (int i = 0; i < 8; ++i) {
      auto j = q.get(ids[i]);
      REQUIRE(j);
      CHECK(j->state == JobState::Done);
      CHECK(j->result["i"] == i);
      CHECK(!j->started_at.empty());
      CHECK(!j->finished_at.empty());
    }
    CHECK(ids[0] == "job-000001");
    CHECK(q.list().size() == 8);
    CHECK_FALSE(q.get("job-999999"));
    CHECK_FALSE(q.wait("nope", 1ms));
  }

  TEST_CASE("failed jobs record the error and its status") {
    JobQueue q(1);
    auto bad = q.submit(JobKind::Query, []() -> JobQueue::Output { throw InvalidArgument("bad predicate"); });
    auto missing = q.submit(JobKind::Query, []() -> JobQueue::Output { throw NotFound("no dataset"); });
    auto boom = q.submit(JobKind::Query, []() -> JobQueue::Output { throw std::runtime_error("boom"); });
    for (const auto& id : {bad, missing, boom}) REQUIRE(q.wait(id, 5s));
    CHECK(q.get(bad)->state == JobState::Failed);
    CHECK(q.get(bad)->error == "bad predicate");
    CHECK(q.get(bad)->error_status == 400);
    CHECK(q.get(missing)->error_status == 404);
    CHECK(q.get(boom)->error_status == 500);
  }

  TEST_CASE("requests: validation") {
    ServiceConfig d;
    auto q = QueryRequest::from_json({{"dataset", "x"}, {"alpha", 0.2}, {"lda", {{"K", 3}}}}, d);
    CHECK(q.alpha == 0.2);
    CHECK(q.options.alpha == 0.2);
    CHECK(q.options.cfg.K == 3);
    CHECK(q.predicate.is_unconstrained());
    CHECK_THROWS_AS(QueryRequest::from_json({{"dataset", "x"}, {"alpha", 1.5}}, d), InvalidArgument);
    CHECK_THROWS_AS(QueryRequest::from_json({{"dataset", "x"}, {"alpha", "high"}}, d), InvalidArgument);
    CHECK_THROWS_AS(QueryRequest::from_json({{"alpha", 0.5}}, d), InvalidArgument);
    CHECK_THROWS_AS(QueryRequest::from_json({{"dataset", "x"}, {"predicate", {{"time", {{"range", {5, 1}}}}}}}, d),
                    InvalidArgument);
    auto b = BatchRequest::from_json(
        {{"dataset", "x"}, {"queries", {{{"alpha", 0.0}}, {{"alpha", 1.0}, {"predicate", {{"id", {{"range", {0, 9}}}}}}}}}}, d);
    CHECK(b.queries.size() == 2);
    CHECK(b.queries[1].alpha == 1.0);
    CHECK_THROWS_AS(BatchRequest::from_json({{"dataset", "x"}, {"queries", 3}}, d), InvalidArgument);
  }

  TEST_CASE("http: query lifecycle") {
    Fixture f;
    auto health = f.http->Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

    auto ds = f.http->Get("/datasets");
    REQUIRE(ds);
    CHECK(json::parse(ds->body).size() == 1);
    CHECK(f.http->Get("/datasets/sample")->status == 200);
    CHECK(f.http->Get("/datasets/nope")->status == 404);
    auto count = f.post("/datasets/sample/count", {{"predicate", {{"id", {{"range", {0, 100}}}}}}});
    REQUIRE(count);
    CHECK(json::parse(count->body)["count"] == 100);

    auto pts = f.http->Get("/datasets/sample/points?x=geo.lon&y=geo.lat&limit=50");
    REQUIRE(pts);
    REQUIRE(pts->status == 200);
    auto pj = json::parse(pts->body);
    CHECK(pj["total"] == 300);
    CHECK(pj["points"].size() == 50);
    CHECK(pj["points"][0].size() == 2);
    auto some = json::parse(
        f.http->Get("/datasets/sample/points?x=id&predicate=" + httplib::detail::encode_url(R"({"id":{"range":[0,10]}})"))
            ->body);
    CHECK(some["total"] == 10);
    CHECK(some["x"] == "id");
    CHECK(f.http->Get("/datasets/sample/points?x=colour")->status == 400);
    CHECK(f.http->Get("/datasets/sample/points?limit=0")->status == 400);

    auto accepted = f.post("/queries", {{"dataset", "sample"}, {"alpha", 0.5}});
    REQUIRE(accepted);
    CHECK(accepted->status == 202);
    const std::string id = json::parse(accepted->body)["job_id"];
    auto job = f.finish(id);
    REQUIRE(job["state"] == "done");
    const auto& res = job["result"];
    CHECK(res["K"] == 4);
    REQUIRE(res["topics"].size() == 4);
    for (const auto& t : res["topics"]) {
      REQUIRE(t["words"].size() == 10);
      for (std::size_t i = 1; i < 10; ++i) CHECK(t["words"][i]["weight"] <= t["words"][i - 1]["weight"]);
    }
    auto trace = f.http->Get("/jobs/" + id + "/trace");
    REQUIRE(trace);
    CHECK(trace->status == 200);
    auto tj = json::parse(trace->body);
    for (const char* k : {"query", "alpha", "candidates", "search", "uncovered", "timings_ms"}) CHECK(tj.contains(k));

    CHECK(f.post("/queries", {{"dataset", "sample"}, {"alpha", 1.5}})->status == 400);
    CHECK(f.post("/queries", {{"dataset", "nope"}, {"alpha", 0.5}})->status == 404);
    CHECK(f.post("/queries", {{"dataset", "sample"}, {"predicate", {{"colour", {{"in", {"red"}}}}}}})->status == 400);
    CHECK(f.http->Post("/queries", "{not json", "application/json")->status == 400);
    CHECK(f.http->Get("/jobs/job-999999")->status == 404);
    CHECK(f.http->Get("/jobs/job-999999/trace")->status == 404);
    CHECK(f.http->Options("/queries")->status == 204);
  }

  TEST_CASE("http: identical submissions give equal answers") {
    Fixture f;
    const json body{{"dataset", "sample"}, {"alpha", 0.0}, {"predicate", {{"id", {{"range", {20, 220}}}}}}};
    auto a = f.post("/queries", body), b = f.post("/queries", body);
    REQUIRE(a);
    REQUIRE(b);
    auto ja = f.finish(json::parse(a->body)["job_id"]), jb = f.finish(json::parse(b->body)["job_id"]);
    CHECK(ja["job_id"] != jb["job_id"]);
    CHECK(ja["result"]["payload_digest"] == jb["result"]["payload_digest"]);
  }

  TEST_CASE("http: models, batches and ingest") {
    Fixture f;
    auto m1 = f.submit("/models", {{"dataset", "sample"}, {"partitions", 1}});
    auto m2 = f.submit("/models", {{"dataset", "sample"}, {"partitions", 1}, {"dim", "time"}});
    CHECK(m1["state"] == "done");
    CHECK(m2["state"] == "done");
    auto models = json::parse(f.http->Get("/models?dataset=sample")->body);
    CHECK(models.size() == 2);
    CHECK(json::parse(f.http->Get("/models?dataset=other")->body).empty());
    CHECK(f.post("/models", {{"dataset", "sample"}, {"partitions", 0}})->status == 400);

    // Batch of one equals the single query.
    const json pred{{"id", {{"range", {0, 150}}}}};
    auto single = f.submit("/queries", {{"dataset", "sample"}, {"alpha", 0.0}, {"predicate", pred}});
    auto one = f.submit("/batches", {{"dataset", "sample"}, {"queries", {{{"alpha", 0.0}, {"predicate", pred}}}}});
    REQUIRE(one["state"] == "done");
    REQUIRE(one["result"]["results"].size() == 1);
    CHECK(one["result"]["results"][0]["payload_digest"] == single["result"]["payload_digest"]);

    auto mixed = f.submit("/batches", {{"dataset", "sample"},
                                       {"queries", {{{"alpha", 0.0}, {"predicate", pred}}, {{"alpha", 0.7}}}}});
    REQUIRE(mixed["state"] == "done");
    CHECK(mixed["result"]["optimized"] == false);
    CHECK(mixed["result"]["warnings"].size() == 1);
    CHECK(mixed["result"]["results"].size() == 2);

    auto trace = f.http->Get("/jobs/" + mixed["job_id"].get<std::string>() + "/trace");
    CHECK(trace->status == 200);

    // Ingest from inline CSV.
    std::ostringstream csv;
    auto sc = small_corpus();
    sc.num_docs = 40;
    corpus::write_synthetic_csv(sc, csv);
    const json req{{"name", "inline"}, {"content", csv.str()}, {"schema", corpus::synthetic_schema().to_json()}};
    auto ing = f.submit("/datasets", req);
    REQUIRE(ing["state"] == "done");
    CHECK(ing["result"]["rows_read"] == 40);
    CHECK(f.post("/datasets", req)->status == 409);
    CHECK(f.post("/datasets", {{"name", "../x"}, {"content", ""}, {"schema", json::object()}})->status == 400);
    CHECK(json::parse(f.http->Get("/datasets")->body).size() == 2);
    CHECK(json::parse(f.http->Get("/jobs")->body).size() == 6);
  }

  TEST_CASE("http: alpha changes the plan; a covered query returns fast") {
    Fixture f;
    REQUIRE(f.submit("/models", {{"dataset", "sample"}, {"partitions", 3}})["state"] == "done");
    const json pred{{"id", {{"range", {0, 300}}}}};
    auto fast = f.submit("/queries", {{"dataset", "sample"}, {"alpha", 0.0}, {"predicate", pred}});
    auto exact = f.submit("/queries", {{"dataset", "sample"}, {"alpha", 1.0}, {"predicate", pred}});
    REQUIRE(fast["state"] == "done");
    REQUIRE(exact["state"] == "done");
    // Time-first reuses the grid; loss-first trains from scratch.
    CHECK(fast["result"]["plan"]["models"].size() == 3);
    CHECK(exact["result"]["plan"]["models"].empty());

    // Three models tile the query: nothing left to train.
    const auto t0 = std::chrono::steady_clock::now();
    auto cached = f.submit("/queries", {{"dataset", "sample"}, {"alpha", 0.0}, {"predicate", pred}});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(cached["result"]["trained_documents"] == 0);
    CHECK(secs < 1.0);
  }

  TEST_CASE("workspace persists datasets and models") {
    testing::TempDir dir("ws");
    {
      Workspace ws(dir.path());
      auto ds = ws.add_dataset(corpus::generate_dataset(small_corpus(), "keep"));
      CHECK_THROWS_AS(ws.add_dataset(corpus::generate_dataset(small_corpus(), "keep")), InvalidArgument);
      lda::LdaConfig cfg;
      cfg.K = 3;
      cfg.max_iters = 5;
      store::materialize_grid(*ds, ws.catalog(), 2, "id", cfg, lda::Algo::Vb);
    }
    Workspace again(dir.path());
    CHECK(again.dataset_names() == std::vector<std::string>{"keep"});
    CHECK(again.dataset("keep")->num_docs() == 300);
    CHECK(again.catalog().size() == 2);
    CHECK_THROWS_AS(again.dataset("gone"), NotFound);
    CHECK_THROWS_AS(check_dataset_name("a b"), InvalidArgument);
    CHECK_NOTHROW(check_dataset_name("news_2024-v1"));
  }
}
