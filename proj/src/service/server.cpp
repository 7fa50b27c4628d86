#include "mlego/service/server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "mlego/batch/batch.hpp"
#include "mlego/common/error.hpp"
#include "mlego/corpus/ingest.hpp"
#include "mlego/service/requests.hpp"
#include "mlego/store/grid.hpp"

namespace mlego::service {

namespace {

using nlohmann::json;

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& msg) { reply(res, status, {{"error", msg}}); }

json body_json(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("request body is not JSON: ") + e.what());
  }
}

// Exceptions from a handler become status codes.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const InvalidArgument& e) {
      fail(res, 400, e.what());
    } catch (const NotFound& e) {
      fail(res, 404, e.what());
    } catch (const std::exception& e) {
      fail(res, 500, e.what());
    }
  };
}

}  // namespace

Service::Service(ServiceConfig cfg)
    : cfg_(std::move(cfg)), ws_(cfg_.data_dir), jobs_(cfg_.max_parallel_jobs), http_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() { stop(); }

bool Service::listen() { return http_->listen(cfg_.host, cfg_.port); }

int Service::start_background() {
  const int port = http_->bind_to_any_port("127.0.0.1");
  if (port < 0) throw Error("cannot bind a port");
  bg_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port;
}

void Service::stop() {
  if (http_) http_->stop();
  if (bg_.joinable()) bg_.join();
}

void Service::routes() {
  auto& s = *http_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get("/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });
  s.Get("/config", [this](const httplib::Request&, httplib::Response& res) { reply(res, 200, cfg_.to_json()); });

  s.Get("/datasets", guarded([this](const httplib::Request&, httplib::Response& res) {
          json out = json::array();
          for (const auto& name : ws_.dataset_names()) out.push_back(ws_.dataset(name)->manifest());
          reply(res, 200, out);
        }));

  s.Get(R"(/datasets/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          reply(res, 200, ws_.dataset(req.matches[1])->manifest());
        }));

  // Live document count for a predicate.
  s.Post(R"(/datasets/([^/]+)/count)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto ds = ws_.dataset(req.matches[1]);
           auto j = body_json(req);
           auto r = corpus::Region::from_json(j.value("predicate", json::object()));
           r.validate();
           ds->check_region(r);
           reply(res, 200, {{"count", ds->count_docs(r)}});
         }));

  // Document positions on two ordered dimensions for scatter views, evenly
  // subsampled to at most `limit` points.
  s.Get(R"(/datasets/([^/]+)/points)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          auto ds = ws_.dataset(req.matches[1]);
          const auto dims = ds->schema().ordered_dimensions();
          std::string x = req.has_param("x") ? req.get_param_value("x") : (dims.empty() ? "" : dims[0]);
          std::string y = req.has_param("y") ? req.get_param_value("y") : (dims.size() > 1 ? dims[1] : x);
          for (const auto& d : {x, y})
            if (!ds->schema().has_ordered(d)) throw InvalidArgument("'" + d + "' is not an ordered dimension");
          std::size_t limit = 2000;
          if (req.has_param("limit")) {
            try {
              limit = std::stoul(req.get_param_value("limit"));
            } catch (const std::exception&) {
              throw InvalidArgument("limit must be a positive integer");
            }
          }
          if (limit == 0) throw InvalidArgument("limit must be a positive integer");
          corpus::Region filter;
          if (req.has_param("predicate")) {
            try {
              filter = corpus::Region::from_json(json::parse(req.get_param_value("predicate")));
            } catch (const json::exception& e) {
              throw InvalidArgument(e.what());
            }
            filter.validate();
            ds->check_region(filter);
          }
          const auto docs = ds->select_docs(filter);
          const std::size_t step = std::max<std::size_t>(1, (docs.size() + limit - 1) / limit);
          json ids = json::array(), pts = json::array();
          for (std::size_t i = 0; i < docs.size(); i += step) {
            ids.push_back(ds->doc_id(docs[i]));
            pts.push_back({ds->ordered_value(x, docs[i]), ds->ordered_value(y, docs[i])});
          }
          reply(res, 200, {{"x", x}, {"y", y}, {"total", docs.size()}, {"doc_ids", ids}, {"points", pts}});
        }));

  s.Post("/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto j = body_json(req);
           const std::string name = j.value("name", "");
           check_dataset_name(name);
           if (ws_.has_dataset(name)) return fail(res, 409, "dataset '" + name + "' already exists");
           corpus::Schema schema;
           corpus::TokenizerConfig tok;
           try {
             schema = corpus::Schema::from_json(j.at("schema"));
             if (j.contains("tokenizer")) tok = corpus::TokenizerConfig::from_json(j.at("tokenizer"));
           } catch (const json::exception& e) {
             throw InvalidArgument(e.what());
           }
           const bool inline_content = j.contains("content");
           std::string source;
           corpus::SourceFormat fmt = corpus::SourceFormat::Csv;
           if (inline_content) {
             source = j.at("content").get<std::string>();
           } else if (j.contains("path")) {
             source = j.at("path").get<std::string>();
             if (!std::filesystem::exists(source)) throw InvalidArgument("no such file: " + source);
             fmt = corpus::guess_format(source);
           } else {
             throw InvalidArgument("give either 'content' or 'path'");
           }
           if (j.contains("format")) {
             const auto f = j.at("format").get<std::string>();
             if (f == "csv") fmt = corpus::SourceFormat::Csv;
             else if (f == "jsonl") fmt = corpus::SourceFormat::Jsonl;
             else throw InvalidArgument("format must be csv or jsonl");
           }
           auto id = jobs_.submit(JobKind::Ingest, [this, name, schema, tok, source, fmt, inline_content] {
             corpus::IngestReport report;
             std::istringstream text(inline_content ? source : std::string());
             std::ifstream file;
             if (!inline_content) file.open(source, std::ios::binary);
             std::istream& in = inline_content ? static_cast<std::istream&>(text) : file;
             auto ds = ws_.add_dataset(corpus::ingest(in, fmt, name, schema, tok, &report));
             return JobQueue::Output{{{"dataset", ds->manifest()},
                                      {"rows_read", report.rows_read},
                                      {"rows_skipped", report.rows_skipped},
                                      {"warnings", report.warnings}},
                                     nullptr};
           });
           reply(res, 202, {{"job_id", id}});
         }));

  s.Get("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const std::string want = req.has_param("dataset") ? req.get_param_value("dataset") : "";
          json out = json::array();
          for (const auto& r : ws_.catalog().snapshot()->records())
            if (want.empty() || r.dataset == want) out.push_back(r.to_json());
          reply(res, 200, out);
        }));

  // Materialize a grid of models over one ordered dimension.
  s.Post("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto j = body_json(req);
           auto ds = ws_.dataset(j.value("dataset", ""));
           const std::size_t parts = j.value("partitions", std::size_t{0});
           const std::string dim = j.value("dim", "id");
           auto cfg = j.contains("lda") ? lda::LdaConfig::from_json(j.at("lda"), cfg_.lda) : cfg_.lda;
           const auto algo = j.contains("algo") ? lda::parse_algo(j.at("algo").get<std::string>()) : cfg_.algo;
           (void)store::grid_regions(*ds, parts, dim);  // validate before queueing
           cfg.validate();
           auto id = jobs_.submit(JobKind::Materialize, [this, ds, parts, dim, cfg, algo] {
             auto ids = store::materialize_grid(*ds, ws_.catalog(), parts, dim, cfg, algo);
             return JobQueue::Output{{{"model_ids", ids}}, nullptr};
           });
           reply(res, 202, {{"job_id", id}});
         }));

  s.Post("/queries", guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto q = QueryRequest::from_json(body_json(req), cfg_);
           auto ds = ws_.dataset(q.dataset);
           ds->check_region(q.predicate);
           auto id = jobs_.submit(JobKind::Query, [this, ds, q] {
             auto r = planner::execute_query(*ds, ws_.catalog(), q.predicate, q.options);
             auto out = answer_json(*ds, r, cfg_.top_words);
             out["dataset"] = q.dataset;
             out["alpha"] = q.alpha;
             return JobQueue::Output{out, r.trace};
           });
           reply(res, 202, {{"job_id", id}});
         }));

  s.Post("/batches", guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto b = BatchRequest::from_json(body_json(req), cfg_);
           auto ds = ws_.dataset(b.dataset);
           for (const auto& q : b.queries) ds->check_region(q.region);
           auto id = jobs_.submit(JobKind::Batch, [this, ds, b] {
             auto r = batch::execute_batch(*ds, ws_.catalog(), b.queries, {b.options});
             json answers = json::array();
             for (const auto& q : r.results) answers.push_back(answer_json(*ds, q, cfg_.top_words));
             json out = {{"dataset", b.dataset},
                         {"optimized", r.optimized},
                         {"warnings", r.warnings},
                         {"results", answers},
                         {"T_actual_ms", r.seconds * 1e3}};
             for (const char* k : {"benefit", "T_predicted", "T_independent_predicted"})
               if (r.trace.contains(k)) out[k] = r.trace[k];
             return JobQueue::Output{out, r.trace};
           });
           reply(res, 202, {{"job_id", id}});
         }));

  s.Get("/jobs", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& j : jobs_.list()) {
      auto v = j.to_json();
      v.erase("result");
      out.push_back(v);
    }
    reply(res, 200, out);
  });

  s.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto j = jobs_.get(req.matches[1]);
    if (!j) return fail(res, 404, "unknown job");
    reply(res, 200, j->to_json());
  });

  s.Get(R"(/jobs/([^/]+)/trace)", [this](const httplib::Request& req, httplib::Response& res) {
    auto j = jobs_.get(req.matches[1]);
    if (!j) return fail(res, 404, "unknown job");
    if (!j->finished()) return fail(res, 409, "job has not finished");
    if (j->trace.is_null()) return fail(res, 404, "job has no trace");
    reply(res, 200, j->trace);
  });
}

}  // namespace mlego::service
