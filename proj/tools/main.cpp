// mlego command-line driver.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlego/batch/batch.hpp"
#include "mlego/bench/bench.hpp"
#include "mlego/common/error.hpp"
#include "mlego/corpus/ingest.hpp"
#include "mlego/corpus/synthetic.hpp"
#include "mlego/lda/train.hpp"
#include "mlego/planner/execute.hpp"
#include "mlego/service/config.hpp"
#include "mlego/service/requests.hpp"
#include "mlego/service/server.hpp"
#include "mlego/service/workspace.hpp"
#include "mlego/store/grid.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace mlego;

namespace {

json read_json_arg(const std::string& text) {
  if (!text.empty() && (text[0] == '{' || text[0] == '[')) return json::parse(text);
  std::ifstream in(text);
  if (!in) throw NotFound("cannot open " + text);
  return json::parse(in);
}

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream(out) << j.dump(2) << "\n";
}

// A workspace dataset, or a synthetic one when the name is "synthetic:<docs>".
std::shared_ptr<const corpus::Dataset> open_dataset(service::Workspace& ws, const std::string& name, std::uint64_t seed) {
  if (name.rfind("synthetic:", 0) == 0) {
    corpus::SyntheticConfig sc;
    sc.num_docs = std::stoul(name.substr(10));
    sc.seed = seed;
    return std::make_shared<const corpus::Dataset>(corpus::generate_dataset(sc, "synthetic"));
  }
  return ws.dataset(name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mlego: reuse and merge materialized LDA models"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> data_dir;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed_flag, "Random seed");
  app.add_option("--data-dir", data_dir, "Workspace directory");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a CSV or JSON-lines file as a dataset");
  std::string in_path, in_name, in_schema, in_tokenizer;
  bool in_sample = false;
  std::size_t sample_docs = 1000;
  ingest->add_option("path", in_path, "Source file (omit with --synthetic)");
  ingest->add_option("--name", in_name, "Dataset name")->required();
  ingest->add_option("--schema", in_schema, "Schema JSON file or literal");
  ingest->add_option("--tokenizer", in_tokenizer, "Tokenizer JSON file or literal");
  ingest->add_flag("--synthetic", in_sample, "Generate a synthetic corpus instead of reading a file");
  ingest->add_option("--docs", sample_docs, "Synthetic document count");

  // train
  auto* train = app.add_subcommand("train", "Train one model on a region and optionally store it");
  std::string tr_dataset, tr_region = "{}", tr_out;
  bool tr_store = false;
  train->add_option("--dataset", tr_dataset)->required();
  train->add_option("--region", tr_region, "Region JSON file or literal");
  train->add_flag("--materialize", tr_store, "Store the model in the catalog");
  train->add_option("--out", tr_out, "Write the summary here instead of stdout");

  // materialize-grid
  auto* grid = app.add_subcommand("materialize-grid", "Slice a dimension into n parts and train each");
  std::string gr_dataset, gr_dim = "id";
  int gr_parts = 0;
  grid->add_option("--dataset", gr_dataset)->required();
  grid->add_option("-n,--partitions", gr_parts)->required();
  grid->add_option("--dim", gr_dim, "Ordered dimension to slice");

  // query
  auto* query = app.add_subcommand("query", "Answer one query from stored models");
  std::string q_request, q_out, q_trace;
  query->add_option("request", q_request, "Query request JSON file or literal")->required();
  query->add_option("--out", q_out);
  query->add_option("--trace", q_trace, "Write the plan trace to this file");

  // batch
  auto* batchc = app.add_subcommand("batch", "Answer a batch of queries with shared training");
  std::string b_request, b_out, b_trace;
  batchc->add_option("request", b_request, "Batch request JSON file or literal")->required();
  batchc->add_option("--out", b_out);
  batchc->add_option("--trace", b_trace);

  // calibrate
  auto* calib = app.add_subcommand("calibrate", "Fit the train/merge cost constants on this machine");
  std::string c_dataset;
  std::size_t c_docs = 200;
  calib->add_option("--dataset", c_dataset)->required();
  calib->add_option("--docs", c_docs, "Smallest probe size");

  // benches
  std::string bench_out = "reports";
  auto* bm = app.add_subcommand("bench-merge", "Merge quality (DP) and speedup (SR) against x");
  std::string bm_dataset;
  std::size_t bm_nmax = 10;
  bm->add_option("--dataset", bm_dataset, "Dataset name or synthetic:<docs>")->required();
  bm->add_option("--n-max", bm_nmax);
  bm->add_option("--out-dir", bench_out);

  auto* bp = app.add_subcommand("bench-plansearch", "NAI vs PSOA vs PSOA++ search time");
  std::vector<std::size_t> bp_models{3, 6, 9, 12, 16, 20};
  std::size_t bp_trials = 5, bp_nai = 20;
  bp->add_option("--models", bp_models);
  bp->add_option("--trials", bp_trials);
  bp->add_option("--nai-limit", bp_nai);
  bp->add_option("--out-dir", bench_out);

  auto* bc = app.add_subcommand("bench-coverage", "SR against the fraction of the query covered by models");
  std::string bc_dataset;
  std::vector<double> bc_ratios{0, 0.25, 0.5, 0.75, 1};
  std::size_t bc_grid = 4, bc_repeats = 1;
  bc->add_option("--dataset", bc_dataset, "Dataset name or synthetic:<docs>")->required();
  bc->add_option("--ratios", bc_ratios);
  bc->add_option("--grid", bc_grid);
  bc->add_option("--repeats", bc_repeats);
  bc->add_option("--out-dir", bench_out);

  auto* sample = app.add_subcommand("sample", "Write the synthetic sample corpus as CSV plus its schema");
  std::string sm_dir = "data/sample";
  std::size_t sm_docs = 2000;
  sample->add_option("--out-dir", sm_dir);
  sample->add_option("--docs", sm_docs);

  auto* serve = app.add_subcommand("serve", "Run the REST service");
  std::optional<int> sv_port;
  std::optional<std::string> sv_host;
  serve->add_option("--port", sv_port);
  serve->add_option("--host", sv_host);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = service::ServiceConfig::load(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
    if (data_dir) cfg.data_dir = *data_dir;
    if (seed_flag) cfg.lda.seed = *seed_flag;
    const std::uint64_t seed = cfg.lda.seed;

    if (*serve) {
      if (sv_port) cfg.port = *sv_port;
      if (sv_host) cfg.host = *sv_host;
      service::Service svc(cfg);
      std::cerr << "listening on " << cfg.host << ":" << cfg.port << "\n";
      return svc.listen() ? 0 : 1;
    }

    if (*sample) {
      corpus::SyntheticConfig sc;
      sc.num_docs = sm_docs;
      sc.seed = seed;
      fs::create_directories(sm_dir);
      std::ofstream csv(fs::path(sm_dir) / "sample.csv");
      corpus::write_synthetic_csv(sc, csv);
      std::ofstream(fs::path(sm_dir) / "schema.json") << corpus::synthetic_schema().to_json().dump(2) << "\n";
      return 0;
    }

    service::Workspace ws(cfg.data_dir);

    if (*ingest) {
      service::check_dataset_name(in_name);
      corpus::IngestReport report;
      corpus::Dataset ds;
      if (in_sample) {
        corpus::SyntheticConfig sc;
        sc.num_docs = sample_docs;
        sc.seed = seed;
        ds = corpus::generate_dataset(sc, in_name);
      } else {
        if (in_path.empty()) throw InvalidArgument("ingest needs a path or --synthetic");
        if (in_schema.empty()) throw InvalidArgument("ingest needs --schema");
        const auto schema = corpus::Schema::from_json(read_json_arg(in_schema));
        corpus::TokenizerConfig tok;
        if (!in_tokenizer.empty()) tok = corpus::TokenizerConfig::from_json(read_json_arg(in_tokenizer));
        ds = corpus::ingest_file(in_path, in_name, schema, tok, &report);
      }
      auto saved = ws.add_dataset(std::move(ds));
      json out = saved->manifest();
      out["rows_read"] = report.rows_read;
      out["rows_skipped"] = report.rows_skipped;
      out["warnings"] = report.warnings;
      emit(out, "");
      return 0;
    }

    if (*train) {
      auto ds = ws.dataset(tr_dataset);
      const auto region = corpus::Region::from_json(read_json_arg(tr_region));
      ds->check_region(region);
      const auto docs = ds->select_docs(region);
      if (docs.empty()) throw InvalidArgument("region selects no documents");
      auto t = lda::train(ds->slice(docs), cfg.lda, cfg.algo);
      json out{{"documents", docs.size()}, {"seconds", t.seconds}, {"digest", t.payload.digest()}};
      if (tr_store) out["model_id"] = ws.catalog().materialize(t.payload, region, {ds->name(), cfg.lda, 0, t.seconds});
      emit(out, tr_out);
      return 0;
    }

    if (*grid) {
      if (gr_parts < 1) throw InvalidArgument("partitions must be at least 1");
      auto ds = ws.dataset(gr_dataset);
      const auto ids = store::materialize_grid(*ds, ws.catalog(), static_cast<std::size_t>(gr_parts), gr_dim, cfg.lda,
                                               cfg.algo);
      const auto snap = ws.catalog().snapshot();
      json out = json::array();
      for (auto id : ids) {
        const auto* m = snap->find(id);
        out.push_back({{"id", id}, {"region", m->region.to_json()}, {"documents", m->num_docs}});
      }
      emit(out, "");
      return 0;
    }

    if (*query) {
      const auto req = service::QueryRequest::from_json(read_json_arg(q_request), cfg);
      auto ds = ws.dataset(req.dataset);
      auto r = planner::execute_query(*ds, ws.catalog(), req.predicate, req.options);
      emit(service::answer_json(*ds, r, cfg.top_words), q_out);
      if (!q_trace.empty()) emit(r.trace, q_trace);
      return 0;
    }

    if (*batchc) {
      const auto req = service::BatchRequest::from_json(read_json_arg(b_request), cfg);
      auto ds = ws.dataset(req.dataset);
      batch::BatchOptions bo{req.options};
      auto r = batch::execute_batch(*ds, ws.catalog(), req.queries, bo);
      json out{{"optimized", r.optimized}, {"warnings", r.warnings}, {"answers", json::array()}};
      for (const auto& q : r.results) out["answers"].push_back(service::answer_json(*ds, q, cfg.top_words));
      emit(out, b_out);
      if (!b_trace.empty()) emit(r.trace, b_trace);
      return 0;
    }

    if (*calib) {
      auto ds = ws.dataset(c_dataset);
      emit(planner::calibrate(*ds, cfg.lda, cfg.algo, c_docs, cfg.cost).to_json(), "");
      return 0;
    }

    if (*bm) {
      auto ds = open_dataset(ws, bm_dataset, seed);
      bench::MergeBenchOptions o;
      o.n_max = bm_nmax;
      o.cfg = cfg.lda;
      o.decay = cfg.decay;
      o.seed = seed;
      auto r = bench::bench_merge(*ds, o);
      std::vector<std::string> notes;
      for (auto a : o.algos)
        notes.push_back(std::string(lda::to_string(a)) + " Spearman(x, DP) = " + std::to_string(r.spearman_dp(a)));
      notes.push_back("CGS DP <= VB DP on " + std::to_string(r.cgs_not_worse()) + " of " + std::to_string(o.n_max) +
                      " splits");
      write_report(bench_out, "bench_merge", r.table(), "Merge quality", notes);
      std::cout << r.table().to_csv();
      for (const auto& n : notes) std::cout << "# " << n << "\n";
      return 0;
    }

    if (*bp) {
      bench::PlanSearchOptions o;
      o.models = bp_models;
      o.trials = bp_trials;
      o.nai_limit = bp_nai;
      o.seed = seed;
      auto r = bench::bench_plansearch(o);
      write_report(bench_out, "bench_plansearch", r.table(), "Plan search time");
      std::cout << r.table().to_csv();
      return 0;
    }

    if (*bc) {
      auto ds = open_dataset(ws, bc_dataset, seed);
      bench::CoverageOptions o;
      o.ratios = bc_ratios;
      o.cfg = cfg.lda;
      o.algo = cfg.algo;
      o.grid = bc_grid;
      o.repeats = bc_repeats;
      auto r = bench::bench_coverage(*ds, o);
      write_report(bench_out, "bench_coverage", r.table(), "Speedup against coverage");
      std::cout << r.table().to_csv();
      return 0;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
