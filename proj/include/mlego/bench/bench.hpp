#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlego/corpus/dataset.hpp"
#include "mlego/lda/config.hpp"
#include "mlego/planner/plan.hpp"

namespace mlego::bench {

/// Rows of loosely typed cells; written as CSV, JSON and an HTML table.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  std::string to_csv() const;
  nlohmann::json to_json() const;
  std::string to_html(const std::string& title, const std::vector<std::string>& notes = {}) const;
};

// Writes <stem>.csv, <stem>.json and <stem>.html under dir.
void write_report(const std::filesystem::path& dir, const std::string& stem, const Table& t, const std::string& title,
                  const std::vector<std::string>& notes = {});

// Spearman rank correlation, ties given their average rank.
double spearman(std::span<const double> a, std::span<const double> b);

// ---- merge quality ------------------------------------------------------

struct MergeBenchOptions {
  std::size_t n_max = 10;
  lda::LdaConfig cfg;
  std::vector<lda::Algo> algos{lda::Algo::Vb, lda::Algo::Cgs};
  double heldout_fraction = 0.1;
  double decay = 1.0;
  std::uint64_t seed = 1;
};

struct MergeRow {
  lda::Algo algo = lda::Algo::Vb;
  std::size_t x = 0;  // models merged
  double lpp_merged = 0, lpp_orig = 0, dp = 0, sr = 0;
  double merge_seconds = 0, orig_seconds = 0;
};

struct MergeBench {
  std::vector<MergeRow> rows;
  Table table() const;
  std::vector<double> dp(lda::Algo algo) const;  // by x
  double spearman_dp(lda::Algo algo) const;
  // Splits where the CGS merge lost no more than the VB merge.
  std::size_t cgs_not_worse() const;
};

// ORIG on the training documents, then for x = 1..n_max a random x-way
// partition, one model per part, merged; DP = |lpp_orig - lpp_merged| on
// held-out documents. x = 1 reproduces ORIG exactly (asserted).
MergeBench bench_merge(const corpus::Dataset& ds, const MergeBenchOptions& opts);

// ---- plan search --------------------------------------------------------

struct PlanSearchOptions {
  std::vector<std::size_t> models{3, 6, 9, 12, 16, 20, 24};
  std::size_t trials = 5;
  std::vector<double> alphas{0.0, 0.5, 1.0};
  std::size_t nai_limit = 24;  // skip NAI above this many models
  std::uint64_t seed = 1;
};

struct PlanSearchRow {
  std::string method;
  std::size_t m = 0;
  double mean_ms = 0;
  std::size_t runs = 0;
  std::size_t agree = 0;  // runs whose plan matched NAI (or PSOA when NAI skipped)
  std::size_t fused = 0;
};

struct PlanSearchBench {
  std::vector<PlanSearchRow> rows;
  Table table() const;
  const PlanSearchRow* find(const std::string& method, std::size_t m) const;
};

// Candidate models cut from grids of several granularities over one range,
// so most pairs overlap and NAI's 2^m dominates.
planner::Problem synthetic_catalog(std::size_t m, std::uint64_t seed, std::size_t docs = 10000);

PlanSearchBench bench_plansearch(const PlanSearchOptions& opts);

// ---- coverage -----------------------------------------------------------

struct CoverageOptions {
  std::vector<double> ratios{0.0, 0.25, 0.5, 0.75, 1.0};
  lda::LdaConfig cfg;
  lda::Algo algo = lda::Algo::Vb;
  std::string dim = "id";
  std::size_t grid = 4;     // models covering the query, one per slice
  std::size_t repeats = 1;  // timing repeats, minimum taken
};

struct CoverageRow {
  double ratio = 0;
  double orig_seconds = 0, path_seconds = 0, sr = 0;
  std::size_t reused = 0, trained_docs = 0;
};

struct CoverageBench {
  std::vector<CoverageRow> rows;
  Table table() const;
};

// For each ratio, a catalog holding that fraction of the grid; the query is
// the whole dataset. SR = time(ORIG) / time(search + train rest + merge).
CoverageBench bench_coverage(const corpus::Dataset& ds, const CoverageOptions& opts);

}  // namespace mlego::bench
