#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mlego/common/matrix.hpp"
#include "mlego/lda/config.hpp"

namespace mlego::lda {

/// Row-stochastic K x V topic-word matrix: the answer to a query.
struct TopicModel {
  Matrix phi;
  std::uint64_t vocab_hash = 0;
  std::size_t merges = 0;  // 0 = trained from scratch

  std::size_t K() const noexcept { return phi.rows(); }
  std::size_t V() const noexcept { return phi.cols(); }

  // FNV digest over the phi bytes.
  std::uint64_t digest() const noexcept;
};

/// What a materialized model keeps so it can be merged later: VB lambda, or
/// the CGS topic-word counts (possibly decayed, hence real-valued).
struct Payload {
  Algo algo = Algo::Vb;
  Matrix params;  // K x V
  std::size_t num_docs = 0;
  std::size_t word_count = 0;
  std::uint64_t vocab_hash = 0;

  std::size_t K() const noexcept { return params.rows(); }
  std::size_t V() const noexcept { return params.cols(); }
  std::uint64_t digest() const noexcept;
};

// VB: row-normalised lambda. CGS: (N_kv + eta) / (N_k + V eta).
TopicModel to_topic_model(const Payload& p, double eta, std::size_t merges = 0);

// Normalise each row of m in place to sum to one.
void normalize_rows(Matrix& m);

// Top-n (word index, weight) per topic, descending weight, ties by index.
std::vector<std::vector<std::pair<std::size_t, double>>> top_words(const TopicModel& m, std::size_t n);

}  // namespace mlego::lda
