#pragma once

#include <cstdint>
#include <vector>

#include "mlego/corpus/dataset.hpp"
#include "mlego/lda/config.hpp"
#include "mlego/lda/model.hpp"

namespace mlego::lda {

/// Collapsed Gibbs sampler counts. Stored word-major / doc-major so the K
/// entries needed to sample one token are contiguous.
struct CgsState {
  std::size_t K = 0, V = 0, D = 0;
  std::vector<std::int32_t> n_wk;  // V x K
  std::vector<std::int32_t> n_dk;  // D x K
  std::vector<std::int32_t> n_k;   // K
  std::vector<std::uint32_t> z;    // per token, documents concatenated

  std::int32_t word_topic(std::size_t k, std::size_t v) const { return n_wk[v * K + k]; }
  std::int32_t doc_topic(std::size_t k, std::size_t d) const { return n_dk[d * K + k]; }

  // N_kv as a K x V real matrix (the mergeable delta).
  Matrix topic_word() const;

  bool operator==(const CgsState&) const = default;
};

struct CgsResult {
  CgsState state;
  TopicModel model;
  Payload payload;
};

// Throws InvalidArgument on an empty slice or out-of-vocabulary tokens.
CgsResult train_cgs(const corpus::CorpusSlice& corpus, const LdaConfig& cfg);

// phi_kv = (N_kv + beta0) / (N_k + V beta0)
Matrix cgs_phi(const Matrix& n_kv, double beta0);

}  // namespace mlego::lda
