#pragma once

#include <functional>

#include "mlego/corpus/dataset.hpp"
#include "mlego/lda/config.hpp"
#include "mlego/lda/model.hpp"

namespace mlego::lda {

struct VbState {
  Matrix lambda;  // K x V
  Matrix gamma;   // D x K
  std::size_t iterations = 0;
};

struct VbResult {
  VbState state;
  TopicModel model;
  Payload payload;
};

// Called after every outer iteration (E-step over all docs, then M-step).
using VbObserver = std::function<void(std::size_t iter, const VbState&)>;

// Initial lambda depends only on (seed, K, V), so models trained on
// different partitions with one seed start from the same topics.
Matrix vb_initial_lambda(std::size_t K, std::size_t V, std::uint64_t seed);

VbResult train_vb(const corpus::CorpusSlice& corpus, const LdaConfig& cfg,
                  const VbObserver& observer = {});
VbResult train_vb(const corpus::CorpusSlice& corpus, const LdaConfig& cfg, const VbObserver& observer,
                  Matrix initial_lambda);

// Evidence lower bound for (lambda, gamma) with the optimal phi plugged in.
double vb_elbo(const corpus::CorpusSlice& corpus, const VbState& state, const LdaConfig& cfg);

}  // namespace mlego::lda
