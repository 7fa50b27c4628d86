#pragma once

#include <span>

#include "mlego/lda/model.hpp"

namespace mlego::merge {

using lda::Payload;

// lambda = eta + sum_i w_i (lambda_i - eta), w_i = N_i / max_j N_j.
// Inputs are summed in a canonical order, so the result is bit-identical for
// any permutation. A single input is returned unchanged.
Payload merge_vb(std::span<const Payload> models, double eta);

struct CgsMerged {
  Payload payload;  // params = merged N_kv
  lda::TopicModel model;
};

// N_kv = sum_t decay^(m-t) dN^t with models ordered by ascending document
// count, so the largest model is undecayed. phi = (N_kv + b0)/(N_k + V b0).
CgsMerged merge_cgs(std::span<const Payload> models, double beta0, double decay = 1.0);

// Dispatch on the payload algorithm; returns the merged model with its
// merge count recorded.
lda::TopicModel merge_models(std::span<const Payload> models, double eta, double decay,
                             Payload* merged = nullptr);

// Pairwise merges needed to assemble a plan: participating models minus
// one, where a trained model for the uncovered remainder also participates.
std::size_t merge_count(std::size_t reused_models, bool has_uncovered) noexcept;

}  // namespace mlego::merge
