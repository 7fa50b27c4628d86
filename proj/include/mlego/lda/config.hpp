#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include <json.hpp>

namespace mlego::lda {

enum class Algo { Vb, Cgs };

std::string_view to_string(Algo a) noexcept;
Algo parse_algo(std::string_view s);

// How CGS seeds its topic assignments. Token: each token independently
// uniform (the textbook sampler). Word: every occurrence of a word starts in
// the same seed-determined topic, so models trained on disjoint partitions
// with one seed start from the same word clusters and stay index-aligned
// for merging.
enum class CgsInit { Token, Word };

struct LdaConfig {
  std::size_t K = 100;
  double alpha = 0.1;  // symmetric document-topic prior
  double eta = 0.01;   // symmetric topic-word prior (beta_0 for CGS)
  std::size_t max_iters = 100;
  std::uint64_t seed = 1;
  double vb_tol = 1e-4;  // mean |delta gamma| stopping threshold
  CgsInit cgs_init = CgsInit::Token;

  // Throws InvalidArgument when K, alpha, eta or max_iters are out of range.
  void validate() const;

  static LdaConfig from_json(const nlohmann::json& j);
  // Overrides only the keys present in j.
  static LdaConfig from_json(const nlohmann::json& j, LdaConfig base);
  nlohmann::json to_json() const;

  // True when two configs produce mergeable payloads (same K, priors).
  bool compatible(const LdaConfig& o) const noexcept {
    return K == o.K && alpha == o.alpha && eta == o.eta;
  }
};

}  // namespace mlego::lda
