#pragma once

#include <cstddef>

#include <json.hpp>

namespace mlego::planner {

/// Unit costs plus the performance-loss curve. Training is modelled as
/// kappa_train * M_i * N^2 * K seconds, one merge as kappa_merge * K * V.
struct CostModel {
  double kappa_train = 2e-9;
  double kappa_merge = 5e-10;
  double loss_gamma = 0.98;  // P(x) = gamma^x
  std::size_t iters = 100;
  std::size_t K = 100;
  std::size_t V = 1000;

  double cost_train(std::size_t n_docs) const noexcept;
  double t_m() const noexcept { return kappa_merge * static_cast<double>(K) * static_cast<double>(V); }
  double cost_merge(std::size_t x) const noexcept { return t_m() * static_cast<double>(x); }
  // P(0) = 1, non-increasing.
  double P(std::size_t x) const noexcept;
  double loss(std::size_t x) const noexcept { return 1.0 - P(x); }

  void validate() const;
  static CostModel from_json(const nlohmann::json& j, CostModel base);
  nlohmann::json to_json() const;
};

// The additive floor that keeps every score strictly positive.
inline constexpr double kScoreEpsilon = 1e-9;

}  // namespace mlego::planner
