#include "mlego/planner/cost.hpp"

#include <cmath>

#include "mlego/common/error.hpp"

namespace mlego::planner {

double CostModel::cost_train(std::size_t n_docs) const noexcept {
  const double n = static_cast<double>(n_docs);
  return kappa_train * static_cast<double>(iters) * n * n * static_cast<double>(K);
}

double CostModel::P(std::size_t x) const noexcept { return std::pow(loss_gamma, static_cast<double>(x)); }

void CostModel::validate() const {
  if (!(kappa_train >= 0) || !(kappa_merge >= 0)) throw InvalidArgument("cost constants must be non-negative");
  if (!(loss_gamma > 0) || loss_gamma > 1) throw InvalidArgument("loss_gamma must lie in (0, 1]");
}

CostModel CostModel::from_json(const nlohmann::json& j, CostModel c) {
  if (j.is_null()) return c;
  c.kappa_train = j.value("kappa_train", c.kappa_train);
  c.kappa_merge = j.value("kappa_merge", c.kappa_merge);
  c.loss_gamma = j.value("loss_gamma", c.loss_gamma);
  c.validate();
  return c;
}

nlohmann::json CostModel::to_json() const {
  return {{"kappa_train", kappa_train}, {"kappa_merge", kappa_merge}, {"loss_gamma", loss_gamma},
          {"iters", iters}, {"K", K}, {"V", V}, {"t_m", t_m()}};
}

}  // namespace mlego::planner
