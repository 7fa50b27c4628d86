#include "mlego/lda/eval.hpp"

#include <cmath>

#include "mlego/common/error.hpp"
#include "mlego/common/rng.hpp"
#include "mlego/kernels/kernels.hpp"

namespace mlego::lda {

namespace {

// Gibbs over the evaluation half with phi_t (V x K) held fixed. The estimate
// averages the smoothed counts over the second half of the sweeps.
std::vector<double> fold_in_t(const Matrix& phi_t, std::span<const corpus::TokenId> half, double alpha,
                              std::uint64_t seed) {
  const std::size_t K = phi_t.cols();
  std::vector<double> theta(K, 1.0 / static_cast<double>(K));
  if (K == 1) return {1.0};
  if (half.empty()) return theta;

  Rng rng(seed);
  std::vector<std::uint32_t> z(half.size());
  std::vector<double> n(K, 0.0), p(K), acc(K, 0.0);
  for (auto& t : z) {
    t = rng.below(static_cast<std::uint32_t>(K));
    n[t] += 1;
  }
  const double denom = static_cast<double>(half.size()) + alpha * static_cast<double>(K);
  constexpr std::size_t burn_in = kFoldInSweeps / 2;
  for (std::size_t sweep = 0; sweep < kFoldInSweeps; ++sweep) {
    for (std::size_t i = 0; i < half.size(); ++i) {
      n[z[i]] -= 1;
      const auto row = phi_t.row(half[i]);
      double total = 0;
      for (std::size_t k = 0; k < K; ++k) total += (p[k] = (n[k] + alpha) * row[k]);
      std::uint32_t k = 0;
      if (total > 0) {
        double u = rng.uniform() * total;
        for (; k + 1 < K; ++k) {
          u -= p[k];
          if (u < 0) break;
        }
      } else {
        k = rng.below(static_cast<std::uint32_t>(K));
      }
      z[i] = k;
      n[k] += 1;
    }
    if (sweep >= burn_in)
      for (std::size_t k = 0; k < K; ++k) acc[k] += (n[k] + alpha) / denom;
  }
  const double sweeps = static_cast<double>(kFoldInSweeps - burn_in);
  for (std::size_t k = 0; k < K; ++k) theta[k] = acc[k] / sweeps;
  return theta;
}

void check_tokens(const TopicModel& m, std::span<const corpus::TokenId> doc) {
  for (auto w : doc)
    if (w >= m.V()) throw InvalidArgument("document token outside the model vocabulary");
}

}  // namespace

std::vector<double> fold_in(const TopicModel& model, std::span<const corpus::TokenId> doc, double alpha,
                            std::uint64_t seed) {
  check_tokens(model, doc);
  return fold_in_t(model.phi.transposed(), doc.first(doc.size() / 2), alpha, seed);
}

LppResult lpp(const TopicModel& model, const corpus::CorpusSlice& heldout, double alpha, std::uint64_t seed) {
  const Matrix phi_t = model.phi.transposed();
  const auto& kern = kernels::active();
  LppResult r;
  // Neumaier-compensated sum keeps the mean faithful over many tokens.
  double sum = 0, comp = 0;
  for (std::size_t d = 0; d < heldout.docs.size(); ++d) {
    const auto doc = heldout.docs[d];
    check_tokens(model, doc);
    const std::size_t half = doc.size() / 2;
    const auto theta = fold_in_t(phi_t, doc.first(half), alpha, derive_seed(seed, d));
    for (auto w : doc.subspan(half)) {
      double p = kern.dot(theta.data(), phi_t.row(w).data(), theta.size());
      if (!(p >= kProbabilityFloor)) {
        p = kProbabilityFloor;
        ++r.floored;
      }
      const double x = std::log(p);
      const double t = sum + x;
      comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
      sum = t;
      ++r.scored;
    }
  }
  if (r.scored == 0) throw InvalidArgument("held-out set has no tokens to score");
  r.lpp = (sum + comp) / static_cast<double>(r.scored);
  return r;
}

}  // namespace mlego::lda
