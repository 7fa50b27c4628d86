#include "mlego/lda/model.hpp"

#include <algorithm>
#include <numeric>

#include "mlego/common/error.hpp"
#include "mlego/common/hash.hpp"
#include "mlego/kernels/kernels.hpp"
#include "mlego/lda/cgs.hpp"

namespace mlego::lda {

std::uint64_t TopicModel::digest() const noexcept {
  Fnv1a h;
  h.update(phi.values());
  return h.digest();
}

std::uint64_t Payload::digest() const noexcept {
  Fnv1a h;
  h.update(params.values());
  return h.digest();
}

void normalize_rows(Matrix& m) {
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double s = k.sum(row.data(), row.size());
    if (!(s > 0)) throw InvalidArgument("cannot normalise a row with non-positive mass");
    k.scale(1.0 / s, row.data(), row.size());
  }
}

TopicModel to_topic_model(const Payload& p, double eta, std::size_t merges) {
  TopicModel m;
  m.vocab_hash = p.vocab_hash;
  m.merges = merges;
  if (p.algo == Algo::Vb) {
    m.phi = p.params;
    normalize_rows(m.phi);
  } else {
    m.phi = cgs_phi(p.params, eta);
  }
  return m;
}

std::vector<std::vector<std::pair<std::size_t, double>>> top_words(const TopicModel& m, std::size_t n) {
  std::vector<std::vector<std::pair<std::size_t, double>>> out(m.K());
  std::vector<std::size_t> idx(m.V());
  for (std::size_t k = 0; k < m.K(); ++k) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto take = std::min(n, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        return m.phi(k, a) != m.phi(k, b) ? m.phi(k, a) > m.phi(k, b) : a < b;
                      });
    for (std::size_t i = 0; i < take; ++i) out[k].emplace_back(idx[i], m.phi(k, idx[i]));
  }
  return out;
}

}  // namespace mlego::lda
