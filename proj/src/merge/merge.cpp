#include "mlego/merge/merge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlego/common/error.hpp"
#include "mlego/kernels/kernels.hpp"

namespace mlego::merge {

namespace {

void check_compatible(std::span<const Payload> models) {
  if (models.empty()) throw InvalidArgument("nothing to merge");
  const auto& f = models.front();
  for (const auto& m : models) {
    if (m.algo != f.algo) throw InvalidArgument("cannot merge VB and CGS payloads");
    if (m.K() != f.K() || m.V() != f.V()) throw InvalidArgument("payload dimensions differ");
    if (m.vocab_hash != f.vocab_hash) throw InvalidArgument("payload vocabularies differ");
  }
}

// Indices sorted by (num_docs, word_count, content digest), ascending.
std::vector<std::size_t> canonical_order(std::span<const Payload> models) {
  std::vector<std::size_t> order(models.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint64_t> digest(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) digest[i] = models[i].digest();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = models[a];
    const auto& y = models[b];
    if (x.num_docs != y.num_docs) return x.num_docs < y.num_docs;
    if (x.word_count != y.word_count) return x.word_count < y.word_count;
    return digest[a] < digest[b];
  });
  return order;
}

Payload totals_like(std::span<const Payload> models) {
  Payload out;
  out.algo = models.front().algo;
  out.vocab_hash = models.front().vocab_hash;
  for (const auto& m : models) {
    out.num_docs += m.num_docs;
    out.word_count += m.word_count;
  }
  return out;
}

}  // namespace

Payload merge_vb(std::span<const Payload> models, double eta) {
  check_compatible(models);
  if (models.front().algo != lda::Algo::Vb) throw InvalidArgument("merge_vb needs VB payloads");
  if (models.size() == 1) return models.front();

  std::size_t n_max = 0;
  for (const auto& m : models) n_max = std::max(n_max, m.num_docs);
  Payload out = totals_like(models);
  out.params = Matrix(models.front().K(), models.front().V(), 0.0);
  const auto& k = kernels::active();
  for (std::size_t i : canonical_order(models)) {
    const double w = n_max == 0 ? 1.0 : static_cast<double>(models[i].num_docs) / static_cast<double>(n_max);
    k.axpy_shifted(w, models[i].params.data(), eta, out.params.data(), out.params.size());
  }
  for (auto& x : out.params.values()) x += eta;
  return out;
}

CgsMerged merge_cgs(std::span<const Payload> models, double beta0, double decay) {
  check_compatible(models);
  if (models.front().algo != lda::Algo::Cgs) throw InvalidArgument("merge_cgs needs CGS payloads");
  if (!(decay > 0) || decay > 1) throw InvalidArgument("decay must lie in (0, 1]");

  CgsMerged r;
  if (models.size() == 1) {
    r.payload = models.front();
  } else {
    r.payload = totals_like(models);
    r.payload.params = Matrix(models.front().K(), models.front().V(), 0.0);
    const auto order = canonical_order(models);
    const auto& k = kernels::active();
    const std::size_t m = order.size();
    for (std::size_t t = 1; t <= m; ++t) {
      const double w = decay == 1.0 ? 1.0 : std::pow(decay, static_cast<double>(m - t));
      const auto& p = models[order[t - 1]];
      k.axpy(w, p.params.data(), r.payload.params.data(), p.params.size());
    }
  }
  r.model = lda::to_topic_model(r.payload, beta0, models.size() - 1);
  return r;
}

lda::TopicModel merge_models(std::span<const Payload> models, double eta, double decay, Payload* merged) {
  check_compatible(models);
  if (models.front().algo == lda::Algo::Vb) {
    auto p = merge_vb(models, eta);
    auto m = lda::to_topic_model(p, eta, models.size() - 1);
    if (merged) *merged = std::move(p);
    return m;
  }
  auto r = merge_cgs(models, eta, decay);
  if (merged) *merged = std::move(r.payload);
  return std::move(r.model);
}

std::size_t merge_count(std::size_t reused_models, bool has_uncovered) noexcept {
  const std::size_t parts = reused_models + (has_uncovered ? 1 : 0);
  return parts == 0 ? 0 : parts - 1;
}

}  // namespace mlego::merge
