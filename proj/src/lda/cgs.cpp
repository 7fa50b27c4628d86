#include "mlego/lda/cgs.hpp"

#include "mlego/common/error.hpp"
#include "mlego/common/rng.hpp"
#include "mlego/kernels/kernels.hpp"

namespace mlego::lda {

namespace {

void check_corpus(const corpus::CorpusSlice& c) {
  if (c.docs.empty() || c.total_tokens() == 0) throw InvalidArgument("cannot train on an empty slice");
  for (const auto& d : c.docs)
    for (auto w : d)
      if (w >= c.vocab_size) throw InvalidArgument("token index outside the vocabulary");
}

}  // namespace

Matrix CgsState::topic_word() const {
  Matrix m(K, V);
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t k = 0; k < K; ++k) m(k, v) = n_wk[v * K + k];
  return m;
}

Matrix cgs_phi(const Matrix& n_kv, double beta0) {
  const std::size_t K = n_kv.rows(), V = n_kv.cols();
  Matrix phi(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    double n_k = 0;
    for (double x : n_kv.row(k)) n_k += x;
    const double denom = n_k + static_cast<double>(V) * beta0;
    for (std::size_t v = 0; v < V; ++v) phi(k, v) = (n_kv(k, v) + beta0) / denom;
  }
  return phi;
}

CgsResult train_cgs(const corpus::CorpusSlice& corpus, const LdaConfig& cfg) {
  cfg.validate();
  check_corpus(corpus);
  const std::size_t K = cfg.K, V = corpus.vocab_size, D = corpus.docs.size();

  CgsState s;
  s.K = K;
  s.V = V;
  s.D = D;
  s.n_wk.assign(V * K, 0);
  s.n_dk.assign(D * K, 0);
  s.n_k.assign(K, 0);
  s.z.reserve(corpus.total_tokens());

  Rng rng(cfg.seed);
  // Word-level seeding draws from its own stream so it does not depend on
  // which documents this partition happens to contain.
  std::vector<std::uint32_t> word_topic;
  if (cfg.cgs_init == CgsInit::Word) {
    Rng wr(derive_seed(cfg.seed, 0x5eed));
    word_topic.resize(V);
    for (auto& t : word_topic) t = wr.below(static_cast<std::uint32_t>(K));
  }
  for (std::size_t d = 0; d < D; ++d) {
    for (auto w : corpus.docs[d]) {
      const auto k = word_topic.empty() ? rng.below(static_cast<std::uint32_t>(K)) : word_topic[w];
      s.z.push_back(k);
      ++s.n_wk[w * K + k];
      ++s.n_dk[d * K + k];
      ++s.n_k[k];
    }
  }

  const auto& kern = kernels::active();
  const double v_eta = static_cast<double>(V) * cfg.eta;
  std::vector<double> p(K);
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    std::size_t t = 0;
    for (std::size_t d = 0; d < D; ++d) {
      std::int32_t* dk = &s.n_dk[d * K];
      for (auto w : corpus.docs[d]) {
        std::int32_t* wk = &s.n_wk[w * K];
        const auto old = s.z[t];
        --dk[old];
        --wk[old];
        --s.n_k[old];

        kern.cgs_weights(dk, wk, s.n_k.data(), cfg.alpha, cfg.eta, v_eta, p.data(), K);
        double total = 0;
        for (std::size_t k = 0; k < K; ++k) total += p[k];
        double u = rng.uniform() * total;
        std::uint32_t k = 0;
        for (; k + 1 < K; ++k) {
          u -= p[k];
          if (u < 0) break;
        }

        s.z[t++] = k;
        ++dk[k];
        ++wk[k];
        ++s.n_k[k];
      }
    }
  }

  CgsResult r;
  r.payload.algo = Algo::Cgs;
  r.payload.params = s.topic_word();
  r.payload.num_docs = D;
  r.payload.word_count = s.z.size();
  r.payload.vocab_hash = corpus.vocab_hash;
  r.model.phi = cgs_phi(r.payload.params, cfg.eta);
  r.model.vocab_hash = corpus.vocab_hash;
  r.state = std::move(s);
  return r;
}

}  // namespace mlego::lda
