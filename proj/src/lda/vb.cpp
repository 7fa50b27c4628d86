#include "mlego/lda/vb.hpp"

#include <cmath>

#include <boost/math/special_functions/digamma.hpp>

#include "mlego/common/error.hpp"
#include "mlego/common/rng.hpp"
#include "mlego/kernels/kernels.hpp"

namespace mlego::lda {

namespace {

using boost::math::digamma;

constexpr std::size_t kMaxInner = 100;
constexpr double kTiny = 1e-100;

struct BagOfWords {
  std::vector<std::uint32_t> ids;
  std::vector<double> counts;
};

std::vector<BagOfWords> bags(const corpus::CorpusSlice& c) {
  std::vector<BagOfWords> out(c.docs.size());
  std::vector<std::uint32_t> seen(c.vocab_size, 0);
  std::vector<std::size_t> pos(c.vocab_size, 0);
  for (std::size_t d = 0; d < c.docs.size(); ++d) {
    auto& b = out[d];
    const auto stamp = static_cast<std::uint32_t>(d + 1);
    for (auto w : c.docs[d]) {
      if (w >= c.vocab_size) throw InvalidArgument("token index outside the vocabulary");
      if (seen[w] != stamp) {
        seen[w] = stamp;
        pos[w] = b.ids.size();
        b.ids.push_back(w);
        b.counts.push_back(0.0);
      }
      b.counts[pos[w]] += 1.0;
    }
  }
  return out;
}

// exp(E[log beta]) stored V x K so a word's K values are contiguous.
Matrix exp_elog_beta(const Matrix& lambda) {
  const std::size_t K = lambda.rows(), V = lambda.cols();
  Matrix eb(V, K);
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0;
    for (double x : lambda.row(k)) s += x;
    const double psi_sum = digamma(s);
    for (std::size_t v = 0; v < V; ++v) eb(v, k) = std::exp(digamma(lambda(k, v)) - psi_sum);
  }
  return eb;
}

void exp_elog_theta(std::span<const double> gamma, std::span<double> out) {
  double s = 0;
  for (double g : gamma) s += g;
  const double psi_sum = digamma(s);
  for (std::size_t k = 0; k < gamma.size(); ++k) out[k] = std::exp(digamma(gamma[k]) - psi_sum);
}

}  // namespace

Matrix vb_initial_lambda(std::size_t K, std::size_t V, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x1a3bda));
  Matrix m(K, V);
  for (auto& x : m.values()) x = 0.9 + 0.2 * rng.uniform();
  return m;
}

VbResult train_vb(const corpus::CorpusSlice& corpus, const LdaConfig& cfg, const VbObserver& observer) {
  return train_vb(corpus, cfg, observer, vb_initial_lambda(cfg.K, corpus.vocab_size, cfg.seed));
}

VbResult train_vb(const corpus::CorpusSlice& corpus, const LdaConfig& cfg, const VbObserver& observer,
                  Matrix initial_lambda) {
  cfg.validate();
  if (corpus.docs.empty() || corpus.total_tokens() == 0)
    throw InvalidArgument("cannot train on an empty slice");
  const std::size_t K = cfg.K, V = corpus.vocab_size, D = corpus.docs.size();
  if (initial_lambda.rows() != K || initial_lambda.cols() != V)
    throw InvalidArgument("initial lambda has the wrong shape");
  const auto docs = bags(corpus);
  const auto& kern = kernels::active();

  VbState st;
  st.lambda = std::move(initial_lambda);
  st.gamma = Matrix(D, K);
  for (std::size_t d = 0; d < D; ++d) {
    const double init = cfg.alpha + static_cast<double>(corpus.docs[d].size()) / static_cast<double>(K);
    for (auto& g : st.gamma.row(d)) g = init;
  }

  std::vector<double> eth(K), acc(K), last(K);
  std::vector<double> phinorm;
  Matrix sstats(V, K);
  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    const Matrix eb = exp_elog_beta(st.lambda);
    std::fill(sstats.values().begin(), sstats.values().end(), 0.0);
    double gamma_change = 0;

    for (std::size_t d = 0; d < D; ++d) {
      const auto& bag = docs[d];
      auto gamma = st.gamma.row(d);
      std::copy(gamma.begin(), gamma.end(), last.begin());
      phinorm.resize(bag.ids.size());

      auto refresh = [&] {
        exp_elog_theta(gamma, eth);
        for (std::size_t i = 0; i < bag.ids.size(); ++i)
          phinorm[i] = kern.dot(eth.data(), eb.row(bag.ids[i]).data(), K) + kTiny;
      };
      refresh();
      for (std::size_t inner = 0; inner < kMaxInner; ++inner) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < bag.ids.size(); ++i)
          kern.axpy(bag.counts[i] / phinorm[i], eb.row(bag.ids[i]).data(), acc.data(), K);
        double change = 0;
        for (std::size_t k = 0; k < K; ++k) {
          const double g = cfg.alpha + eth[k] * acc[k];
          change += std::abs(g - gamma[k]);
          gamma[k] = g;
        }
        refresh();
        if (change / static_cast<double>(K) < cfg.vb_tol) break;
      }
      for (std::size_t i = 0; i < bag.ids.size(); ++i)
        kern.axpy(bag.counts[i] / phinorm[i], eth.data(), sstats.row(bag.ids[i]).data(), K);
      for (std::size_t k = 0; k < K; ++k) gamma_change += std::abs(gamma[k] - last[k]);
    }

    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t v = 0; v < V; ++v) st.lambda(k, v) = cfg.eta + eb(v, k) * sstats(v, k);
    st.iterations = iter;
    if (observer) observer(iter, st);
    if (gamma_change / static_cast<double>(D * K) < cfg.vb_tol) break;
  }

  VbResult r;
  r.payload.algo = Algo::Vb;
  r.payload.params = st.lambda;
  r.payload.num_docs = D;
  r.payload.word_count = corpus.total_tokens();
  r.payload.vocab_hash = corpus.vocab_hash;
  r.model = to_topic_model(r.payload, cfg.eta);
  r.state = std::move(st);
  return r;
}

double vb_elbo(const corpus::CorpusSlice& corpus, const VbState& st, const LdaConfig& cfg) {
  const std::size_t K = st.lambda.rows(), V = st.lambda.cols(), D = st.gamma.rows();
  const auto docs = bags(corpus);
  const Matrix eb = exp_elog_beta(st.lambda);
  std::vector<double> eth(K);
  double score = 0;

  for (std::size_t d = 0; d < D; ++d) {
    auto gamma = st.gamma.row(d);
    exp_elog_theta(gamma, eth);
    for (std::size_t i = 0; i < docs[d].ids.size(); ++i) {
      double p = 0;
      for (std::size_t k = 0; k < K; ++k) p += eth[k] * eb(docs[d].ids[i], k);
      score += docs[d].counts[i] * std::log(p);
    }
    double gsum = 0;
    for (double g : gamma) gsum += g;
    for (std::size_t k = 0; k < K; ++k)
      score += (cfg.alpha - gamma[k]) * std::log(eth[k]) + std::lgamma(gamma[k]) - std::lgamma(cfg.alpha);
    score += std::lgamma(cfg.alpha * static_cast<double>(K)) - std::lgamma(gsum);
  }
  for (std::size_t k = 0; k < K; ++k) {
    double lsum = 0;
    for (std::size_t v = 0; v < V; ++v) {
      const double l = st.lambda(k, v);
      lsum += l;
      score += (cfg.eta - l) * std::log(eb(v, k)) + std::lgamma(l) - std::lgamma(cfg.eta);
    }
    score += std::lgamma(cfg.eta * static_cast<double>(V)) - std::lgamma(lsum);
  }
  return score;
}

}  // namespace mlego::lda
