#include "mlego/lda/train.hpp"

#include "mlego/common/timer.hpp"
#include "mlego/lda/cgs.hpp"
#include "mlego/lda/vb.hpp"

namespace mlego::lda {

Trained train(const corpus::CorpusSlice& corpus, const LdaConfig& cfg, Algo algo) {
  Stopwatch sw;
  Trained t;
  if (algo == Algo::Vb) {
    auto r = train_vb(corpus, cfg);
    t.model = std::move(r.model);
    t.payload = std::move(r.payload);
  } else {
    auto r = train_cgs(corpus, cfg);
    t.model = std::move(r.model);
    t.payload = std::move(r.payload);
  }
  t.seconds = sw.seconds();
  return t;
}

}  // namespace mlego::lda
