#pragma once

#include "mlego/corpus/dataset.hpp"
#include "mlego/lda/config.hpp"
#include "mlego/lda/model.hpp"

namespace mlego::lda {

struct Trained {
  TopicModel model;
  Payload payload;
  double seconds = 0;
};

// Either inference algorithm, timed.
Trained train(const corpus::CorpusSlice& corpus, const LdaConfig& cfg, Algo algo);

}  // namespace mlego::lda
