#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mlego/corpus/dataset.hpp"
#include "mlego/lda/model.hpp"

namespace mlego::lda {

inline constexpr std::size_t kFoldInSweeps = 20;
inline constexpr double kProbabilityFloor = 1e-12;

// Topic mixture for one document from Gibbs sampling with phi fixed, using
// only the first half of its tokens. Uniform when that half is empty.
std::vector<double> fold_in(const TopicModel& model, std::span<const corpus::TokenId> doc,
                            double alpha, std::uint64_t seed);

struct LppResult {
  double lpp = 0;             // mean log p over scored tokens
  std::size_t scored = 0;     // second-half tokens
  std::size_t floored = 0;    // tokens whose probability hit the floor
  bool floor_applied() const noexcept { return floored > 0; }
};

// Document completion: fold in on the first half, score the second half.
LppResult lpp(const TopicModel& model, const corpus::CorpusSlice& heldout, double alpha,
              std::uint64_t seed);

}  // namespace mlego::lda
