#pragma once

// Data-parallel inner loops shared by training, evaluation and merging.
//
// Every kernel has a scalar reference implementation. Wider variants (AVX2
// today) are compiled into separate translation units and selected once at
// startup from the CPU feature bits. Elementwise kernels are required to be
// bit-identical to the scalar reference; reductions (dot, sum) may differ in
// the last few ulps because they reassociate.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mlego::kernels {

struct KernelTable {
  std::string_view name;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[i] += a * (x[i] - shift)
  void (*axpy_shifted)(double a, const double* x, double shift, double* y, std::size_t n);
  // x[i] *= a
  void (*scale)(double a, double* x, std::size_t n);
  // acc[i] += a * x[i] * y[i]
  void (*mul_acc)(double a, const double* x, const double* y, double* acc, std::size_t n);
  // out[i] = (doc_topic[i] + alpha) * (word_topic[i] + eta) / (topic_total[i] + v_eta)
  // The unnormalized collapsed-Gibbs conditional for one token.
  void (*cgs_weights)(const std::int32_t* doc_topic, const std::int32_t* word_topic,
                      const std::int32_t* topic_total, double alpha, double eta, double v_eta,
                      double* out, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table() noexcept;

// The table used by the library. Chosen on first use: MLEGO_KERNELS=scalar|avx2
// forces a variant, otherwise the widest supported one wins.
const KernelTable& active() noexcept;

// Override the active table (tests and benchmarks). Not thread-safe against
// concurrent kernel use; call before starting work.
void set_active(const KernelTable& table) noexcept;

// All variants usable on this machine, scalar first.
std::vector<const KernelTable*> available();

}  // namespace mlego::kernels
