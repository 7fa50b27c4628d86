// Compiled with -mavx2 -ffp-contract=off. Only reached through the dispatch
// table after a CPU feature check.

#include <immintrin.h>

#include "mlego/kernels/kernels.hpp"

namespace mlego::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_shifted_avx2(double a, const double* x, double shift, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vs = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vs);
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, d)));
  }
  for (; i < n; ++i) y[i] += a * (x[i] - shift);
}

void scale_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
  for (; i < n; ++i) x[i] *= a;
}

void mul_acc_avx2(double a, const double* x, const double* y, double* acc, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + i)), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), t));
  }
  for (; i < n; ++i) acc[i] += (a * x[i]) * y[i];
}

void cgs_weights_avx2(const std::int32_t* doc_topic, const std::int32_t* word_topic,
                      const std::int32_t* topic_total, double alpha, double eta, double v_eta,
                      double* out, std::size_t n) {
  const __m256d valpha = _mm256_set1_pd(alpha);
  const __m256d veta = _mm256_set1_pd(eta);
  const __m256d vveta = _mm256_set1_pd(v_eta);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d dt = _mm256_cvtepi32_pd(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(doc_topic + k)));
    const __m256d wt = _mm256_cvtepi32_pd(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(word_topic + k)));
    const __m256d tt = _mm256_cvtepi32_pd(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(topic_total + k)));
    const __m256d num = _mm256_mul_pd(_mm256_add_pd(dt, valpha), _mm256_add_pd(wt, veta));
    _mm256_storeu_pd(out + k, _mm256_div_pd(num, _mm256_add_pd(tt, vveta)));
  }
  for (; k < n; ++k) {
    const double left = static_cast<double>(doc_topic[k]) + alpha;
    const double right = static_cast<double>(word_topic[k]) + eta;
    const double denom = static_cast<double>(topic_total[k]) + v_eta;
    out[k] = (left * right) / denom;
  }
}

}  // namespace

const KernelTable& avx2_table_unchecked() noexcept {
  static const KernelTable table{
      "avx2",       dot_avx2,      sum_avx2,       axpy_avx2,
      axpy_shifted_avx2, scale_avx2, mul_acc_avx2, cgs_weights_avx2,
  };
  return table;
}

}  // namespace mlego::kernels
