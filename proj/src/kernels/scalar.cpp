#include "mlego/kernels/kernels.hpp"

namespace mlego::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy_shifted_scalar(double a, const double* x, double shift, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * (x[i] - shift);
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void mul_acc_scalar(double a, const double* x, const double* y, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += (a * x[i]) * y[i];
}

void cgs_weights_scalar(const std::int32_t* doc_topic, const std::int32_t* word_topic,
                        const std::int32_t* topic_total, double alpha, double eta, double v_eta,
                        double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double left = static_cast<double>(doc_topic[k]) + alpha;
    const double right = static_cast<double>(word_topic[k]) + eta;
    const double denom = static_cast<double>(topic_total[k]) + v_eta;
    out[k] = (left * right) / denom;
  }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{
      "scalar",       dot_scalar,     sum_scalar,        axpy_scalar,
      axpy_shifted_scalar, scale_scalar, mul_acc_scalar, cgs_weights_scalar,
  };
  return table;
}

}  // namespace mlego::kernels
