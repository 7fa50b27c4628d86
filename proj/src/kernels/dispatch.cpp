#include <atomic>
#include <cstdlib>
#include <string_view>

#include "mlego/kernels/kernels.hpp"

namespace mlego::kernels {

#if defined(MLEGO_HAVE_AVX2)
const KernelTable& avx2_table_unchecked() noexcept;
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(MLEGO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__)) && \
    (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& pick_default() noexcept {
  const KernelTable* wide = avx2_table();
  if (const char* env = std::getenv("MLEGO_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return scalar_table();
    if (want == "avx2" && wide != nullptr) return *wide;
  }
  return wide != nullptr ? *wide : scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> current{&pick_default()};
  return current;
}

}  // namespace

const KernelTable* avx2_table() noexcept {
#if defined(MLEGO_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

void set_active(const KernelTable& table) noexcept {
  slot().store(&table, std::memory_order_release);
}

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* wide = avx2_table()) out.push_back(wide);
  return out;
}

}  // namespace mlego::kernels
