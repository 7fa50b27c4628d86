#pragma once

#include <cstdint>
#include <random>

namespace mlego {

// Thin wrapper over mt19937_64 with a hand-rolled [0,1) conversion so draws
// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint32_t below(std::uint32_t n) noexcept {
    return static_cast<std::uint32_t>(uniform() * n);
  }

  std::uint64_t next() noexcept { return engine_(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Mix a base seed with a stream index so per-document or per-partition
// generators are decorrelated but reproducible.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mlego
