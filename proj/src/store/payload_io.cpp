#include "mlego/store/payload_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mlego/common/error.hpp"

namespace mlego::store {

namespace {
constexpr char kMagic[8] = {'M', 'L', 'G', 'P', 'A', 'Y', '0', '1'};
static_assert(std::endian::native == std::endian::little, "payload files are little-endian");
}  // namespace

void write_payload(const std::filesystem::path& file, const Matrix& m) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  const auto K = static_cast<std::uint32_t>(m.rows()), V = static_cast<std::uint32_t>(m.cols());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&K), sizeof K);
  out.write(reinterpret_cast<const char*>(&V), sizeof V);
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  out.flush();
  if (!out) throw Error("failed writing " + file.string());
}

Matrix read_payload(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw NotFound("missing payload " + file.string());
  char magic[8];
  std::uint32_t K = 0, V = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&K), sizeof K);
  in.read(reinterpret_cast<char*>(&V), sizeof V);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw CorruptData("bad payload header in " + file.string());
  Matrix m(K, V);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw CorruptData("truncated payload " + file.string());
  return m;
}

}  // namespace mlego::store
