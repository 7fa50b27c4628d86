#include "mlego/common/hash.hpp"

#include "mlego/common/error.hpp"

namespace mlego {

std::uint64_t from_hex(std::string_view s) {
  if (s.empty() || s.size() > 16) throw InvalidArgument("bad hex digest: " + std::string(s));
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9')
      v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F')
      v |= static_cast<std::uint64_t>(c - 'A' + 10);
    else
      throw InvalidArgument("bad hex digest: " + std::string(s));
  }
  return v;
}

}  // namespace mlego
