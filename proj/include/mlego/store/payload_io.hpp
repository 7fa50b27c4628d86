#pragma once

#include <filesystem>

#include "mlego/common/matrix.hpp"

namespace mlego::store {

// 8-byte magic, u32 K, u32 V, then K*V little-endian float64, row-major.
void write_payload(const std::filesystem::path& file, const Matrix& m);
Matrix read_payload(const std::filesystem::path& file);

}  // namespace mlego::store
