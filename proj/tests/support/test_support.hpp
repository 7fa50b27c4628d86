#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mlego/corpus/dataset.hpp"

namespace mlego::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "mlego");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

// Dataset whose docs have ids 0..n-1, one token each drawn round-robin from
// a vocabulary of `vocab` words, plus a "time" ordered attribute (= id) and
// a "kind" category cycling through a, b, c.
corpus::Dataset id_dataset(std::size_t n, std::size_t vocab = 8);

corpus::OwnedCorpus owned(std::vector<std::vector<corpus::TokenId>> docs, std::size_t V);

}  // namespace mlego::testing
