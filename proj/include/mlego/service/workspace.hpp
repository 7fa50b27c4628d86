#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mlego/corpus/dataset.hpp"
#include "mlego/lda/config.hpp"
#include "mlego/store/catalog.hpp"

namespace mlego::service {

/// A data directory: ingested datasets under datasets/<name>, the model
/// catalog under catalog/.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::vector<std::string> dataset_names() const;
  bool has_dataset(const std::string& name) const;
  // Throws NotFound.
  std::shared_ptr<const corpus::Dataset> dataset(const std::string& name) const;
  // Persists the dataset; throws InvalidArgument when the name is taken.
  std::shared_ptr<const corpus::Dataset> add_dataset(corpus::Dataset ds);
  store::Catalog& catalog() noexcept { return catalog_; }

 private:
  std::filesystem::path root_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const corpus::Dataset>> loaded_;
  store::Catalog catalog_;
};

// Letters, digits, '-' and '_'; used as a directory name.
void check_dataset_name(const std::string& name);

}  // namespace mlego::service
