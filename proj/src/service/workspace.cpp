#include "mlego/service/workspace.hpp"

#include <algorithm>
#include <cmath>

#include "mlego/common/error.hpp"

namespace fs = std::filesystem;

namespace mlego::service {

void check_dataset_name(const std::string& name) {
  const bool ok = !name.empty() && name.size() <= 64 && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
  if (!ok) throw InvalidArgument("dataset name must be 1-64 letters, digits, '-' or '_'");
}

Workspace::Workspace(fs::path root) : root_(std::move(root)), catalog_((fs::create_directories(root_), root_ / "catalog")) {
  fs::create_directories(root_ / "datasets");
}

std::vector<std::string> Workspace::dataset_names() const {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root_ / "datasets"))
    if (e.is_directory() && fs::exists(e.path() / "manifest.json") && e.path().filename().string()[0] != '.')
      out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

bool Workspace::has_dataset(const std::string& name) const {
  check_dataset_name(name);
  return fs::exists(root_ / "datasets" / name / "manifest.json");
}

std::shared_ptr<const corpus::Dataset> Workspace::dataset(const std::string& name) const {
  check_dataset_name(name);
  std::lock_guard lock(mu_);
  if (auto it = loaded_.find(name); it != loaded_.end()) return it->second;
  const auto dir = root_ / "datasets" / name;
  if (!fs::exists(dir / "manifest.json")) throw NotFound("unknown dataset '" + name + "'");
  auto ds = std::make_shared<const corpus::Dataset>(corpus::Dataset::load(dir));
  loaded_[name] = ds;
  return ds;
}

std::shared_ptr<const corpus::Dataset> Workspace::add_dataset(corpus::Dataset ds) {
  check_dataset_name(ds.name());
  std::lock_guard lock(mu_);
  const auto dir = root_ / "datasets" / ds.name();
  if (fs::exists(dir)) throw InvalidArgument("dataset '" + ds.name() + "' already exists");
  const auto tmp = root_ / "datasets" / ("." + ds.name() + ".tmp");
  fs::remove_all(tmp);
  ds.save(tmp);
  fs::rename(tmp, dir);
  auto shared = std::make_shared<const corpus::Dataset>(std::move(ds));
  loaded_[shared->name()] = shared;
  return shared;
}

}  // namespace mlego::service
