#pragma once

#include <string>
#include <vector>

#include "mlego/corpus/dataset.hpp"
#include "mlego/lda/config.hpp"
#include "mlego/store/catalog.hpp"

namespace mlego::store {

// Equal-count slices of the documents sorted by `dim`, as half-open ranges
// that tile the dataset.
std::vector<corpus::Region> grid_regions(const corpus::Dataset& ds, std::size_t parts, const std::string& dim = "id");

// Trains one model per grid slice and stores it.
std::vector<ModelId> materialize_grid(const corpus::Dataset& ds, Catalog& catalog, std::size_t parts,
                                      const std::string& dim, const lda::LdaConfig& cfg, lda::Algo algo);

}  // namespace mlego::store
