#include "mlego/store/grid.hpp"

#include <algorithm>
#include <cmath>

#include "mlego/common/error.hpp"
#include "mlego/lda/train.hpp"

namespace mlego::store {

std::vector<corpus::Region> grid_regions(const corpus::Dataset& ds, std::size_t parts, const std::string& dim) {
  if (parts < 1) throw InvalidArgument("need at least one partition");
  if (parts > ds.num_docs()) throw InvalidArgument("more partitions than documents");
  if (!ds.schema().has_ordered(dim)) throw InvalidArgument("'" + dim + "' is not an ordered attribute");
  std::vector<double> v(ds.num_docs());
  for (std::size_t d = 0; d < v.size(); ++d) v[d] = ds.ordered_value(dim, static_cast<corpus::DocIndex>(d));
  std::sort(v.begin(), v.end());
  std::vector<corpus::Region> out;
  double lo = v.front();
  for (std::size_t i = 1; i <= parts; ++i) {
    const std::size_t end = i * v.size() / parts;
    const double hi = end < v.size() ? v[end] : std::nextafter(v.back(), corpus::kUnbounded);
    if (!(hi > lo)) continue;  // ties swallowed this slice
    corpus::Region r;
    r.ranges[dim] = {lo, hi};
    out.push_back(std::move(r));
    lo = hi;
  }
  return out;
}

std::vector<ModelId> materialize_grid(const corpus::Dataset& ds, Catalog& catalog, std::size_t parts,
                                             const std::string& dim, const lda::LdaConfig& cfg, lda::Algo algo) {
  cfg.validate();
  std::vector<ModelId> ids;
  for (const auto& r : grid_regions(ds, parts, dim)) {
    auto docs = ds.select_docs(r);
    if (ds.slice(docs).total_tokens() == 0) continue;
    auto t = lda::train(ds.slice(docs), cfg, algo);
    ids.push_back(catalog.materialize(t.payload, r, {ds.name(), cfg, 0, t.seconds}));
  }
  return ids;
}

}  // namespace mlego::store
