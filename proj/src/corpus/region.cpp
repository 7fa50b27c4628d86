#include "mlego/corpus/region.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlego/common/error.hpp"
#include "mlego/corpus/attribute.hpp"

namespace mlego::corpus {

void Region::validate() const {
  for (const auto& [name, iv] : ranges) {
    if (std::isnan(iv.lo) || std::isnan(iv.hi) || !iv.valid())
      throw InvalidArgument("empty interval on '" + name + "'");
  }
  for (const auto& [name, set] : categories) {
    if (set.empty()) throw InvalidArgument("empty category set on '" + name + "'");
  }
}

namespace {

nlohmann::json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

double bound_from_json(const nlohmann::json& j, double unbounded) {
  if (j.is_null()) return unbounded;
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return static_cast<double>(parse_timestamp(j.get<std::string>()));
  throw InvalidArgument("range bound must be a number, a timestamp string or null");
}

}  // namespace

nlohmann::json Region::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, iv] : ranges)
    j[name] = {{"range", {bound_to_json(iv.lo), bound_to_json(iv.hi)}}};
  for (const auto& [name, set] : categories)
    j[name] = {{"in", std::vector<std::string>(set.begin(), set.end())}};
  return j;
}

Region Region::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("predicate must be a JSON object");
  Region r;
  for (const auto& [name, clause] : j.items()) {
    if (!clause.is_object()) throw InvalidArgument("clause for '" + name + "' must be an object");
    if (clause.contains("range")) {
      const auto& rg = clause["range"];
      if (!rg.is_array() || rg.size() != 2)
        throw InvalidArgument("range for '" + name + "' must be [lo, hi]");
      r.ranges[name] = Interval{bound_from_json(rg[0], -kUnbounded), bound_from_json(rg[1], kUnbounded)};
    } else if (clause.contains("in")) {
      const auto& in = clause["in"];
      if (!in.is_array()) throw InvalidArgument("'in' for '" + name + "' must be an array");
      CategorySet set;
      for (const auto& v : in) {
        if (!v.is_string()) throw InvalidArgument("category values must be strings");
        set.insert(v.get<std::string>());
      }
      r.categories[name] = std::move(set);
    } else {
      throw InvalidArgument("clause for '" + name + "' needs 'range' or 'in'");
    }
  }
  r.validate();
  return r;
}

std::string Region::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [name, iv] : ranges) {
    os << (first ? "" : " & ") << name << "∈[" << iv.lo << "," << iv.hi << ")";
    first = false;
  }
  for (const auto& [name, set] : categories) {
    os << (first ? "" : " & ") << name << "∈{";
    bool f2 = true;
    for (const auto& v : set) {
      os << (f2 ? "" : ",") << v;
      f2 = false;
    }
    os << "}";
    first = false;
  }
  if (first) os << "*";
  return os.str();
}

bool intersects(const Region& a, const Region& b) {
  for (const auto& [name, iv] : a.ranges) {
    auto it = b.ranges.find(name);
    if (it != b.ranges.end() && !iv.intersects(it->second)) return false;
  }
  for (const auto& [name, set] : a.categories) {
    auto it = b.categories.find(name);
    if (it == b.categories.end()) continue;
    const bool any = std::any_of(set.begin(), set.end(),
                                 [&](const std::string& v) { return it->second.count(v) > 0; });
    if (!any) return false;
  }
  return true;
}

std::optional<Region> intersect(const Region& a, const Region& b) {
  Region out = a;
  for (const auto& [name, iv] : b.ranges) {
    auto [it, inserted] = out.ranges.emplace(name, iv);
    if (!inserted) {
      it->second.lo = std::max(it->second.lo, iv.lo);
      it->second.hi = std::min(it->second.hi, iv.hi);
      if (!it->second.valid()) return std::nullopt;
    }
  }
  for (const auto& [name, set] : b.categories) {
    auto [it, inserted] = out.categories.emplace(name, set);
    if (!inserted) {
      CategorySet both;
      std::set_intersection(it->second.begin(), it->second.end(), set.begin(), set.end(),
                            std::inserter(both, both.begin()));
      if (both.empty()) return std::nullopt;
      it->second = std::move(both);
    }
  }
  return out;
}

bool contains(const Region& outer, const Region& inner) {
  for (const auto& [name, iv] : outer.ranges) {
    auto it = inner.ranges.find(name);
    if (it == inner.ranges.end() || !iv.covers(it->second)) return false;
  }
  for (const auto& [name, set] : outer.categories) {
    auto it = inner.categories.find(name);
    if (it == inner.categories.end()) return false;
    if (!std::includes(set.begin(), set.end(), it->second.begin(), it->second.end())) return false;
  }
  return true;
}

namespace {

// Rectilinear grid over at most two ordered dimensions and any number of
// categorical attributes. Cells never straddle a boundary of any input
// region, so each cell is either inside or outside every input.
class Grid {
 public:
  Grid(const Region& universe, std::span<const Region> regions, const CategoryDomains& domains) {
    std::set<std::string> dims, cats;
    for (const auto& [n, _] : universe.ranges) dims.insert(n);
    for (const auto& [n, _] : universe.categories) cats.insert(n);
    for (const auto& r : regions) {
      for (const auto& [n, _] : r.ranges) dims.insert(n);
      for (const auto& [n, _] : r.categories) cats.insert(n);
    }
    if (dims.size() > 2)
      throw InvalidArgument("region arithmetic supports at most 2 ordered dimensions, got " +
                            std::to_string(dims.size()));
    dims_.assign(dims.begin(), dims.end());
    cats_.assign(cats.begin(), cats.end());

    for (const auto& d : dims_) {
      Interval extent;
      if (auto it = universe.ranges.find(d); it != universe.ranges.end()) extent = it->second;
      std::vector<double> cuts{extent.lo, extent.hi};
      for (const auto& r : regions) {
        if (auto it = r.ranges.find(d); it != r.ranges.end()) {
          if (extent.contains(it->second.lo)) cuts.push_back(it->second.lo);
          if (it->second.hi > extent.lo && it->second.hi < extent.hi) cuts.push_back(it->second.hi);
        }
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      cuts_.push_back(std::move(cuts));
    }

    for (const auto& a : cats_) {
      CategorySet values;
      bool bounded_universe = false;
      if (auto it = universe.categories.find(a); it != universe.categories.end()) {
        values = it->second;
        bounded_universe = true;
      } else if (auto dit = domains.find(a); dit != domains.end()) {
        values = dit->second;
      } else {
        // No domain: the union of mentioned values is only a valid universe
        // when every region constrains this attribute.
        for (const auto& r : regions) {
          auto it = r.categories.find(a);
          if (it == r.categories.end())
            throw InvalidArgument("category domain for '" + a + "' required");
          values.insert(it->second.begin(), it->second.end());
        }
        bounded_universe = true;
      }
      // Group values by which regions admit them.
      std::map<std::vector<bool>, CategorySet> by_signature;
      for (const auto& v : values) {
        std::vector<bool> sig(regions.size());
        for (std::size_t i = 0; i < regions.size(); ++i) {
          auto it = regions[i].categories.find(a);
          sig[i] = it == regions[i].categories.end() || it->second.count(v) > 0;
        }
        by_signature[sig].insert(v);
      }
      std::vector<CategorySet> atoms;
      for (auto& [_, set] : by_signature) atoms.push_back(std::move(set));
      atoms_.push_back(std::move(atoms));
      whole_.push_back(!bounded_universe);
      universe_size_.push_back(values.size());
    }
  }

  std::size_t dim_count() const { return dims_.size(); }
  std::size_t cells_along(std::size_t d) const { return cuts_[d].size() - 1; }
  std::size_t atoms_of(std::size_t c) const { return atoms_[c].size(); }
  std::size_t cat_count() const { return cats_.size(); }

  bool empty() const {
    for (const auto& c : cuts_)
      if (c.size() < 2) return true;
    for (const auto& a : atoms_)
      if (a.empty()) return true;
    return false;
  }

  Interval interval(std::size_t d, std::size_t lo_idx, std::size_t hi_idx) const {
    return Interval{cuts_[d][lo_idx], cuts_[d][hi_idx]};
  }

  bool region_contains_cell(const Region& r, const std::vector<std::size_t>& dim_idx,
                            const std::vector<std::size_t>& atom_idx) const {
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      auto it = r.ranges.find(dims_[d]);
      if (it == r.ranges.end()) continue;
      if (!it->second.covers(interval(d, dim_idx[d], dim_idx[d] + 1))) return false;
    }
    for (std::size_t c = 0; c < cats_.size(); ++c) {
      auto it = r.categories.find(cats_[c]);
      if (it == r.categories.end()) continue;
      const auto& atom = atoms_[c][atom_idx[c]];
      if (it->second.count(*atom.begin()) == 0) return false;
    }
    return true;
  }

  Region make_region(const std::vector<std::pair<std::size_t, std::size_t>>& spans,
                     const std::vector<std::size_t>& atom_idx) const {
    Region r;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      const Interval iv = interval(d, spans[d].first, spans[d].second);
      if (std::isinf(iv.lo) && std::isinf(iv.hi)) continue;
      r.ranges[dims_[d]] = iv;
    }
    for (std::size_t c = 0; c < cats_.size(); ++c) {
      const auto& atom = atoms_[c][atom_idx[c]];
      if (whole_[c] && atom.size() == universe_size_[c]) continue;
      r.categories[cats_[c]] = atom;
    }
    return r;
  }

 private:
  std::vector<std::string> dims_;
  std::vector<std::string> cats_;
  std::vector<std::vector<double>> cuts_;
  std::vector<std::vector<CategorySet>> atoms_;
  std::vector<bool> whole_;
  std::vector<std::size_t> universe_size_;
};

struct Cell {
  std::vector<std::size_t> dim_idx;
  std::vector<std::size_t> atom_idx;
  std::vector<std::uint32_t> containers;
};

// Walks every cell, labels it with the indices of the regions containing it,
// then merges runs of neighbouring cells that share a label: first along the
// first dimension, then along the second.
template <class Keep>
std::vector<std::pair<Region, std::vector<std::uint32_t>>> decompose(
    const Grid& grid, std::span<const Region> regions, Keep keep) {
  std::vector<std::pair<Region, std::vector<std::uint32_t>>> out;
  if (grid.empty()) return out;

  const std::size_t nd = grid.dim_count();
  const std::size_t nc = grid.cat_count();
  std::vector<std::size_t> radix;
  for (std::size_t d = 0; d < nd; ++d) radix.push_back(grid.cells_along(d));
  for (std::size_t c = 0; c < nc; ++c) radix.push_back(grid.atoms_of(c));

  // key: (atom indices, second-dim index) -> runs along first dim.
  using Label = std::vector<std::uint32_t>;
  struct Run {
    std::size_t lo, hi;
    Label label;
  };
  std::map<std::pair<std::vector<std::size_t>, std::size_t>, std::vector<Run>> rows;

  std::vector<std::size_t> counter(radix.size(), 0);
  while (true) {
    Cell cell;
    cell.dim_idx.assign(counter.begin(), counter.begin() + static_cast<long>(nd));
    cell.atom_idx.assign(counter.begin() + static_cast<long>(nd), counter.end());
    for (std::size_t i = 0; i < regions.size(); ++i)
      if (grid.region_contains_cell(regions[i], cell.dim_idx, cell.atom_idx))
        cell.containers.push_back(static_cast<std::uint32_t>(i));
    if (keep(cell.containers)) {
      const std::size_t first = nd > 0 ? cell.dim_idx[0] : 0;
      const std::size_t second = nd > 1 ? cell.dim_idx[1] : 0;
      auto& runs = rows[{cell.atom_idx, second}];
      if (!runs.empty() && runs.back().hi == first && runs.back().label == cell.containers) {
        runs.back().hi = first + 1;
      } else {
        runs.push_back(Run{first, first + 1, cell.containers});
      }
    }
    // Increment mixed-radix counter; first dimension varies fastest.
    std::size_t pos = 0;
    while (pos < counter.size()) {
      if (++counter[pos] < radix[pos]) break;
      counter[pos] = 0;
      ++pos;
    }
    if (pos == counter.size()) break;
  }

  // Merge runs along the second dimension.
  struct Block {
    std::size_t lo0, hi0, lo1, hi1;
    Label label;
  };
  std::map<std::vector<std::size_t>, std::vector<Block>> blocks_by_atoms;
  for (auto& [key, runs] : rows) {
    auto& blocks = blocks_by_atoms[key.first];
    for (auto& run : runs) {
      bool merged = false;
      for (auto& b : blocks) {
        if (b.lo0 == run.lo && b.hi0 == run.hi && b.hi1 == key.second && b.label == run.label) {
          b.hi1 = key.second + 1;
          merged = true;
          break;
        }
      }
      if (!merged) blocks.push_back(Block{run.lo, run.hi, key.second, key.second + 1, run.label});
    }
  }

  for (auto& [atoms, blocks] : blocks_by_atoms) {
    for (auto& b : blocks) {
      std::vector<std::pair<std::size_t, std::size_t>> spans;
      if (nd > 0) spans.emplace_back(b.lo0, b.hi0);
      if (nd > 1) spans.emplace_back(b.lo1, b.hi1);
      out.emplace_back(grid.make_region(spans, atoms), std::move(b.label));
    }
  }
  return out;
}

}  // namespace

std::vector<Region> region_difference(const Region& query, std::span<const Region> covered,
                                      const CategoryDomains& domains) {
  std::vector<Region> clipped;
  for (const auto& c : covered)
    if (auto both = intersect(query, c)) clipped.push_back(std::move(*both));
  if (clipped.empty()) return {query};

  const Grid grid(query, clipped, domains);
  std::vector<Region> out;
  for (auto& [region, _] :
       decompose(grid, clipped, [](const std::vector<std::uint32_t>& c) { return c.empty(); })) {
    // Keep the query's own clauses on attributes the grid did not split.
    if (auto r = intersect(query, region)) out.push_back(std::move(*r));
  }
  return out;
}

std::vector<Fragment> overlay(std::span<const Region> regions, const CategoryDomains& domains) {
  std::vector<Fragment> out;
  if (regions.empty()) return out;
  const Grid grid(Region{}, regions, domains);
  for (auto& [region, label] :
       decompose(grid, regions, [](const std::vector<std::uint32_t>& c) { return !c.empty(); })) {
    const int mult = static_cast<int>(label.size());
    out.push_back(Fragment{std::move(region), mult, std::move(label)});
  }
  return out;
}

}  // namespace mlego::corpus
