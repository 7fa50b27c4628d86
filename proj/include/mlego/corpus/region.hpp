#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mlego::corpus {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Half-open interval [lo, hi) over an ordered attribute. Either end may be
/// infinite.
struct Interval {
  double lo = -kUnbounded;
  double hi = kUnbounded;

  bool contains(double v) const noexcept { return v >= lo && v < hi; }
  bool intersects(const Interval& o) const noexcept { return lo < o.hi && o.lo < hi; }
  bool covers(const Interval& o) const noexcept { return lo <= o.lo && o.hi <= hi; }
  bool valid() const noexcept { return lo < hi; }

  auto operator<=>(const Interval&) const = default;
};

using CategorySet = std::set<std::string>;

/// A conjunction of attribute constraints. An attribute with no clause is
/// unconstrained. Used for query predicates, model ranges, and the fragments
/// produced by region arithmetic.
struct Region {
  std::map<std::string, Interval> ranges;
  std::map<std::string, CategorySet> categories;

  bool is_unconstrained() const noexcept { return ranges.empty() && categories.empty(); }

  // Throws InvalidArgument for empty intervals or empty category sets.
  void validate() const;

  nlohmann::json to_json() const;
  // Accepts {"attr": {"range": [lo, hi]}, "cat": {"in": [..]}}; `null`
  // bounds are unbounded, string bounds are parsed as timestamps.
  static Region from_json(const nlohmann::json& j);

  std::string to_string() const;

  auto operator<=>(const Region&) const = default;
};

using Predicate = Region;

bool intersects(const Region& a, const Region& b);

// Intersection, or nullopt when empty.
std::optional<Region> intersect(const Region& a, const Region& b);

// True when every point of `inner` lies in `outer`.
bool contains(const Region& outer, const Region& inner);

/// Category universe per categorical attribute; needed to complement a
/// category clause when the query leaves that attribute unconstrained.
using CategoryDomains = std::map<std::string, CategorySet>;

/// Parts of `query` not covered by `covered`, by rectilinear grid
/// decomposition along the boundaries of the covered regions. Fragments are
/// pairwise disjoint and, together with covered ∩ query, tile the query.
/// Throws InvalidArgument when more than two ordered dimensions take part.
std::vector<Region> region_difference(const Region& query, std::span<const Region> covered,
                                      const CategoryDomains& domains = {});

/// Disjoint decomposition of the union of `regions`. Each fragment carries
/// the number of input regions containing it.
struct Fragment {
  Region region;
  int multiplicity = 0;
  std::vector<std::uint32_t> sources;  // indices of the input regions containing it
};
std::vector<Fragment> overlay(std::span<const Region> regions, const CategoryDomains& domains = {});

}  // namespace mlego::corpus
