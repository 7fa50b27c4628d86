#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlego/corpus/region.hpp"

namespace mlego::store {

/// Static centred interval tree over half-open intervals.
class IntervalTree {
 public:
  IntervalTree() = default;
  // items: (interval, payload id)
  explicit IntervalTree(std::vector<std::pair<corpus::Interval, std::uint32_t>> items);

  // Appends ids of intervals intersecting q.
  void query(const corpus::Interval& q, std::vector<std::uint32_t>& out) const;
  std::size_t size() const noexcept { return size_; }

 private:
  struct Node {
    double center = 0;
    std::vector<std::pair<corpus::Interval, std::uint32_t>> by_lo;  // ascending lo
    std::vector<std::pair<corpus::Interval, std::uint32_t>> by_hi;  // descending hi
    int left = -1, right = -1;
  };
  int build(std::vector<std::pair<corpus::Interval, std::uint32_t>> items);
  void query(int node, const corpus::Interval& q, std::vector<std::uint32_t>& out) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  std::size_t size_ = 0;
};

/// Which of a fixed list of regions intersect a query region. One interval
/// tree per ordered attribute and one hash bucket map per categorical one;
/// regions without a clause on an attribute match any query on it.
class RegionIndex {
 public:
  RegionIndex() = default;
  explicit RegionIndex(const std::vector<corpus::Region>& regions);

  // Ascending positions into the constructor's list.
  std::vector<std::uint32_t> overlapping(const corpus::Region& query) const;
  std::size_t size() const noexcept { return count_; }

 private:
  struct OrderedAttr {
    IntervalTree tree;
    std::vector<std::uint32_t> unconstrained;
  };
  struct CategoricalAttr {
    std::unordered_map<std::string, std::vector<std::uint32_t>> buckets;
    std::vector<std::uint32_t> unconstrained;
  };
  std::size_t count_ = 0;
  std::map<std::string, OrderedAttr> ordered_;
  std::map<std::string, CategoricalAttr> categorical_;
};

}  // namespace mlego::store
