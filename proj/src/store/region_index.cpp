#include "mlego/store/region_index.hpp"

#include <algorithm>
#include <cmath>

namespace mlego::store {

IntervalTree::IntervalTree(std::vector<std::pair<corpus::Interval, std::uint32_t>> items) {
  size_ = items.size();
  root_ = build(std::move(items));
}

int IntervalTree::build(std::vector<std::pair<corpus::Interval, std::uint32_t>> items) {
  if (items.empty()) return -1;
  std::vector<double> ends;
  for (const auto& [iv, _] : items) {
    if (std::isfinite(iv.lo)) ends.push_back(iv.lo);
    if (std::isfinite(iv.hi)) ends.push_back(iv.hi);
  }
  Node node;
  if (!ends.empty()) {
    std::nth_element(ends.begin(), ends.begin() + static_cast<std::ptrdiff_t>((ends.size() - 1) / 2), ends.end());
    node.center = ends[(ends.size() - 1) / 2];
  }
  std::vector<std::pair<corpus::Interval, std::uint32_t>> left, right;
  for (auto& it : items) {
    if (it.first.hi <= node.center) left.push_back(it);
    else if (it.first.lo > node.center) right.push_back(it);
    else node.by_lo.push_back(it);
  }
  // No progress: keep everything here rather than recursing forever.
  if (left.size() == items.size() || right.size() == items.size()) {
    node.by_lo = std::move(items);
    left.clear();
    right.clear();
    node.center = std::nan("");
  }
  node.by_hi = node.by_lo;
  std::sort(node.by_lo.begin(), node.by_lo.end(), [](const auto& a, const auto& b) { return a.first.lo < b.first.lo; });
  std::sort(node.by_hi.begin(), node.by_hi.end(), [](const auto& a, const auto& b) { return a.first.hi > b.first.hi; });

  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  const int l = build(std::move(left));
  const int r = build(std::move(right));
  nodes_[self].left = l;
  nodes_[self].right = r;
  return self;
}

void IntervalTree::query(const corpus::Interval& q, std::vector<std::uint32_t>& out) const {
  if (root_ >= 0 && q.valid()) query(root_, q, out);
}

void IntervalTree::query(int idx, const corpus::Interval& q, std::vector<std::uint32_t>& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  if (std::isnan(n.center)) {
    for (const auto& [iv, id] : n.by_lo)
      if (iv.intersects(q)) out.push_back(id);
    return;
  }
  if (q.hi <= n.center) {
    for (const auto& [iv, id] : n.by_lo) {
      if (iv.lo >= q.hi) break;
      out.push_back(id);
    }
    if (n.left >= 0) query(n.left, q, out);
  } else if (q.lo > n.center) {
    for (const auto& [iv, id] : n.by_hi) {
      if (iv.hi <= q.lo) break;
      out.push_back(id);
    }
    if (n.right >= 0) query(n.right, q, out);
  } else {
    for (const auto& [_, id] : n.by_lo) out.push_back(id);
    if (n.left >= 0) query(n.left, q, out);
    if (n.right >= 0) query(n.right, q, out);
  }
}

RegionIndex::RegionIndex(const std::vector<corpus::Region>& regions) : count_(regions.size()) {
  std::map<std::string, std::vector<std::pair<corpus::Interval, std::uint32_t>>> items;
  for (const auto& r : regions) {
    for (const auto& [name, _] : r.ranges) items[name];
    for (const auto& [name, _] : r.categories) categorical_[name];
  }
  for (std::uint32_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    for (auto& [name, list] : items) {
      auto it = r.ranges.find(name);
      if (it == r.ranges.end()) ordered_[name].unconstrained.push_back(i);
      else list.emplace_back(it->second, i);
    }
    for (auto& [name, attr] : categorical_) {
      auto it = r.categories.find(name);
      if (it == r.categories.end()) {
        attr.unconstrained.push_back(i);
        continue;
      }
      for (const auto& v : it->second) attr.buckets[v].push_back(i);
    }
  }
  for (auto& [name, list] : items) ordered_[name].tree = IntervalTree(std::move(list));
}

std::vector<std::uint32_t> RegionIndex::overlapping(const corpus::Region& query) const {
  std::vector<std::uint32_t> result;
  bool filtered = false;
  std::vector<std::uint32_t> hits;
  auto narrow = [&] {
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    if (!filtered) {
      result = hits;
      filtered = true;
    } else {
      std::vector<std::uint32_t> both;
      std::set_intersection(result.begin(), result.end(), hits.begin(), hits.end(), std::back_inserter(both));
      result = std::move(both);
    }
  };
  for (const auto& [name, iv] : query.ranges) {
    auto it = ordered_.find(name);
    if (it == ordered_.end()) continue;
    hits = it->second.unconstrained;
    it->second.tree.query(iv, hits);
    narrow();
    if (result.empty()) return result;
  }
  for (const auto& [name, set] : query.categories) {
    auto it = categorical_.find(name);
    if (it == categorical_.end()) continue;
    hits = it->second.unconstrained;
    for (const auto& v : set) {
      auto b = it->second.buckets.find(v);
      if (b != it->second.buckets.end()) hits.insert(hits.end(), b->second.begin(), b->second.end());
    }
    narrow();
    if (result.empty()) return result;
  }
  if (!filtered) {
    result.resize(count_);
    for (std::uint32_t i = 0; i < count_; ++i) result[i] = i;
  }
  return result;
}

}  // namespace mlego::store
