#ifndef EXCHANGE_UNION_FIND_HPP
#define EXCHANGE_UNION_FIND_HPP

#include <numeric>
#include <vector>

namespace exchange {

// Disjoint-set forest with union by size and path halving.
class DisjointSet {
public:
  explicit DisjointSet(int n) : parent_(n), size_(n, 1), components_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return false;
    if (size_[a] < size_[b])
      std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --components_;
    return true;
  }

  bool same(int a, int b) { return find(a) == find(b); }
  int component_count() const { return components_; }
  int element_count() const { return static_cast<int>(parent_.size()); }

  // Block ids numbered 0.. in order of each class's smallest element.
  std::vector<int> block_assignment() {
    const int n = element_count();
    std::vector<int> block(n, -1);
    int next = 0;
    for (int v = 0; v < n; ++v) {
      const int root = find(v);
      if (block[root] < 0)
        block[root] = next++;
      block[v] = block[root];
    }
    return block;
  }

private:
  std::vector<int> parent_;
  std::vector<int> size_;
  int components_;
};

}  // namespace exchange

#endif  // EXCHANGE_UNION_FIND_HPP
