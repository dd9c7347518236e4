// Complete binary partial-sum tree over edge slots: O(log n) weight
// updates and proportional sampling for the event loop.
#ifndef EXCHANGE_SUM_TREE_HPP
#define EXCHANGE_SUM_TREE_HPP

#include <vector>

namespace exchange {

class SumTree {
public:
  SumTree() = default;
  explicit SumTree(int leaves) {
    cap_ = 1;
    while (cap_ < leaves)
      cap_ <<= 1;
    node_.assign(2 * cap_, 0.0);
    count_ = leaves;
  }

  int size() const { return count_; }
  double total() const { return node_.empty() ? 0.0 : node_[1]; }
  double leaf(int i) const { return node_[cap_ + i]; }

  void set(int i, double v) {
    int p = cap_ + i;
    node_[p] = v;
    for (p >>= 1; p >= 1; p >>= 1)
      node_[p] = node_[2 * p] + node_[2 * p + 1];
  }

  // Recompute internal sums from the leaves, clearing incremental drift.
  void rebuild() {
    for (int p = cap_ - 1; p >= 1; --p)
      node_[p] = node_[2 * p] + node_[2 * p + 1];
  }

  // Index of the leaf owning offset u in [0, total). Rounding can land on
  // an empty slot at the boundary; the caller resolves that case.
  int sample(double u) const {
    int p = 1;
    while (p < cap_) {
      const double left = node_[2 * p];
      if (u < left) {
        p = 2 * p;
      } else {
        u -= left;
        p = 2 * p + 1;
      }
    }
    return p - cap_;
  }

private:
  int cap_ = 0;
  int count_ = 0;
  std::vector<double> node_;
};

}  // namespace exchange

#endif  // EXCHANGE_SUM_TREE_HPP
