// Spin partitions and the families of invariant Bernoulli measures they
// define: the minimal partition for connected cycles, the general
// multi-family enumeration, and the reduction of non-bijective maps.
#ifndef EXCHANGE_PARTITIONS_HPP
#define EXCHANGE_PARTITIONS_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "exchange/cycles.hpp"
#include "exchange/rng.hpp"
#include "exchange/types.hpp"
#include "exchange/union_find.hpp"

namespace exchange {

class SearchCapExceeded : public ResourceCapError {
public:
  explicit SearchCapExceeded(const std::string& what) : ResourceCapError(what) {}
};

// A partition of X stored as block id per spin. Canonical form numbers
// blocks by first occurrence, so equal partitions compare equal.
struct SpinPartition {
  std::vector<int> block_of;
  int block_count = 0;

  static SpinPartition singletons(int m) {
    SpinPartition p;
    p.block_of.resize(m);
    std::iota(p.block_of.begin(), p.block_of.end(), 0);
    p.block_count = m;
    return p;
  }

  static SpinPartition from_blocks(int m, const std::vector<std::vector<SpinIndex>>& blocks) {
    SpinPartition p;
    p.block_of.assign(m, -1);
    for (std::size_t k = 0; k < blocks.size(); ++k)
      for (SpinIndex v : blocks[k]) {
        if (v < 0 || v >= m || p.block_of[v] >= 0)
          throw ValidationError("blocks must cover each spin exactly once");
        p.block_of[v] = static_cast<int>(k);
      }
    for (int v = 0; v < m; ++v)
      if (p.block_of[v] < 0)
        throw ValidationError("blocks must cover every spin");
    p.block_count = static_cast<int>(blocks.size());
    p.canonicalize();
    return p;
  }

  int size() const { return static_cast<int>(block_of.size()); }

  void canonicalize() {
    std::vector<int> remap(block_count == 0 ? size() : std::max(block_count, size()), -1);
    int next = 0;
    for (int& b : block_of) {
      if (remap[b] < 0)
        remap[b] = next++;
      b = remap[b];
    }
    block_count = next;
  }

  std::vector<std::vector<SpinIndex>> blocks() const {
    std::vector<std::vector<SpinIndex>> out(block_count);
    for (int v = 0; v < size(); ++v)
      out[block_of[v]].push_back(v);
    return out;
  }

  std::vector<int> block_sizes() const {
    std::vector<int> n(block_count, 0);
    for (int b : block_of)
      ++n[b];
    return n;
  }

  // True when this partition is finer than or equal to coarser: every block
  // here lies inside one block of coarser.
  bool refines(const SpinPartition& coarser) const {
    std::vector<int> image(block_count, -1);
    for (int v = 0; v < size(); ++v) {
      const int b = block_of[v];
      if (image[b] < 0)
        image[b] = coarser.block_of[v];
      else if (image[b] != coarser.block_of[v])
        return false;
    }
    return true;
  }

  friend bool operator==(const SpinPartition&, const SpinPartition&) = default;
  friend auto operator<=>(const SpinPartition& x, const SpinPartition& y) {
    return x.block_of <=> y.block_of;
  }
};

// A parametric family of Bernoulli measures: one value per block, value 0
// on the zero block when present, normalized over X.
struct IbmFamily {
  SpinPartition partition;
  int zero_block = -1;  // block index forced to measure 0, or -1

  int dimension() const {
    return partition.block_count - 1 - (zero_block >= 0 ? 1 : 0);
  }
};

inline IbmFamily family_from_partition(SpinPartition p, int zero_block = -1) {
  if (zero_block >= p.block_count)
    throw ValidationError("zero block index out of range");
  if (zero_block >= 0 && p.block_count < 2)
    throw ValidationError("a family with a zero block needs at least two blocks");
  return IbmFamily{std::move(p), zero_block};
}

// ---------------------------------------------------------------------------
// Agreement helper shared with the exhaustive oracle: a partition agrees
// with F when every cycle of F keeps a single unordered block pair.

inline bool partition_agrees(const SpinPartition& p, const std::vector<Cycle>& cycles) {
  for (const Cycle& c : cycles) {
    int bi = -1, bj = -1;
    bool first = true;
    for (const PairState& s : c.states) {
      int x = p.block_of[s.a], y = p.block_of[s.b];
      if (x > y)
        std::swap(x, y);
      if (first) {
        bi = x;
        bj = y;
        first = false;
      } else if (x != bi || y != bj) {
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Minimal partition when every cycle of F is connected (the unique finest
// partition agreeing with F). Implemented as a disjoint-set over spins:
// each symmetrized cycle closure forces its left side into one block and
// its right side into another (the same one when the closure is diagonal).

namespace detail {

struct SideConstraint {
  std::vector<SpinIndex> side0;
  std::vector<SpinIndex> side1;  // equal to side0 for diagonal closures
};

inline void apply_constraint(DisjointSet& ds, const SideConstraint& c) {
  for (std::size_t i = 1; i < c.side0.size(); ++i)
    ds.unite(c.side0[0], c.side0[i]);
  for (std::size_t i = 1; i < c.side1.size(); ++i)
    ds.unite(c.side1[0], c.side1[i]);
}

inline SpinPartition partition_from_uf(DisjointSet& ds) {
  SpinPartition p;
  p.block_of = ds.block_assignment();
  p.block_count = ds.component_count();
  p.canonicalize();
  return p;
}

// Symmetrized cycles, each reported once (a cycle and its mirror collapse
// to the same set), in order of their smallest state.
inline std::vector<std::vector<PairState>> symmetrized_cycles(const PairMap& f,
                                                              const std::vector<Cycle>& cycles) {
  const int m = f.spin_count();
  std::vector<char> used(m * m, 0);
  std::vector<std::vector<PairState>> out;
  for (const Cycle& c : cycles) {
    if (used[pair_index(c.states.front(), m)])
      continue;
    auto sym = symmetrize_cycle(c, f);
    for (const PairState& s : sym)
      used[pair_index(s, m)] = 1;
    out.push_back(std::move(sym));
  }
  return out;
}

}  // namespace detail

// `order` optionally permutes the processing sequence of the symmetrized
// cycles; the result is the same for every order.
//
// A disconnected cycle is accepted when one of its component closures is
// diagonal: the admissible host is then forced to be the square over the
// cycle's projection, so no choice arises (the a=b branch of the closure
// construction). Cycles with several components and no diagonal closure
// admit several hosts and are rejected here.
inline SpinPartition minimal_partition_connected(const PairMap& f,
                                                 const std::vector<int>* order = nullptr) {
  if (!f.is_symmetric() || !f.is_bijective())
    throw ValidationError("minimal partition requires a symmetric bijective map");
  const int m = f.spin_count();
  const auto sym = detail::symmetrized_cycles(f, decompose_cycles(f));
  std::vector<int> sequence(sym.size());
  std::iota(sequence.begin(), sequence.end(), 0);
  if (order) {
    if (order->size() != sym.size())
      throw ValidationError("order must permute the symmetrized cycles");
    sequence = *order;
  }

  DisjointSet ds(m);
  for (int idx : sequence) {
    const auto components = connected_components(sym[idx], m);
    std::vector<AdmissibleSet> closures;
    for (const auto& comp : components)
      closures.push_back(closure(comp, m));
    if (closures.size() == 1) {
      detail::apply_constraint(ds, {closures[0].left, closures[0].right});
      continue;
    }
    const bool forced_diagonal =
        std::any_of(closures.begin(), closures.end(),
                    [](const AdmissibleSet& a) { return a.diagonal; });
    if (!forced_diagonal)
      throw ValidationError(
          "map has a disconnected cycle with ambiguous orientation; use "
          "enumerate_families_general");
    std::vector<SpinIndex> all;
    for (const AdmissibleSet& a : closures) {
      all.insert(all.end(), a.left.begin(), a.left.end());
      all.insert(all.end(), a.right.begin(), a.right.end());
    }
    detail::apply_constraint(ds, {all, all});
  }
  return detail::partition_from_uf(ds);
}

// ---------------------------------------------------------------------------
// General enumeration: when a cycle is disconnected there is a binary
// orientation choice per extra connected component (which side of the
// cycle's admissible host it lands on). Candidates from all assignments
// are deduplicated and only the finest survive.

struct FamilyEnumeration {
  std::vector<SpinPartition> partitions;
  std::uint64_t assignments = 0;
};

inline FamilyEnumeration enumerate_families_general(const PairMap& f,
                                                    std::uint64_t cap_assignments = (1ULL << 20)) {
  if (!f.is_symmetric() || !f.is_bijective())
    throw ValidationError("family enumeration requires a symmetric bijective map");
  const int m = f.spin_count();
  const auto cycles = decompose_cycles(f);
  const auto sym = detail::symmetrized_cycles(f, cycles);

  // Per symmetrized cycle: the component closures and the choice count.
  struct CycleChoices {
    std::vector<AdmissibleSet> closures;
    int choices = 1;  // 2^(components-1), or 1 when a diagonal closure forces a single block
    bool forced_diagonal = false;
  };
  std::vector<CycleChoices> table;
  std::uint64_t total = 1;
  for (const auto& states : sym) {
    CycleChoices cc;
    for (const auto& comp : connected_components(states, m))
      cc.closures.push_back(closure(comp, m));
    cc.forced_diagonal =
        std::any_of(cc.closures.begin(), cc.closures.end(),
                    [](const AdmissibleSet& a) { return a.diagonal; });
    if (!cc.forced_diagonal && cc.closures.size() > 1)
      cc.choices = 1 << (cc.closures.size() - 1);
    table.push_back(std::move(cc));
    total *= table.back().choices;
    if (total > cap_assignments)
      throw SearchCapExceeded("orientation search needs " + std::to_string(total) +
                              " assignments, cap is " + std::to_string(cap_assignments));
  }

  std::vector<SpinPartition> candidates;
  std::vector<int> digit(table.size(), 0);
  for (std::uint64_t count = 0; count < total; ++count) {
    DisjointSet ds(m);
    for (std::size_t k = 0; k < table.size(); ++k) {
      const CycleChoices& cc = table[k];
      std::vector<SpinIndex> side0, side1;
      if (cc.forced_diagonal) {
        for (const AdmissibleSet& a : cc.closures) {
          side0.insert(side0.end(), a.left.begin(), a.left.end());
          side0.insert(side0.end(), a.right.begin(), a.right.end());
        }
        side1 = side0;
      } else {
        // Component 0 keeps its orientation; bits flip the rest.
        for (std::size_t c = 0; c < cc.closures.size(); ++c) {
          const bool flip = c > 0 && ((digit[k] >> (c - 1)) & 1);
          const AdmissibleSet& a = cc.closures[c];
          auto& lo = flip ? side1 : side0;
          auto& hi = flip ? side0 : side1;
          lo.insert(lo.end(), a.left.begin(), a.left.end());
          hi.insert(hi.end(), a.right.begin(), a.right.end());
        }
      }
      detail::SideConstraint constraint{side0, side1};
      detail::apply_constraint(ds, constraint);
      // A spin on both sides collapses the host to a diagonal block.
      std::sort(side0.begin(), side0.end());
      std::sort(side1.begin(), side1.end());
      std::vector<SpinIndex> shared;
      std::set_intersection(side0.begin(), side0.end(), side1.begin(), side1.end(),
                            std::back_inserter(shared));
      if (!shared.empty() && !side0.empty() && !side1.empty())
        ds.unite(side0.front(), side1.front());
    }
    candidates.push_back(detail::partition_from_uf(ds));

    // Advance the mixed-radix assignment counter.
    for (std::size_t k = 0; k < digit.size(); ++k) {
      if (++digit[k] < table[k].choices)
        break;
      digit[k] = 0;
    }
  }

  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // Keep only the finest candidates: drop P when some other candidate
  // strictly refines it.
  FamilyEnumeration out;
  out.assignments = total;
  for (const SpinPartition& p : candidates) {
    const bool dominated =
        std::any_of(candidates.begin(), candidates.end(), [&](const SpinPartition& q) {
          return q != p && q.refines(p);
        });
    if (!dominated)
      out.partitions.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Non-bijective maps: kill sets and reduction to the bijective case.

struct KillSetEnumeration {
  std::vector<std::vector<SpinIndex>> sets;
  bool truncated = false;
};

// Inclusion-minimal spin sets X0 such that every inessential state has a
// coordinate in X0, i.e. minimal vertex covers of the inessential-pair
// relation. Covers equal to all of X are dropped (no reduction remains).
inline KillSetEnumeration candidate_kill_sets(const PairMap& f, std::size_t cap = 64) {
  KillSetEnumeration out;
  if (f.is_bijective())
    return out;
  const int m = f.spin_count();
  const auto cls = classify_points(f);

  // Deduplicated unordered value pairs to cover.
  std::vector<std::pair<SpinIndex, SpinIndex>> pairs;
  for (const PairState& s : cls.inessential) {
    auto pr = std::minmax(s.a, s.b);
    pairs.emplace_back(pr.first, pr.second);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<std::vector<char>> covers;
  std::vector<char> chosen(m, 0);
  // Branch on the first uncovered pair; both endpoints explored.
  auto search = [&](auto&& self, std::size_t depth) -> void {
    if (covers.size() > 4096)
      return;  // hard stop; flagged below through the cap
    std::size_t first = pairs.size();
    for (std::size_t i = depth; i < pairs.size(); ++i)
      if (!chosen[pairs[i].first] && !chosen[pairs[i].second]) {
        first = i;
        break;
      }
    if (first == pairs.size()) {
      covers.push_back(chosen);
      return;
    }
    const auto [a, b] = pairs[first];
    chosen[a] = 1;
    self(self, first + 1);
    chosen[a] = 0;
    if (b != a) {
      chosen[b] = 1;
      self(self, first + 1);
      chosen[b] = 0;
    }
  };
  search(search, 0);

  std::sort(covers.begin(), covers.end());
  covers.erase(std::unique(covers.begin(), covers.end()), covers.end());

  // Filter to inclusion-minimal covers.
  auto subset = [m](const std::vector<char>& x, const std::vector<char>& y) {
    for (int v = 0; v < m; ++v)
      if (x[v] && !y[v])
        return false;
    return true;
  };
  std::vector<std::vector<SpinIndex>> minimal;
  for (const auto& c : covers) {
    bool is_minimal = true;
    for (const auto& other : covers)
      if (&other != &c && subset(other, c) && other != c) {
        is_minimal = false;
        break;
      }
    if (!is_minimal)
      continue;
    std::vector<SpinIndex> set;
    for (int v = 0; v < m; ++v)
      if (c[v])
        set.push_back(v);
    if (static_cast<int>(set.size()) == m)
      continue;
    minimal.push_back(std::move(set));
  }
  std::sort(minimal.begin(), minimal.end(), [](const auto& x, const auto& y) {
    if (x.size() != y.size())
      return x.size() < y.size();
    return x < y;
  });
  if (minimal.size() > cap) {
    minimal.resize(cap);
    out.truncated = true;
  }
  out.sets = std::move(minimal);
  return out;
}

struct ReducedMap {
  PairMap map;                    // bijective map on the kept spins
  std::vector<SpinIndex> kept;    // kept[i] = original index of reduced spin i
};

// Restriction of F to (X \ X0)^2, which must be F-invariant and bijective.
// X0 has to cover every inessential state, and no cycle may cross the
// boundary of the strip (X0 x X) u (X x X0); otherwise no measure vanishing
// exactly on X0 can be invariant and the reduction is rejected.
inline ReducedMap reduce_non_bijective(const PairMap& f, const std::vector<SpinIndex>& kill_set) {
  const int m = f.spin_count();
  std::vector<char> killed(m, 0);
  for (SpinIndex v : kill_set) {
    if (v < 0 || v >= m)
      throw ValidationError("kill set spin index out of range");
    killed[v] = 1;
  }
  const int kept_count = m - static_cast<int>(std::count(killed.begin(), killed.end(), 1));
  if (kept_count == 0)
    throw ValidationError("kill set covers every spin; nothing remains to reduce");

  const auto cls = classify_points(f);
  auto in_strip = [&](PairState s) { return killed[s.a] || killed[s.b]; };
  for (const PairState& s : cls.inessential)
    if (!in_strip(s))
      throw ValidationError("kill set misses inessential state (" + std::to_string(s.a) + "," +
                            std::to_string(s.b) + ")");
  for (const Cycle& c : cls.cycles) {
    const bool first_in = in_strip(c.states.front());
    for (const PairState& s : c.states)
      if (in_strip(s) != first_in)
        throw ValidationError("a cycle crosses the kill-set strip at (" + std::to_string(s.a) +
                              "," + std::to_string(s.b) +
                              "); no measure vanishing exactly on this set is invariant");
  }

  ReducedMap out;
  std::vector<int> new_index(m, -1);
  for (int v = 0; v < m; ++v)
    if (!killed[v]) {
      new_index[v] = static_cast<int>(out.kept.size());
      out.kept.push_back(v);
    }
  std::vector<PairState> table(kept_count * kept_count);
  for (int a = 0; a < m; ++a) {
    if (killed[a])
      continue;
    for (int b = 0; b < m; ++b) {
      if (killed[b])
        continue;
      const PairState t = f.apply({a, b});
      // Cyclic states off the strip map off the strip: checked above.
      if (killed[t.a] || killed[t.b])
        throw ValidationError("map leaves the reduced square at (" + std::to_string(a) + "," +
                              std::to_string(b) + ")");
      table[new_index[a] * kept_count + new_index[b]] = {new_index[t.a], new_index[t.b]};
    }
  }
  out.map = PairMap::from_table(kept_count, std::move(table));
  if (!out.map.is_bijective())
    throw ValidationError("reduced map is not bijective; kill set does not isolate the cycles");
  return out;
}

// ---------------------------------------------------------------------------
// Generic member measures of a family.

// Constant on blocks, zero on the zero block, normalized over X, with all
// block values distinct and all pairwise products distinct (so the level
// sets of nu^2 are exactly the induced pair blocks). Deterministic by seed.
inline SpinMeasure sample_generic_measure(const IbmFamily& fam, std::uint64_t seed,
                                          int max_tries = 1000) {
  const int m = fam.partition.size();
  const auto sizes = fam.partition.block_sizes();
  const int k = fam.partition.block_count;
  Rng rng(splitmix64(seed));

  for (int attempt = 0; attempt < max_tries; ++attempt) {
    std::vector<double> value(k, 0.0);
    double norm = 0.0;
    for (int b = 0; b < k; ++b) {
      if (b == fam.zero_block)
        continue;
      value[b] = rng.uniform(0.05, 1.0);
      norm += value[b] * sizes[b];
    }
    for (int b = 0; b < k; ++b)
      if (b != fam.zero_block)
        value[b] /= norm;

    // General situation check: distinct values, distinct pairwise products
    // among the non-zero blocks, with a healthy separation margin.
    std::vector<double> products;
    bool ok = true;
    for (int i = 0; i < k && ok; ++i) {
      if (i == fam.zero_block)
        continue;
      for (int j = i; j < k; ++j) {
        if (j == fam.zero_block)
          continue;
        products.push_back(value[i] * value[j]);
      }
    }
    std::sort(products.begin(), products.end());
    for (std::size_t i = 0; i + 1 < products.size(); ++i)
      if (close_rel(products[i], products[i + 1], 1e-3)) {
        ok = false;
        break;
      }
    if (!ok)
      continue;

    std::vector<double> probs(m);
    for (int v = 0; v < m; ++v)
      probs[v] = value[fam.partition.block_of[v]];
    // Normalization is exact up to rounding; renormalize the tail error.
    double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (double& p : probs)
      p /= sum;
    return SpinMeasure::from_probs(std::move(probs));
  }
  throw ValidationError("could not sample a general situation measure; family is degenerate");
}

}  // namespace exchange

#endif  // EXCHANGE_PARTITIONS_HPP
