// Structural analysis of the pair map F on S: cycle decomposition,
// cyclic/inessential classification, chain connectivity, and minimal
// admissible covers (closures).
#ifndef EXCHANGE_CYCLES_HPP
#define EXCHANGE_CYCLES_HPP

#include <algorithm>
#include <optional>
#include <vector>

#include "exchange/types.hpp"
#include "exchange/union_find.hpp"

namespace exchange {

// One orbit of F: F maps states[i] to states[(i+1) mod n].
struct Cycle {
  std::vector<PairState> states;

  int length() const { return static_cast<int>(states.size()); }
};

struct CyclicClassification {
  std::vector<Cycle> cycles;
  std::vector<PairState> inessential;  // sorted row-major

  int cyclic_count() const {
    int n = 0;
    for (const Cycle& c : cycles)
      n += c.length();
    return n;
  }
};

// An admissible subset of S: (X1 x X2) u (X2 x X1), with X1 = X2 (diagonal)
// or X1 and X2 disjoint. Sides are kept sorted; for non-diagonal sets the
// left side is the one containing the smaller spin.
struct AdmissibleSet {
  std::vector<SpinIndex> left;
  std::vector<SpinIndex> right;
  bool diagonal = false;

  void canonicalize() {
    std::sort(left.begin(), left.end());
    std::sort(right.begin(), right.end());
    if (diagonal)
      right = left;
    else if (!right.empty() && (left.empty() || right.front() < left.front()))
      std::swap(left, right);
  }

  bool contains(PairState s) const {
    const bool al = std::binary_search(left.begin(), left.end(), s.a);
    const bool ar = std::binary_search(right.begin(), right.end(), s.a);
    const bool bl = std::binary_search(left.begin(), left.end(), s.b);
    const bool br = std::binary_search(right.begin(), right.end(), s.b);
    return (al && br) || (ar && bl);
  }

  // Materializes the state set, sorted row-major.
  std::vector<PairState> states() const {
    std::vector<PairState> out;
    for (SpinIndex a : left)
      for (SpinIndex b : right)
        out.push_back({a, b});
    if (!diagonal)
      for (SpinIndex a : right)
        for (SpinIndex b : left)
          out.push_back({a, b});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  friend bool operator==(const AdmissibleSet&, const AdmissibleSet&) = default;
};

// ---------------------------------------------------------------------------

// Cycle decomposition of a bijective F. Start states are scanned in
// row-major order of S, so each cycle begins at its smallest state.
inline std::vector<Cycle> decompose_cycles(const PairMap& f) {
  if (!f.is_bijective())
    throw ValidationError("cycle decomposition requires a bijective map; use classify_points instead");
  const int m = f.spin_count();
  const int n = m * m;
  std::vector<char> seen(n, 0);
  std::vector<Cycle> cycles;
  for (int start = 0; start < n; ++start) {
    if (seen[start])
      continue;
    Cycle c;
    PairState s = pair_from_index(start, m);
    do {
      seen[pair_index(s, m)] = 1;
      c.states.push_back(s);
      s = f.apply(s);
    } while (pair_index(s, m) != start);
    cycles.push_back(std::move(c));
  }
  return cycles;
}

// Cyclic/inessential split for an arbitrary map on S. A state is cyclic
// when some iterate of F returns to it; everything else eventually feeds
// into a cycle and is inessential.
inline CyclicClassification classify_points(const PairMap& f) {
  const int m = f.spin_count();
  const int n = m * m;

  // Peel states with no remaining preimage; whatever survives lies on cycles.
  std::vector<int> indegree(n, 0);
  for (int i = 0; i < n; ++i)
    ++indegree[pair_index(f.apply_index(i), m)];
  std::vector<int> queue;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0)
      queue.push_back(i);
  std::vector<char> inessential(n, 0);
  while (!queue.empty()) {
    const int i = queue.back();
    queue.pop_back();
    inessential[i] = 1;
    const int next = pair_index(f.apply_index(i), m);
    if (--indegree[next] == 0)
      queue.push_back(next);
  }

  CyclicClassification out;
  std::vector<char> seen(n, 0);
  for (int start = 0; start < n; ++start) {
    if (inessential[start]) {
      out.inessential.push_back(pair_from_index(start, m));
      continue;
    }
    if (seen[start])
      continue;
    Cycle c;
    PairState s = pair_from_index(start, m);
    do {
      seen[pair_index(s, m)] = 1;
      c.states.push_back(s);
      s = f.apply(s);
    } while (pair_index(s, m) != start);
    out.cycles.push_back(std::move(c));
  }
  return out;
}

// Connected components of B under the chain relation: two states are linked
// when a chain inside B exists whose consecutive states share a spin value.
// Components are reported with their smallest state first, ordered by that
// state.
inline std::vector<std::vector<PairState>> connected_components(std::vector<PairState> states,
                                                                int m) {
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  if (states.empty())
    return {};

  // Treat each state as an edge {a,b} in a graph on spin values; chain
  // connectivity of states is component membership of their value edges.
  DisjointSet ds(m);
  for (const PairState& s : states)
    ds.unite(s.a, s.b);

  std::vector<std::vector<PairState>> components;
  std::vector<int> component_of_root(m, -1);
  for (const PairState& s : states) {
    const int root = ds.find(s.a);
    if (component_of_root[root] < 0) {
      component_of_root[root] = static_cast<int>(components.size());
      components.emplace_back();
    }
    components[component_of_root[root]].push_back(s);
  }
  return components;
}

// Minimal admissible set covering a non-empty connected B. The two sides
// are the 2-coloring of B's spin values forced by putting the coordinates
// of each state on opposite sides; if a value is forced onto both sides
// the set collapses to the diagonal over B's projection.
inline AdmissibleSet closure(const std::vector<PairState>& connected_states, int m) {
  if (connected_states.empty())
    throw ValidationError("closure requires a non-empty set");
  {
    auto comps = connected_components(connected_states, m);
    if (comps.size() != 1)
      throw ValidationError("closure requires a connected set");
  }

  // side[v]: -1 unassigned, 0 left, 1 right.
  std::vector<int> side(m, -1);
  bool collapse = false;
  auto assign = [&](SpinIndex v, int s) {
    if (side[v] < 0)
      side[v] = s;
    else if (side[v] != s)
      collapse = true;
  };

  std::vector<PairState> work(connected_states);
  std::sort(work.begin(), work.end());
  work.erase(std::unique(work.begin(), work.end()), work.end());

  assign(work.front().a, 0);
  // Propagate until stable; the set is connected, so a few sweeps suffice.
  bool changed = true;
  while (changed && !collapse) {
    changed = false;
    for (const PairState& s : work) {
      if (s.a == s.b) {
        collapse = true;
        break;
      }
      if (side[s.a] >= 0 && side[s.b] < 0) {
        assign(s.b, 1 - side[s.a]);
        changed = true;
      } else if (side[s.b] >= 0 && side[s.a] < 0) {
        assign(s.a, 1 - side[s.b]);
        changed = true;
      } else if (side[s.a] >= 0 && side[s.b] >= 0 && side[s.a] == side[s.b]) {
        collapse = true;
        break;
      }
    }
  }

  AdmissibleSet out;
  if (collapse) {
    out.diagonal = true;
    std::vector<char> present(m, 0);
    for (const PairState& s : work) {
      present[s.a] = 1;
      present[s.b] = 1;
    }
    for (int v = 0; v < m; ++v)
      if (present[v])
        out.left.push_back(v);
    out.right = out.left;
  } else {
    for (int v = 0; v < m; ++v) {
      if (side[v] == 0)
        out.left.push_back(v);
      else if (side[v] == 1)
        out.right.push_back(v);
    }
  }
  out.canonicalize();
  return out;
}

// C u C^sym for a cycle of a symmetric bijective F. Checks that the mirror
// is again a union of full cycles and either equals C or is disjoint.
inline std::vector<PairState> symmetrize_cycle(const Cycle& cycle, const PairMap& f) {
  if (!f.is_bijective() || !f.is_symmetric())
    throw ValidationError("symmetrize_cycle requires a symmetric bijective map");
  std::vector<PairState> mirror;
  mirror.reserve(cycle.states.size());
  for (const PairState& s : cycle.states)
    mirror.push_back(swapped(s));
  // The mirror must itself be an orbit: F(j s) = j F(s).
  for (std::size_t i = 0; i < cycle.states.size(); ++i) {
    const PairState expect = swapped(f.apply(cycle.states[i]));
    if (f.apply(mirror[i]) != expect)
      throw ValidationError("mirror of a cycle is not a cycle; map is not symmetric");
  }
  std::vector<PairState> sym(cycle.states);
  std::sort(sym.begin(), sym.end());
  std::sort(mirror.begin(), mirror.end());
  const bool equal = sym == mirror;
  if (!equal) {
    std::vector<PairState> inter;
    std::set_intersection(sym.begin(), sym.end(), mirror.begin(), mirror.end(),
                          std::back_inserter(inter));
    if (!inter.empty())
      throw ValidationError("cycle and its mirror overlap without being equal");
    sym.insert(sym.end(), mirror.begin(), mirror.end());
    std::sort(sym.begin(), sym.end());
  }
  return sym;
}

}  // namespace exchange

#endif  // EXCHANGE_CYCLES_HPP
