// End-to-end family analysis for a pair map: cycle census, dispatch
// between the connected fast path, the general enumeration, and the
// non-bijective reduction, plus per-family certification.
#ifndef EXCHANGE_ANALYSIS_HPP
#define EXCHANGE_ANALYSIS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "exchange/checker.hpp"
#include "exchange/cycles.hpp"
#include "exchange/exactgen.hpp"
#include "exchange/model.hpp"
#include "exchange/partitions.hpp"

namespace exchange {

struct CycleCensus {
  int cycle_count = 0;
  std::vector<int> lengths;        // per cycle, in discovery order
  int disconnected_count = 0;      // cycles whose states split into several chains
  bool all_connected = true;
  int inessential_count = 0;
};

struct FamilyRecord {
  IbmFamily family;                 // partition of the full spin set
  std::vector<SpinIndex> kill_set;  // spins carrying measure 0; empty for bijective maps
};

struct RejectedKillSet {
  std::vector<SpinIndex> kill_set;
  std::string reason;
};

struct AnalysisResult {
  bool symmetric = false;
  bool bijective = false;
  CycleCensus census;
  std::vector<FamilyRecord> families;
  std::vector<RejectedKillSet> rejected_kill_sets;
  bool kill_sets_truncated = false;
  std::uint64_t assignments = 0;  // orientation assignments explored
};

namespace detail {

inline CycleCensus census_of(const PairMap& f) {
  CycleCensus census;
  const auto cls = classify_points(f);
  census.cycle_count = static_cast<int>(cls.cycles.size());
  census.inessential_count = static_cast<int>(cls.inessential.size());
  for (const Cycle& c : cls.cycles) {
    census.lengths.push_back(static_cast<int>(c.states.size()));
    if (connected_components(c.states, f.spin_count()).size() > 1) {
      ++census.disconnected_count;
      census.all_connected = false;
    }
  }
  return census;
}

// Lift a partition of the kept spins to the full spin set, adding one zero
// block holding the killed spins.
inline IbmFamily lift_reduced_family(const SpinPartition& reduced,
                                     const std::vector<SpinIndex>& kept, int m) {
  SpinPartition full;
  full.block_of.assign(m, reduced.block_count);  // killed spins share the extra block
  for (std::size_t i = 0; i < kept.size(); ++i)
    full.block_of[kept[i]] = reduced.block_of[i];
  full.block_count = reduced.block_count + 1;
  full.canonicalize();
  int zero_block = -1;
  for (int v = 0; v < m; ++v) {
    bool is_kept = false;
    for (SpinIndex k : kept)
      if (k == v) {
        is_kept = true;
        break;
      }
    if (!is_kept) {
      zero_block = full.block_of[v];
      break;
    }
  }
  return family_from_partition(std::move(full), zero_block);
}

}  // namespace detail

inline AnalysisResult analyze_map(const PairMap& f,
                                  std::uint64_t cap_assignments = (1ULL << 20),
                                  std::size_t kill_cap = 64) {
  AnalysisResult out;
  out.symmetric = f.is_symmetric();
  out.bijective = f.is_bijective();
  out.census = detail::census_of(f);
  if (!out.symmetric)
    throw ValidationError("family analysis requires a symmetric map");

  if (out.bijective) {
    FamilyEnumeration families = enumerate_families_general(f, cap_assignments);
    out.assignments = families.assignments;
    for (SpinPartition& p : families.partitions)
      out.families.push_back({family_from_partition(std::move(p)), {}});
    return out;
  }

  // Non-bijective: measure must vanish on a kill set covering the
  // inessential states; each minimal kill set spawns its own families.
  KillSetEnumeration kills = candidate_kill_sets(f, kill_cap);
  out.kill_sets_truncated = kills.truncated;
  for (const auto& x0 : kills.sets) {
    ReducedMap reduced;
    try {
      reduced = reduce_non_bijective(f, x0);
    } catch (const ValidationError& e) {
      out.rejected_kill_sets.push_back({x0, e.what()});
      continue;
    }
    FamilyEnumeration families = enumerate_families_general(reduced.map, cap_assignments);
    out.assignments += families.assignments;
    for (const SpinPartition& p : families.partitions)
      out.families.push_back(
          {detail::lift_reduced_family(p, reduced.kept, f.spin_count()), x0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Certification: a generic sample from the family passes the measure
// criteria and, when the state space allows, the exact stationarity check
// on a built-in path of three vertices.

struct FamilyCertification {
  SpinMeasure sample{std::vector<double>{1.0}};
  bool measure_ok = false;    // agreement for bijective maps, pushforward otherwise
  bool exact_checked = false;
  double exact_residual = 0.0;
  bool exact_ok = false;
  bool certified = false;
};

inline FamilyCertification certify_family(const PairMap& f, const FamilyRecord& record,
                                          std::uint64_t seed, double tol = kDefaultTol,
                                          std::int64_t state_cap = kDefaultStateCap) {
  FamilyCertification cert;
  cert.sample = sample_generic_measure(record.family, seed);
  if (f.is_bijective())
    cert.measure_ok = check_agreement(cert.sample, f, tol).ok;
  else
    cert.measure_ok = check_pair_invariance(cert.sample, f, tol).ok;

  const std::int64_t states = static_cast<std::int64_t>(f.spin_count()) * f.spin_count() *
                              f.spin_count();
  if (states <= state_cap) {
    ProcessModel model;
    model.spins = SpinSpace::with_size(f.spin_count());
    model.map = f;
    model.vertex_count = 3;
    const RateTable unit = RateTable::constant(f.spin_count(), 1.0);
    for (const auto& [v, w] : path_edges(3))
      model.edges.push_back({v, w, unit});
    model.mode = GraphMode::Undirected;
    const GeneratorMatrix q = build_generator(validate_model(model), state_cap);
    const ExactResidual res = verify_invariant_exact(cert.sample, q);
    cert.exact_checked = true;
    cert.exact_residual = res.residual;
    cert.exact_ok = res.invariant;
  }
  cert.certified = cert.measure_ok && (!cert.exact_checked || cert.exact_ok);
  return cert;
}

}  // namespace exchange

#endif  // EXCHANGE_ANALYSIS_HPP
