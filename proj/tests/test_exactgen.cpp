#include <catch2/catch_amalgamated.hpp>

#include <exchange/checker.hpp>
#include <exchange/exactgen.hpp>
#include <exchange/model.hpp>
#include <exchange/partitions.hpp>
#include <exchange/rng.hpp>

#include "test_maps.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace exchange;

namespace {

ProcessModel small_model(const PairMap& f, const std::vector<std::pair<int, int>>& edges,
                         int vertices, const std::vector<RateTable>& per_edge) {
  ProcessModel model;
  model.spins = SpinSpace::with_size(f.spin_count());
  model.map = f;
  model.vertex_count = vertices;
  for (std::size_t i = 0; i < edges.size(); ++i)
    model.edges.push_back({edges[i].first, edges[i].second, per_edge[i]});
  model.mode = GraphMode::Undirected;
  return validate_model(std::move(model));
}

ProcessModel small_model(const PairMap& f, const std::vector<std::pair<int, int>>& edges,
                         int vertices, const RateTable& rates) {
  return small_model(f, edges, vertices,
                     std::vector<RateTable>(edges.size(), rates));
}

// Rates constant on every cycle of F, so lambda(s) = lambda(F^{-1}(s)).
RateTable per_cycle_rates(const PairMap& f, Rng& rng) {
  RateTable t = RateTable::constant(f.spin_count(), 1.0);
  for (const Cycle& c : decompose_cycles(f)) {
    const double r = rng.uniform(0.5, 2.0);
    for (const PairState& s : c.states) {
      t.r[pair_index(s, f.spin_count())] = r;
      t.r[pair_index(swapped(s), f.spin_count())] = r;
    }
  }
  return t;
}

double entry(const GeneratorMatrix& q, std::int64_t from, std::int64_t to) {
  for (const auto& [c, rate] : q.rows[from])
    if (c == to)
      return rate;
  return 0.0;
}

}  // namespace

TEST_CASE("two-site swap generator") {
  ProcessModel model = small_model(PairMap::swap_map(2), path_edges(2), 2,
                                   RateTable::constant(2, 1.0));
  GeneratorMatrix q = build_generator(model);
  REQUIRE(q.states == 4);

  // Configuration index: vertex 0 is the least significant digit, so
  // (x0,x1) = (0,1) is index 2 and (1,0) is index 1.
  CHECK(entry(q, 2, 1) == 1.0);
  CHECK(entry(q, 1, 2) == 1.0);
  CHECK(q.diag[1] == -1.0);
  CHECK(q.diag[2] == -1.0);
  CHECK(q.rows[0].empty());
  CHECK(q.rows[3].empty());
  CHECK(q.diag[0] == 0.0);
  CHECK(q.max_rate == 1.0);
}

TEST_CASE("identity map yields the zero generator") {
  ProcessModel model = small_model(PairMap::identity(3), complete_edges(3), 3,
                                   RateTable::constant(3, 2.0));
  GeneratorMatrix q = build_generator(model);
  for (std::int64_t c = 0; c < q.states; ++c) {
    CHECK(q.rows[c].empty());
    CHECK(q.diag[c] == 0.0);
  }
}

TEST_CASE("generator rows sum to zero") {
  Rng rng(111);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(3));
    PairMap f = testmaps::random_symmetric_bijection(rng, m);
    auto edges = complete_edges(3);
    std::vector<RateTable> rates;
    for (std::size_t i = 0; i < edges.size(); ++i)
      rates.push_back(per_cycle_rates(f, rng));
    GeneratorMatrix q = build_generator(small_model(f, edges, 3, rates));
    for (std::int64_t c = 0; c < q.states; ++c)
      CHECK_THAT(q.row_sum(c), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("state cap guards generator construction") {
  ProcessModel model = small_model(PairMap::swap_map(4), path_edges(10), 10,
                                   RateTable::constant(4, 1.0));
  REQUIRE_THROWS_AS(build_generator(model, 1000), ResourceCapError);
}

TEST_CASE("product weights follow the configuration digits") {
  ProcessModel model = small_model(PairMap::swap_map(2), path_edges(3), 3,
                                   RateTable::constant(2, 1.0));
  GeneratorMatrix q = build_generator(model);
  SpinMeasure nu = SpinMeasure::from_probs({0.3, 0.7});
  auto mu = product_weights(nu, q);
  REQUIRE(mu.size() == 8);
  // Config index 6 = digits (0,1,1) from least significant vertex 0.
  CHECK_THAT(mu[6], Catch::Matchers::WithinRel(0.3 * 0.7 * 0.7, 1e-14));
  double total = 0.0;
  for (double w : mu)
    total += w;
  CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("swap dynamics leave every product measure invariant") {
  Rng rng(222);
  for (auto edges : {path_edges(2), path_edges(3), cycle_edges(3)}) {
    int vertices = 0;
    for (auto [v, w] : edges)
      vertices = std::max({vertices, v + 1, w + 1});
    ProcessModel model = small_model(PairMap::swap_map(3), edges, vertices,
                                     RateTable::constant(3, 1.0));
    GeneratorMatrix q = build_generator(model);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> p(3);
      double sum = 0.0;
      for (double& x : p)
        sum += (x = rng.uniform(0.1, 1.0));
      p[0] /= sum; p[1] /= sum; p[2] = 1.0 - p[0] - p[1];
      ExactResidual res = verify_invariant_exact(SpinMeasure::from_probs(p), q);
      CHECK(res.invariant);
      CHECK(res.residual <= res.tol);
    }
  }
}

TEST_CASE("uniform measure is exactly invariant for bijective maps") {
  Rng rng(333);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(3));
    PairMap f = testmaps::random_symmetric_bijection(rng, m);
    ProcessModel model = small_model(f, path_edges(3), 3, per_cycle_rates(f, rng));
    ExactResidual res = verify_invariant_exact(SpinMeasure::uniform(m),
                                               build_generator(model));
    CHECK(res.invariant);
  }
}

TEST_CASE("generic measure on the wrong family fails exactly") {
  PairMap f = testmaps::two_family_map();
  SpinMeasure bad = SpinMeasure::from_probs({0.1, 0.2, 0.3, 0.4});

  // Two sites: inflow 0.02 against outflow 0.12 across the 2-cycle.
  GeneratorMatrix g2 = build_generator(
      small_model(f, path_edges(2), 2, RateTable::constant(4, 1.0)));
  ExactResidual r2 = verify_invariant_exact(bad, g2);
  CHECK_FALSE(r2.invariant);
  CHECK_THAT(r2.residual, Catch::Matchers::WithinRel(0.10, 1e-12));

  GeneratorMatrix tri = build_generator(
      small_model(f, cycle_edges(3), 3, RateTable::constant(4, 1.0)));
  ExactResidual rt = verify_invariant_exact(bad, tri);
  CHECK_FALSE(rt.invariant);
  CHECK(rt.residual > 1e-3);

  // The good member of the first family stays invariant on both graphs.
  SpinMeasure good = SpinMeasure::from_probs({0.1, 0.4, 0.1, 0.4});
  CHECK(verify_invariant_exact(good, g2).invariant);
  CHECK(verify_invariant_exact(good, tri).invariant);
}

TEST_CASE("single-edge invariance transfers to the full graph") {
  // Summing generators over edges preserves a common invariant measure.
  Rng rng(444);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(2));
    PairMap f = testmaps::random_symmetric_bijection(rng, m);
    const int vertices = 3 + static_cast<int>(rng.below(2));
    auto edges = rng.below(2) == 0 ? complete_edges(vertices) : cycle_edges(vertices);
    std::vector<RateTable> rates;
    for (std::size_t i = 0; i < edges.size(); ++i)
      rates.push_back(per_cycle_rates(f, rng));

    FamilyEnumeration fe = enumerate_families_general(f);
    SpinMeasure nu = sample_generic_measure(
        family_from_partition(fe.partitions[rng.below(fe.partitions.size())]),
        900 + trial);

    bool edges_ok = true;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      ProcessModel one = small_model(f, {edges[i]}, vertices, {rates[i]});
      ExactResidual res = verify_invariant_exact(nu, build_generator(one));
      edges_ok = edges_ok && res.residual <= res.tol;
    }
    REQUIRE(edges_ok);

    ProcessModel full = small_model(f, edges, vertices, rates);
    GeneratorMatrix q = build_generator(full);
    ExactResidual res = verify_invariant_exact(nu, q);
    CAPTURE(trial, m, vertices);
    CHECK(res.residual <= 1e-11 * std::max(1.0, q.max_rate));
  }
}

TEST_CASE("communicating classes of the swap chain") {
  ProcessModel model = small_model(PairMap::swap_map(2), path_edges(2), 2,
                                   RateTable::constant(2, 1.0));
  ClassAnalysis cls = communicating_classes(build_generator(model));
  CHECK(cls.count == 3);
  CHECK(cls.closed_count == 3);
  CHECK_FALSE(cls.irreducible);
  // The two exchangeable configurations share a class.
  CHECK(cls.class_of[1] == cls.class_of[2]);
  CHECK(cls.class_of[0] != cls.class_of[3]);
}

TEST_CASE("class structure of the two-family chain on a path") {
  ProcessModel model = small_model(testmaps::two_family_map(), path_edges(3), 3,
                                   RateTable::constant(4, 1.0));
  GeneratorMatrix q = build_generator(model);
  ClassAnalysis cls = communicating_classes(q);
  // 36 frozen configurations, 8 two-state classes, 4 three-state classes.
  CHECK(cls.count == 48);
  CHECK(cls.closed_count == 48);

  std::vector<int> sizes(cls.count, 0);
  for (int c : cls.class_of)
    ++sizes[c];
  CHECK(std::count(sizes.begin(), sizes.end(), 1) == 36);
  CHECK(std::count(sizes.begin(), sizes.end(), 2) == 8);
  CHECK(std::count(sizes.begin(), sizes.end(), 3) == 4);

  CHECK(stationary_dimension(q) == 48);
}

TEST_CASE("stationary dimension matches closed class count") {
  ProcessModel swap2 = small_model(PairMap::swap_map(2), path_edges(2), 2,
                                   RateTable::constant(2, 1.0));
  CHECK(stationary_dimension(build_generator(swap2)) == 3);

  ProcessModel frozen = small_model(PairMap::identity(2), path_edges(2), 2,
                                    RateTable::constant(2, 1.0));
  CHECK(stationary_dimension(build_generator(frozen)) == 4);

  ProcessModel big = small_model(PairMap::swap_map(4), path_edges(6), 6,
                                 RateTable::constant(4, 1.0));
  REQUIRE_THROWS_AS(stationary_dimension(build_generator(big)), ResourceCapError);
}

TEST_CASE("exhaustive families for the standard maps") {
  auto singles2 = brute_force_families(PairMap::swap_map(2));
  REQUIRE(singles2.size() == 1);
  CHECK(singles2[0] == SpinPartition::singletons(2));

  auto ident = brute_force_families(PairMap::identity(3));
  REQUIRE(ident.size() == 1);
  CHECK(ident[0] == SpinPartition::singletons(3));

  auto two = brute_force_families(testmaps::two_family_map());
  REQUIRE(two.size() == 2);
  std::sort(two.begin(), two.end());
  CHECK(two[0] == SpinPartition::from_blocks(4, {{0, 2}, {1, 3}}));
  CHECK(two[1] == SpinPartition::from_blocks(4, {{0, 3}, {1, 2}}));
}

TEST_CASE("oracle guards its input") {
  REQUIRE_THROWS_AS(brute_force_families(testmaps::min3_map()), ValidationError);
  REQUIRE_THROWS_AS(brute_force_families(PairMap::swap_map(9)), ValidationError);
  CHECK(brute_force_families(PairMap::swap_map(9), 9).size() == 1);
}
