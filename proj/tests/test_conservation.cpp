#include <catch2/catch_amalgamated.hpp>

#include <exchange/conservation.hpp>
#include <exchange/partitions.hpp>
#include <exchange/rng.hpp>

#include "test_maps.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace exchange;

namespace {

double projection_residual(const Eigen::VectorXd& v, const ConservationBasis& cb) {
  const Eigen::VectorXd proj = cb.basis * (cb.basis.transpose() * v);
  return (v - proj).norm();
}

// Conjugate F by a spin relabeling: F'(a,b) = sigma(F(sigma^{-1}a, sigma^{-1}b)).
PairMap conjugate(const PairMap& f, const std::vector<int>& sigma) {
  const int m = f.spin_count();
  std::vector<int> inv(m);
  for (int v = 0; v < m; ++v)
    inv[sigma[v]] = v;
  std::vector<PairState> table(m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const PairState t = f.apply({inv[a], inv[b]});
      table[a * m + b] = {sigma[t.a], sigma[t.b]};
    }
  return PairMap::from_table(m, table);
}

}  // namespace

TEST_CASE("swap map conserves every function") {
  for (int m : {2, 3, 4}) {
    ConservationBasis cb = conservation_laws(PairMap::swap_map(m));
    CHECK(cb.dimension == m);
  }
  CHECK(conservation_laws(PairMap::identity(4)).dimension == 4);
}

TEST_CASE("coordinatewise cycle map conserves only constants") {
  // E(f(x)) - E(x) must be a constant whose sum around the 3-cycle vanishes,
  // so E is f-invariant: dimension 1.
  ConservationBasis cb = conservation_laws(testmaps::shift3_map());
  REQUIRE(cb.dimension == 1);
  // The single basis vector is the normalized constant function.
  for (int v = 0; v < 3; ++v)
    CHECK_THAT(std::abs(cb.basis(v, 0)), Catch::Matchers::WithinAbs(1.0 / std::sqrt(3.0), 1e-12));
}

TEST_CASE("two-family map has one binding constraint") {
  // Only E(0)+E(1) = E(2)+E(3) binds: dimension 3.
  ConservationBasis cb = conservation_laws(testmaps::two_family_map());
  CHECK(cb.dimension == 3);
  Eigen::VectorXd probe(4);
  probe << 1.0, 2.0, 3.0, 0.0;  // satisfies the constraint
  CHECK(projection_residual(probe, cb) < 1e-9);
  probe << 1.0, 2.0, 3.0, 4.0;  // violates it
  CHECK(projection_residual(probe, cb) > 0.1);
}

TEST_CASE("returned basis is orthonormal") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(4));
    ConservationBasis cb = conservation_laws(testmaps::random_symmetric_bijection(rng, m));
    const Eigen::MatrixXd gram = cb.basis.transpose() * cb.basis;
    CHECK((gram - Eigen::MatrixXd::Identity(cb.dimension, cb.dimension)).norm() < 1e-12);
  }
}

TEST_CASE("constants are always conserved") {
  auto maps = testmaps::all_symmetric_bijections3();
  maps.push_back(testmaps::min3_map());
  maps.push_back(testmaps::const00_map());
  for (const PairMap& f : maps) {
    ConservationBasis cb = conservation_laws(f);
    REQUIRE(cb.dimension >= 1);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(f.spin_count());
    CHECK(projection_residual(ones, cb) < 1e-10);
  }
}

TEST_CASE("dimension is invariant under spin relabeling") {
  Rng rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 3 + static_cast<int>(rng.below(3));
    PairMap f = testmaps::random_symmetric_bijection(rng, m);
    std::vector<int> sigma(m);
    std::iota(sigma.begin(), sigma.end(), 0);
    for (std::size_t i = sigma.size(); i > 1; --i)
      std::swap(sigma[i - 1], sigma[rng.below(i)]);
    CHECK(conservation_laws(conjugate(f, sigma)).dimension ==
          conservation_laws(f).dimension);
  }
}

TEST_CASE("log measure lies in the conservation space for family members") {
  PairMap f = testmaps::two_family_map();
  LogMeasureResult good = verify_log_measure(SpinMeasure::from_probs({0.1, 0.4, 0.1, 0.4}), f);
  CHECK(good.ok);
  CHECK(good.residual < 1e-9);
  CHECK(good.dimension == 3);

  LogMeasureResult bad = verify_log_measure(SpinMeasure::from_probs({0.1, 0.2, 0.3, 0.4}), f);
  CHECK_FALSE(bad.ok);
  CHECK(bad.residual > 1e-3);

  // Swap conserves everything, so any positive measure passes.
  CHECK(verify_log_measure(SpinMeasure::from_probs({0.25, 0.75}), PairMap::swap_map(2)).ok);
}

TEST_CASE("log measure requires strictly positive entries") {
  REQUIRE_THROWS_AS(verify_log_measure(SpinMeasure::from_probs({1.0, 0.0}),
                                       PairMap::swap_map(2)),
                    ValidationError);
}

TEST_CASE("every generic family sample passes the log-measure law") {
  Rng rng(808);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 3 + static_cast<int>(rng.below(3));
    PairMap f = testmaps::random_symmetric_bijection(rng, m);
    for (const SpinPartition& p : enumerate_families_general(f).partitions) {
      SpinMeasure nu = sample_generic_measure(family_from_partition(p), 7000 + trial);
      LogMeasureResult res = verify_log_measure(nu, f);
      CAPTURE(trial, m);
      CHECK(res.ok);
      CHECK(res.residual <= 1e-9);
    }
  }
}
