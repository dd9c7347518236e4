// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the process exits with the number of failed criteria.

#include <exchange/exchange.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace exchange;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::string kCli = EXCHANGE_CLI_PATH;
const std::string kModels = EXCHANGE_MODEL_DIR;

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  CliResult res;
  const std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe)
    return res;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0)
    res.out.append(buf, n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Map with exactly two invariant families: one off-diagonal 2-cycle
// (0,1)<->(2,3) plus its mirror, all other states fixed.
PairMap two_family_map() {
  std::vector<PairState> table;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      table.push_back({a, b});
  table[0 * 4 + 1] = {2, 3};
  table[2 * 4 + 3] = {0, 1};
  table[1 * 4 + 0] = {3, 2};
  table[3 * 4 + 2] = {1, 0};
  return PairMap::from_table(4, table);
}

PairMap min3_map() {
  std::vector<PairState> table;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      table.push_back({std::min(a, 1), std::min(b, 1)});
  return PairMap::from_table(3, table);
}

PairMap shift3_map() { return PairMap::from_spin_map({1, 2, 0}); }

std::vector<std::pair<int, int>> offdiag_orbits(int m) {
  std::vector<std::pair<int, int>> orbits;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      orbits.emplace_back(a, b);
  return orbits;
}

PairMap symmetric_bijection(int m, const std::vector<int>& diag_perm,
                            const std::vector<int>& orbit_perm, std::uint64_t bits) {
  const auto orbits = offdiag_orbits(m);
  std::vector<PairState> table(m * m);
  for (int a = 0; a < m; ++a)
    table[a * m + a] = {diag_perm[a], diag_perm[a]};
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    const auto [a, b] = orbits[i];
    auto [c, d] = orbits[orbit_perm[i]];
    if (bits & (1ULL << i))
      std::swap(c, d);
    table[a * m + b] = {c, d};
    table[b * m + a] = {d, c};
  }
  return PairMap::from_table(m, table);
}

std::vector<PairMap> all_symmetric_bijections3() {
  std::vector<PairMap> out;
  std::vector<int> dp = {0, 1, 2};
  do {
    std::vector<int> op = {0, 1, 2};
    do {
      for (std::uint64_t bits = 0; bits < 8; ++bits)
        out.push_back(symmetric_bijection(3, dp, op, bits));
    } while (std::next_permutation(op.begin(), op.end()));
  } while (std::next_permutation(dp.begin(), dp.end()));
  return out;
}

PairMap random_symmetric_bijection(Rng& rng, int m) {
  std::vector<int> dp(m), op(m * (m - 1) / 2);
  std::iota(dp.begin(), dp.end(), 0);
  std::iota(op.begin(), op.end(), 0);
  for (std::size_t i = dp.size(); i > 1; --i)
    std::swap(dp[i - 1], dp[rng.below(i)]);
  for (std::size_t i = op.size(); i > 1; --i)
    std::swap(op[i - 1], op[rng.below(i)]);
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < op.size(); ++i)
    bits |= (rng.below(2) << i);
  return symmetric_bijection(m, dp, op, bits);
}

ProcessModel make_model(const PairMap& f, const std::vector<std::pair<int, int>>& edges,
                        int vertices, const std::vector<RateTable>& rates) {
  ProcessModel model;
  model.spins = SpinSpace::with_size(f.spin_count());
  model.map = f;
  model.vertex_count = vertices;
  for (std::size_t i = 0; i < edges.size(); ++i)
    model.edges.push_back({edges[i].first, edges[i].second, rates[i]});
  model.mode = GraphMode::Undirected;
  return validate_model(std::move(model));
}

ProcessModel make_model(const PairMap& f, const std::vector<std::pair<int, int>>& edges,
                        int vertices, const RateTable& rates) {
  return make_model(f, edges, vertices, std::vector<RateTable>(edges.size(), rates));
}

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

// Random positive measure whose pairwise value products are separated by at
// least 1e-6 relative, keeping the level-set verdict far from its tolerance.
SpinMeasure random_separated_measure(Rng& rng, int m) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<double> p(m);
    double sum = 0.0;
    for (double& x : p)
      sum += (x = rng.uniform(0.05, 1.0));
    double tail = 1.0;
    for (int i = 0; i + 1 < m; ++i) {
      p[i] /= sum;
      tail -= p[i];
    }
    p[m - 1] = tail;
    std::vector<double> products;
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b)
        products.push_back(p[a] * p[b]);
    std::sort(products.begin(), products.end());
    bool ok = true;
    for (std::size_t i = 0; i + 1 < products.size(); ++i)
      if (close_rel(products[i], products[i + 1], 1e-6)) {
        ok = false;
        break;
      }
    if (ok)
      return SpinMeasure::from_probs(std::move(p));
  }
  return SpinMeasure::uniform(m);
}

// Families gathered while running criteria 1-3, reused by criterion 8.
std::vector<std::pair<PairMap, SpinPartition>> g_families;

void report(int n, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", n, name,
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// --------------------------------------------------------------------------

bool criterion1() {
  const auto t0 = Clock::now();
  CliResult res = run_cli("analyze " + kModels + "/two_family_path3.json --json");
  const double secs = seconds_since(t0);

  bool ok = res.exit_code == 0;
  std::set<std::set<std::set<std::string>>> families;
  if (ok) {
    json j = json::parse(res.out, nullptr, false);
    ok = !j.is_discarded();
    if (ok) {
      for (const auto& fam : j["result"]["families"]) {
        std::set<std::set<std::string>> blocks;
        for (const auto& blk : fam["blocks"])
          blocks.insert(std::set<std::string>(blk.begin(), blk.end()));
        families.insert(blocks);
        ok = ok && fam["dimension"] == 1 && fam["kill_set"].empty();
      }
    }
  }
  const std::set<std::set<std::set<std::string>>> expect = {
      {{"x1", "x3"}, {"x2", "x4"}},
      {{"x1", "x4"}, {"x2", "x3"}},
  };
  ok = ok && families == expect && secs < 1.0;

  g_families.emplace_back(two_family_map(),
                          SpinPartition::from_blocks(4, {{0, 2}, {1, 3}}));
  g_families.emplace_back(two_family_map(),
                          SpinPartition::from_blocks(4, {{0, 3}, {1, 2}}));
  return report(1, "two one-parameter families recovered",
                ok, fmt("%zu families, %.2f s (budget 1 s)", families.size(), secs)),
         ok;
}

bool criterion2() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  bool ok = true;
  double worst = 0.0;
  for (int m : {2, 3, 4}) {
    PairMap f = PairMap::swap_map(m);
    AnalysisResult ar = analyze_map(f);
    ok = ok && ar.families.size() == 1 &&
         ar.families[0].family.partition == SpinPartition::singletons(m) &&
         ar.families[0].family.zero_block < 0;
    g_families.emplace_back(f, SpinPartition::singletons(m));

    for (auto edges : {path_edges(2), path_edges(3), cycle_edges(3)}) {
      int vertices = 0;
      for (auto [v, w] : edges)
        vertices = std::max({vertices, v + 1, w + 1});
      GeneratorMatrix q =
          build_generator(make_model(f, edges, vertices, RateTable::constant(m, 1.0)));
      for (int trial = 0; trial < 20; ++trial) {
        ExactResidual res = verify_invariant_exact(random_separated_measure(rng, m), q);
        worst = std::max(worst, res.residual);
        ok = ok && res.residual <= 1e-12 * std::max(1.0, q.max_rate);
      }
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 5.0;
  return report(2, "exchange map keeps every product measure invariant", ok,
                fmt("180 measures, worst residual %.2e, %.2f s (budget 5 s)", worst, secs)),
         ok;
}

bool criterion3() {
  const auto t0 = Clock::now();
  bool ok = true;
  int instances = 0;
  auto by_labels = [](const SpinPartition& x, const SpinPartition& y) {
    return x.block_of < y.block_of;
  };
  auto agree = [&](const PairMap& f) {
    auto fast = enumerate_families_general(f).partitions;
    auto oracle = brute_force_families(f);
    std::sort(fast.begin(), fast.end(), by_labels);
    std::sort(oracle.begin(), oracle.end(), by_labels);
    if (fast != oracle)
      return false;
    for (const SpinPartition& p : fast)
      g_families.emplace_back(f, p);
    ++instances;
    return true;
  };

  for (const PairMap& f : all_symmetric_bijections3())
    ok = agree(f) && ok;
  Rng rng(3003);
  for (int trial = 0; trial < 150; ++trial)
    ok = agree(random_symmetric_bijection(rng, 4)) && ok;
  for (int trial = 0; trial < 150; ++trial)
    ok = agree(random_symmetric_bijection(rng, 5)) && ok;

  const double secs = seconds_since(t0);
  ok = ok && instances == 288 + 300 && secs < 120.0;
  return report(3, "family enumeration matches the exhaustive oracle", ok,
                fmt("%d instances (288 exhaustive m=3, 300 random m=4,5), %.2f s "
                    "(budget 120 s)",
                    instances, secs)),
         ok;
}

bool criterion4() {
  Rng rng(4004);
  int mismatches = 0, positives = 0, negatives = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(3));
    PairMap f = random_symmetric_bijection(rng, m);

    SpinMeasure nu = SpinMeasure::uniform(m);
    if (rng.below(2) == 0) {
      FamilyEnumeration fe = enumerate_families_general(f);
      nu = sample_generic_measure(
          family_from_partition(fe.partitions[rng.below(fe.partitions.size())]),
          40000 + trial);
    } else {
      nu = random_separated_measure(rng, m);
    }

    ProcessModel g2 = make_model(f, path_edges(2), 2, per_cycle_rates(f, rng));
    GeneratorMatrix q = build_generator(g2);

    const bool a = check_agreement(nu, f).ok;
    const bool p = check_pair_invariance(nu, f).ok;
    ExactResidual res = verify_invariant_exact(nu, q);
    const bool e = res.residual <= res.tol;
    if (a != p || a != e)
      ++mismatches;
    (a ? positives : negatives)++;
  }
  const bool ok = mismatches == 0 && positives >= 100 && negatives >= 100;
  return report(4, "level-set, pushforward and generator verdicts coincide", ok,
                fmt("500 instances (%d invariant, %d not), %d discrepancies",
                    positives, negatives, mismatches)),
         ok;
}

bool criterion5() {
  Rng rng(5005);
  bool ok = true;
  int built = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(2));
    PairMap f = random_symmetric_bijection(rng, m);
    const int vertices = 3 + static_cast<int>(rng.below(2));
    auto edges = rng.below(2) == 0 ? complete_edges(vertices) : cycle_edges(vertices);
    std::vector<RateTable> rates;
    for (std::size_t i = 0; i < edges.size(); ++i)
      rates.push_back(per_cycle_rates(f, rng));

    FamilyEnumeration fe = enumerate_families_general(f);
    SpinMeasure nu = sample_generic_measure(
        family_from_partition(fe.partitions[rng.below(fe.partitions.size())]),
        50000 + trial);

    bool premise = true;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      ProcessModel one = make_model(f, {edges[i]}, vertices, {rates[i]});
      ExactResidual res = verify_invariant_exact(nu, build_generator(one));
      premise = premise && res.residual <= res.tol;
    }
    if (!premise) {
      ok = false;
      continue;
    }
    GeneratorMatrix q = build_generator(make_model(f, edges, vertices, rates));
    ExactResidual res = verify_invariant_exact(nu, q);
    worst = std::max(worst, res.residual);
    ok = ok && res.residual <= 1e-11 * std::max(1.0, q.max_rate);
    ++built;
  }
  ok = ok && built == 100;
  return report(5, "edge-wise invariance survives rate superposition", ok,
                fmt("%d models, worst full-graph residual %.2e", built, worst)),
         ok;
}

bool criterion6() {
  CliResult chk =
      run_cli("check " + kModels + "/two_family_path3.json " + kModels + "/nu_ramp_4.json --json");
  CliResult ext =
      run_cli("exact " + kModels + "/two_family_g2.json " + kModels + "/nu_ramp_4.json --json");

  bool ok = chk.exit_code == 1 && ext.exit_code == 1;
  double residual = 0.0;
  if (ok) {
    json jc = json::parse(chk.out, nullptr, false);
    json je = json::parse(ext.out, nullptr, false);
    ok = !jc.is_discarded() && !je.is_discarded();
    if (ok) {
      ok = jc["result"]["certified"] == false && jc["result"]["agreement"] == false;
      residual = je["result"]["residual"].get<double>();
      ok = ok && residual >= 1e-3 && std::abs(residual - 0.10) < 1e-9;
    }
  }
  return report(6, "generic measure is rejected with a large exact residual", ok,
                fmt("checker verdict false, two-site residual %.4f (bound 1e-3)", residual)),
         ok;
}

bool criterion7() {
  const auto t0 = Clock::now();

  // The torus dynamics conserve each site's class {x1,x3} vs {x2,x4}; no
  // graph gives an irreducible chain, so the attainable precondition is
  // that every communicating class of the small-graph chain is closed (the
  // chain is a disjoint union of irreducible pieces). Reported as such.
  PairMap f = two_family_map();
  ProcessModel small =
      make_model(f, path_edges(3), 3, RateTable::constant(4, 1.0));
  ClassAnalysis cls = communicating_classes(build_generator(small));
  const bool classes_ok = cls.count == 48 && cls.closed_count == cls.count;

  ProcessModel torus = model_from_json_text(slurp(kModels + "/two_family_torus16.json"));
  SpinMeasure nu = SpinMeasure::from_probs({0.1, 0.4, 0.1, 0.4});

  ReplicaSet rs = run_replicas(torus, nu, 3, 8, StopRule::by_events(1000000),
                               StopRule::by_events(10000000));
  const double site = pooled_site_tv(rs.merged, nu);
  const double edge = pooled_edge_tv(rs.merged, nu);

  double mean_site = 0.0, var_site = 0.0;
  std::vector<double> per_rep;
  for (const ReplicaResult& r : rs.replicas)
    per_rep.push_back(pooled_site_tv(r.stats, nu));
  for (double x : per_rep)
    mean_site += x;
  mean_site /= per_rep.size();
  for (double x : per_rep)
    var_site += (x - mean_site) * (x - mean_site);
  const double se3 = 3.0 * std::sqrt(var_site / (per_rep.size() - 1) / per_rep.size());

  const double secs = seconds_since(t0);
  const bool ok = classes_ok && site <= 0.01 && edge <= 0.02 && secs < 120.0;
  return report(7, "long simulation reproduces the invariant marginals", ok,
                fmt("small chain: %d classes all closed (not irreducible: site classes "
                    "are conserved); pooled site TV %.4f <= 0.01, pair TV %.4f <= 0.02, "
                    "replica spread 3se %.4f, %.0f s (budget 120 s)",
                    cls.count, site, edge, se3, secs)),
         ok;
}

bool criterion8() {
  bool ok = true;
  int checked = 0;
  double worst = 0.0;
  for (const auto& [f, partition] : g_families) {
    IbmFamily fam = family_from_partition(partition);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SpinMeasure nu = sample_generic_measure(fam, 80000 + seed);
      LogMeasureResult res = verify_log_measure(nu, f);
      worst = std::max(worst, res.residual);
      ok = ok && res.ok && res.residual <= 1e-9;
      ++checked;
    }
  }
  for (int m : {2, 3, 4})
    ok = ok && conservation_laws(PairMap::swap_map(m)).dimension == m;
  ok = ok && conservation_laws(shift3_map()).dimension == 1;

  return report(8, "log-measures span the conservation laws", ok,
                fmt("%d samples over %zu families, worst projection residual %.2e; "
                    "exchange dims 2/3/4, cycle-map dim 1",
                    checked, g_families.size(), worst)),
         ok;
}

bool criterion9() {
  PairMap f = min3_map();
  KillSetEnumeration ks = candidate_kill_sets(f);
  bool ok = ks.sets.size() == 1 && ks.sets[0] == std::vector<SpinIndex>{2};

  ReducedMap red = reduce_non_bijective(f, {2});
  ok = ok && red.map == PairMap::identity(2) && red.kept == std::vector<SpinIndex>{0, 1};

  AnalysisResult ar = analyze_map(f);
  ok = ok && ar.families.size() == 1;
  int zero_samples = 0;
  if (!ar.families.empty()) {
    const FamilyRecord& rec = ar.families[0];
    ok = ok && rec.kill_set == std::vector<SpinIndex>{2} &&
         rec.family.zero_block >= 0 && rec.family.dimension() == 1;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SpinMeasure nu = sample_generic_measure(rec.family, 90000 + seed);
      if (nu[2] == 0.0 && check_pair_invariance(nu, f).ok)
        ++zero_samples;
    }
    ok = ok && zero_samples == 10;
  }
  return report(9, "non-invertible map reduces to an invertible core", ok,
                fmt("kill set {x3}, reduced map = identity, %d/10 zero-extended samples "
                    "pushforward-invariant",
                    zero_samples)),
         ok;
}

bool criterion10() {
  const std::string sim_args = "simulate " + kModels + "/kawasaki2.json --nu " + kModels +
                               "/nu_03_07.json --events 2000 --replicas 2 --seed 4242 --json";
  CliResult s1 = run_cli(sim_args);
  CliResult s2 = run_cli(sim_args);

  const std::string ana_args = "analyze " + kModels + "/two_family_path3.json --json";
  CliResult a1 = run_cli(ana_args);
  CliResult a2 = run_cli(ana_args);

  const bool ok = s1.exit_code == 0 && s1.exit_code == s2.exit_code && s1.out == s2.out &&
                  !s1.out.empty() && a1.exit_code == 0 && a1.out == a2.out && !a1.out.empty();
  return report(10, "reports are byte-stable under a fixed seed", ok,
                fmt("simulate %zu bytes %s, analyze %zu bytes %s", s1.out.size(),
                    s1.out == s2.out ? "identical" : "DIFFER", a1.out.size(),
                    a1.out == a2.out ? "identical" : "DIFFER")),
         ok;
}

}  // namespace

int main() {
  int failed = 0;
  failed += !criterion1();
  failed += !criterion2();
  failed += !criterion3();
  failed += !criterion4();
  failed += !criterion5();
  failed += !criterion6();
  failed += !criterion7();
  failed += !criterion8();
  failed += !criterion9();
  failed += !criterion10();
  std::printf("%d of 10 criteria failed\n", failed);
  return failed;
}
