// Command-line driver: analyze / check / exact / simulate / laws / oracle
// over JSON model files. Exit codes: 0 success or certified, 1 checked and
// false, 2 input error, 3 resource cap exceeded.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exchange/exchange.hpp"

namespace {

using nlohmann::ordered_json;
using namespace exchange;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProcessModel load_model(const std::string& path) {
  return model_from_json_text(read_file(path));
}

SpinMeasure load_measure(const std::string& path, int expected_m = 0) {
  return measure_from_json_text(read_file(path), expected_m);
}

ordered_json report_shell(const std::string& command, const ProcessModel& model) {
  ordered_json j;
  j["schema_version"] = 1;
  j["command"] = command;
  j["model_digest"] = model_digest(model);
  j["result"] = ordered_json::object();
  return j;
}

void emit(const ordered_json& report, bool as_json, const std::string& human) {
  if (as_json)
    std::cout << report.dump(2) << "\n";
  else
    std::cout << human;
}

ordered_json partition_json(const SpinPartition& p, const SpinSpace& spins) {
  ordered_json blocks = ordered_json::array();
  for (const auto& block : p.blocks()) {
    ordered_json b = ordered_json::array();
    for (SpinIndex v : block)
      b.push_back(spins.labels[v]);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::string partition_text(const SpinPartition& p, const SpinSpace& spins) {
  std::string out;
  for (const auto& block : p.blocks()) {
    out += out.empty() ? "{" : " {";
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (i)
        out += ",";
      out += spins.labels[block[i]];
    }
    out += "}";
  }
  return out;
}

ordered_json spin_set_json(const std::vector<SpinIndex>& set, const SpinSpace& spins) {
  ordered_json out = ordered_json::array();
  for (SpinIndex v : set)
    out.push_back(spins.labels[v]);
  return out;
}

bool all_singletons(const SpinPartition& p) { return p.block_count == p.size(); }

// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& model_path, bool as_json, double tol, std::uint64_t seed,
                std::uint64_t cap_assignments, std::int64_t max_states) {
  const ProcessModel model = load_model(model_path);
  const AnalysisResult analysis = analyze_map(model.map, cap_assignments);

  ordered_json rep = report_shell("analyze", model);
  auto& r = rep["result"];
  r["map"] = {{"symmetric", analysis.symmetric}, {"bijective", analysis.bijective}};
  r["census"] = {{"cycles", analysis.census.cycle_count},
                 {"lengths", analysis.census.lengths},
                 {"disconnected", analysis.census.disconnected_count},
                 {"all_connected", analysis.census.all_connected},
                 {"inessential", analysis.census.inessential_count}};
  r["assignments"] = analysis.assignments;

  std::ostringstream human;
  human << "map: " << (analysis.symmetric ? "symmetric" : "non-symmetric") << ", "
        << (analysis.bijective ? "bijective" : "non-bijective") << "\n";
  human << "cycles: " << analysis.census.cycle_count << " ("
        << analysis.census.disconnected_count << " disconnected), inessential states: "
        << analysis.census.inessential_count << "\n";

  bool universal_banner = false;
  bool all_certified = true;
  r["families"] = ordered_json::array();
  for (std::size_t i = 0; i < analysis.families.size(); ++i) {
    const FamilyRecord& rec = analysis.families[i];
    const FamilyCertification cert =
        certify_family(model.map, rec, seed + i, tol, max_states);
    all_certified = all_certified && cert.certified;
    if (rec.kill_set.empty() && all_singletons(rec.family.partition))
      universal_banner = true;

    ordered_json fj;
    fj["blocks"] = partition_json(rec.family.partition, model.spins);
    fj["dimension"] = rec.family.dimension();
    fj["kill_set"] = spin_set_json(rec.kill_set, model.spins);
    ordered_json cj;
    cj["sample"] = cert.sample.p;
    cj["measure_ok"] = cert.measure_ok;
    cj["exact_checked"] = cert.exact_checked;
    cj["exact_residual"] = cert.exact_residual;
    cj["certified"] = cert.certified;
    fj["certification"] = std::move(cj);
    r["families"].push_back(std::move(fj));

    human << "family " << (i + 1) << ": " << partition_text(rec.family.partition, model.spins)
          << ", dimension " << rec.family.dimension();
    if (!rec.kill_set.empty()) {
      human << ", zero on {";
      for (std::size_t k = 0; k < rec.kill_set.size(); ++k)
        human << (k ? "," : "") << model.spins.labels[rec.kill_set[k]];
      human << "}";
    }
    human << (cert.certified ? " [certified]" : " [CERTIFICATION FAILED]") << "\n";
  }
  r["rejected_kill_sets"] = ordered_json::array();
  for (const RejectedKillSet& rej : analysis.rejected_kill_sets) {
    r["rejected_kill_sets"].push_back(
        {{"kill_set", spin_set_json(rej.kill_set, model.spins)}, {"reason", rej.reason}});
    human << "rejected kill set (" << rej.reason << ")\n";
  }
  r["kill_sets_truncated"] = analysis.kill_sets_truncated;
  r["universal"] = universal_banner;
  if (universal_banner)
    human << "any Bernoulli measure is invariant\n";

  emit(rep, as_json, human.str());
  return all_certified ? 0 : 1;
}

int cmd_check(const std::string& model_path, const std::string& measure_path, bool as_json,
              double tol, std::int64_t max_states) {
  const ProcessModel model = load_model(model_path);
  const SpinMeasure nu = load_measure(measure_path);
  const ModelInvarianceReport chk = check_model_invariance(model, nu, tol);

  ordered_json rep = report_shell("check", model);
  auto& r = rep["result"];
  r["map"] = {{"symmetric", chk.map_symmetric}, {"bijective", chk.map_bijective}};
  r["rates_ok"] = chk.rates_ok;
  r["rates_cyclic_only"] = chk.rates_cyclic_only;
  ordered_json edges = ordered_json::array();
  for (const RateConditionResult& e : chk.edge_rates)
    edges.push_back(e.ok);
  r["edge_rate_condition"] = std::move(edges);
  if (chk.agreement)
    r["agreement"] = chk.agreement->ok;
  r["pair_invariance"] = chk.pair_invariance.ok;
  r["certified"] = chk.certified;

  std::ostringstream human;
  human << "rate condition: " << (chk.rates_ok ? "holds" : "violated") << "\n";
  if (chk.agreement)
    human << "level-set agreement: " << (chk.agreement->ok ? "holds" : "violated") << "\n";
  human << "pair-measure invariance: " << (chk.pair_invariance.ok ? "holds" : "violated")
        << "\n";

  bool verdict = chk.certified;
  if (!chk.rates_ok && chk.measure_ok) {
    // The criterion needs the rate hypothesis. Fall back to the exact
    // generator on this model before declaring anything.
    const GeneratorMatrix q = build_generator(model, max_states);
    const ExactResidual res = verify_invariant_exact(nu, q);
    r["exact_fallback"] = {{"residual", res.residual}, {"invariant", res.invariant}};
    human << "rate hypothesis violated; exact residual " << res.residual << " -> "
          << (res.invariant ? "invariant" : "not invariant") << "\n";
    verdict = res.invariant;
  } else {
    human << (verdict ? "invariance certified\n" : "not invariant by the criterion\n");
  }
  r["invariant"] = verdict;

  emit(rep, as_json, human.str());
  return verdict ? 0 : 1;
}

int cmd_exact(const std::string& model_path, const std::string& measure_path, bool as_json,
              std::int64_t max_states, bool classes, bool rank_diagnostic) {
  const ProcessModel model = load_model(model_path);
  const SpinMeasure nu = load_measure(measure_path);
  const GeneratorMatrix q = build_generator(model, max_states);
  const ExactResidual res = verify_invariant_exact(nu, q);

  ordered_json rep = report_shell("exact", model);
  auto& r = rep["result"];
  r["states"] = q.states;
  r["max_rate"] = q.max_rate;
  r["residual"] = res.residual;
  r["tol"] = res.tol;
  r["invariant"] = res.invariant;

  std::ostringstream human;
  human << "states: " << q.states << "\n";
  human << "residual: " << res.residual << " (tol " << res.tol << ") -> "
        << (res.invariant ? "invariant" : "not invariant") << "\n";

  if (classes) {
    const ClassAnalysis ca = communicating_classes(q);
    r["classes"] = {{"count", ca.count},
                    {"closed", ca.closed_count},
                    {"irreducible", ca.irreducible}};
    human << "communicating classes: " << ca.count << " (" << ca.closed_count
          << " closed)\n";
  }
  if (rank_diagnostic) {
    const int dim = stationary_dimension(q);
    r["stationary_dimension"] = dim;
    human << "stationary dimension: " << dim << "\n";
  }

  emit(rep, as_json, human.str());
  return res.invariant ? 0 : 1;
}

int cmd_simulate(const std::string& model_path, const std::string& nu_path,
                 const std::string& config_csv, bool as_json, std::uint64_t seed, int replicas,
                 std::uint64_t events, double sim_time, double burn_in_time,
                 std::uint64_t burn_in_events, std::uint64_t tv_stride) {
  const ProcessModel model = load_model(model_path);
  if (nu_path.empty() && config_csv.empty())
    throw ValidationError("simulate needs --nu or --config");
  if (events == 0 && sim_time <= 0.0)
    throw ValidationError("simulate needs --events or --time");

  const StopRule measure_stop =
      events > 0 ? StopRule::by_events(events) : StopRule::by_time(sim_time);
  const StopRule burn_stop = burn_in_events > 0 ? StopRule::by_events(burn_in_events)
                                                : StopRule::by_time(burn_in_time);

  ordered_json rep = report_shell("simulate", model);
  auto& r = rep["result"];
  r["seed"] = seed;
  r["replicas"] = replicas;

  std::ostringstream human;

  if (!config_csv.empty()) {
    // Explicit start: one trajectory per replica from the same configuration.
    std::vector<int> config;
    std::stringstream ss(config_csv);
    std::string item;
    while (std::getline(ss, item, ','))
      config.push_back(std::stoi(item));
    StatsAccumulator merged(model.spins.size, model.vertex_count,
                            static_cast<int>(model.edges.size()));
    ordered_json per_replica = ordered_json::array();
    bool any_frozen = false;
    for (int rep_i = 0; rep_i < replicas; ++rep_i) {
      Simulator sim(model, config, replica_seed(seed, rep_i));
      const bool want_burn = burn_stop.kind == StopRule::Kind::Events
                                 ? burn_stop.events > 0
                                 : burn_stop.time > 0.0;
      if (want_burn)
        sim.run(burn_stop);
      sim.reset_stats();
      const RunReport run = sim.run(measure_stop, tv_stride);
      any_frozen = any_frozen || run.frozen;
      per_replica.push_back({{"events", run.events},
                             {"elapsed", run.elapsed},
                             {"frozen", run.frozen}});
      merged.merge(sim.stats());
    }
    r["per_replica"] = std::move(per_replica);
    r["frozen_any"] = any_frozen;
    r["weighted_time"] = merged.weighted_time;
    human << "replicas: " << replicas << ", total weighted time " << merged.weighted_time
          << (any_frozen ? " (some replicas froze)" : "") << "\n";
    emit(rep, as_json, human.str());
    return 0;
  }

  const SpinMeasure nu = load_measure(nu_path);
  const ReplicaSet set = run_replicas(model, nu, seed, replicas, burn_stop, measure_stop,
                                      tv_stride);

  ordered_json per_replica = ordered_json::array();
  bool any_frozen = false;
  std::vector<double> replica_site_tv, replica_edge_tv;
  for (const ReplicaResult& res : set.replicas) {
    const MarginalReport mr = compare_marginals(res.stats, nu);
    const double pooled_site = pooled_site_tv(res.stats, nu);
    const double pooled_edge = pooled_edge_tv(res.stats, nu);
    replica_site_tv.push_back(pooled_site);
    replica_edge_tv.push_back(pooled_edge);
    any_frozen = any_frozen || res.report.frozen;
    ordered_json rj = {{"events", res.report.events},
                       {"elapsed", res.report.elapsed},
                       {"frozen", res.report.frozen},
                       {"site_tv_mean", mr.site_tv_mean},
                       {"site_tv_max", mr.site_tv_max},
                       {"edge_tv_mean", mr.edge_tv_mean},
                       {"edge_tv_max", mr.edge_tv_max},
                       {"pooled_site_tv", pooled_site},
                       {"pooled_edge_tv", pooled_edge}};
    if (!res.report.tv_series.empty()) {
      ordered_json series = ordered_json::array();
      for (const TvSample& s : res.report.tv_series)
        series.push_back({{"events", s.events}, {"mean_site_tv", s.mean_site_tv}});
      rj["tv_series"] = std::move(series);
    }
    per_replica.push_back(std::move(rj));
  }
  const MarginalReport merged = compare_marginals(set.merged, nu);
  auto mean_sd = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs)
      mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs)
      var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  const auto [site_mean, site_sd] = mean_sd(replica_site_tv);
  const auto [edge_mean, edge_sd] = mean_sd(replica_edge_tv);
  const double root_r = std::sqrt(static_cast<double>(set.replicas.size()));

  r["per_replica"] = std::move(per_replica);
  r["frozen_any"] = any_frozen;
  r["site_tv_mean"] = merged.site_tv_mean;
  r["site_tv_max"] = merged.site_tv_max;
  r["edge_tv_mean"] = merged.edge_tv_mean;
  r["edge_tv_max"] = merged.edge_tv_max;
  r["pooled_site_tv"] = pooled_site_tv(set.merged, nu);
  r["pooled_edge_tv"] = pooled_edge_tv(set.merged, nu);
  r["replica_pooled_site_tv"] = {{"mean", site_mean},
                                 {"sd", site_sd},
                                 {"se3", 3.0 * site_sd / root_r}};
  r["replica_pooled_edge_tv"] = {{"mean", edge_mean},
                                 {"sd", edge_sd},
                                 {"se3", 3.0 * edge_sd / root_r}};

  human << "replicas: " << set.replicas.size() << (any_frozen ? " (some froze)" : "") << "\n";
  human << "pooled site TV " << r["pooled_site_tv"].get<double>() << ", pooled pair TV "
        << r["pooled_edge_tv"].get<double>() << "\n";
  human << "per-site mean TV " << merged.site_tv_mean << ", per-pair mean TV "
        << merged.edge_tv_mean << "\n";

  emit(rep, as_json, human.str());
  return 0;
}

int cmd_laws(const std::string& model_path, const std::string& measure_path, bool as_json,
             double tol) {
  const ProcessModel model = load_model(model_path);
  const ConservationBasis laws = conservation_laws(model.map);

  ordered_json rep = report_shell("laws", model);
  auto& r = rep["result"];
  r["dimension"] = laws.dimension;
  ordered_json basis = ordered_json::array();
  for (int k = 0; k < laws.dimension; ++k) {
    ordered_json col = ordered_json::array();
    for (int x = 0; x < model.spins.size; ++x)
      col.push_back(laws.basis(x, k));
    basis.push_back(std::move(col));
  }
  r["basis"] = std::move(basis);

  std::ostringstream human;
  human << "conservation-law space dimension: " << laws.dimension << "\n";

  int code = 0;
  if (!measure_path.empty()) {
    const SpinMeasure nu = load_measure(measure_path);
    const LogMeasureResult lm = verify_log_measure(nu, model.map, tol);
    r["log_measure"] = {{"ok", lm.ok}, {"residual", lm.residual}};
    human << "log-measure residual: " << lm.residual << " -> "
          << (lm.ok ? "in the conserved span" : "outside the conserved span") << "\n";
    code = lm.ok ? 0 : 1;
  }

  emit(rep, as_json, human.str());
  return code;
}

int cmd_oracle(const std::string& model_path, bool as_json, std::uint64_t cap_assignments) {
  const ProcessModel model = load_model(model_path);
  const FamilyEnumeration enumerated = enumerate_families_general(model.map, cap_assignments);
  const std::vector<SpinPartition> oracle = brute_force_families(model.map);

  std::vector<SpinPartition> lhs = enumerated.partitions;
  std::sort(lhs.begin(), lhs.end());
  const bool match = lhs == oracle;

  ordered_json rep = report_shell("oracle", model);
  auto& r = rep["result"];
  r["enumerated"] = ordered_json::array();
  for (const SpinPartition& p : lhs)
    r["enumerated"].push_back(partition_json(p, model.spins));
  r["oracle"] = ordered_json::array();
  for (const SpinPartition& p : oracle)
    r["oracle"].push_back(partition_json(p, model.spins));
  r["match"] = match;

  std::ostringstream human;
  human << "enumerated families: " << lhs.size() << ", oracle families: " << oracle.size()
        << " -> " << (match ? "match" : "MISMATCH") << "\n";

  emit(rep, as_json, human.str());
  return match ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exchange-process analysis tools"};
  app.require_subcommand(1);

  std::string model_path, measure_path, nu_path, config_csv;
  bool as_json = false;
  double tol = kDefaultTol;
  std::uint64_t seed = 12345;
  std::int64_t max_states = kDefaultStateCap;
  std::uint64_t cap_assignments = 1ULL << 20;
  std::uint64_t events = 0;
  double sim_time = 0.0;
  int replicas = 1;
  double burn_in_time = 0.0;
  std::uint64_t burn_in_events = 0;
  std::uint64_t tv_stride = 0;
  bool classes = false, rank_diagnostic = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_flag("--json", as_json, "emit a machine-readable JSON report");
    sub->add_option("--tol", tol, "relative tolerance for measure comparisons");
    sub->add_option("--seed", seed, "seed for deterministic sampling");
    sub->add_option("--max-states", max_states, "exact-generator state cap");
    sub->add_option("--cap-assignments", cap_assignments,
                    "orientation-assignment cap for the family search");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "enumerate and certify IBM families");
  analyze->add_option("model", model_path, "model JSON file")->required();
  add_common(analyze);

  CLI::App* check = app.add_subcommand("check", "invariance criterion for a given measure");
  check->add_option("model", model_path, "model JSON file")->required();
  check->add_option("measure", measure_path, "measure JSON file")->required();
  add_common(check);

  CLI::App* exact = app.add_subcommand("exact", "exact generator residual for a measure");
  exact->add_option("model", model_path, "model JSON file")->required();
  exact->add_option("measure", measure_path, "measure JSON file")->required();
  exact->add_flag("--classes", classes, "report communicating classes");
  exact->add_flag("--rank-diagnostic", rank_diagnostic,
                  "report the stationary-space dimension (dense, small systems)");
  add_common(exact);

  CLI::App* simulate = app.add_subcommand("simulate", "kinetic Monte Carlo run");
  simulate->add_option("model", model_path, "model JSON file")->required();
  simulate->add_option("--nu", nu_path, "measure JSON file for the initial product law");
  simulate->add_option("--config", config_csv, "explicit initial configuration, comma-separated");
  simulate->add_option("--events", events, "number of measured events per replica");
  simulate->add_option("--time", sim_time, "simulated time per replica");
  simulate->add_option("--replicas", replicas, "independent replicas");
  simulate->add_option("--burn-in", burn_in_time, "burn-in simulated time");
  simulate->add_option("--burn-in-events", burn_in_events, "burn-in events");
  simulate->add_option("--tv-stride", tv_stride, "sample the running TV every N events");
  add_common(simulate);

  CLI::App* laws = app.add_subcommand("laws", "additive conservation laws");
  laws->add_option("model", model_path, "model JSON file")->required();
  laws->add_option("measure", measure_path, "optional measure for the log-measure check");
  add_common(laws);

  CLI::App* oracle = app.add_subcommand("oracle", "family enumeration vs exhaustive oracle");
  oracle->add_option("model", model_path, "model JSON file")->required();
  add_common(oracle);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze)
      return cmd_analyze(model_path, as_json, tol, seed, cap_assignments, max_states);
    if (*check)
      return cmd_check(model_path, measure_path, as_json, tol, max_states);
    if (*exact)
      return cmd_exact(model_path, measure_path, as_json, max_states, classes, rank_diagnostic);
    if (*simulate)
      return cmd_simulate(model_path, nu_path, config_csv, as_json, seed, replicas, events,
                          sim_time, burn_in_time, burn_in_events, tv_stride);
    if (*laws)
      return cmd_laws(model_path, measure_path, as_json, tol);
    if (*oracle)
      return cmd_oracle(model_path, as_json, cap_assignments);
  } catch (const ResourceCapError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid JSON input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
