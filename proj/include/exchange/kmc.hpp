// Event-driven simulation of the exchange process: exponential edge races
// with dynamic rates, holding-time-weighted occupation statistics, and
// replica orchestration with deterministic seed splitting.
#ifndef EXCHANGE_KMC_HPP
#define EXCHANGE_KMC_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "exchange/model.hpp"
#include "exchange/rng.hpp"
#include "exchange/sum_tree.hpp"
#include "exchange/types.hpp"

namespace exchange {

struct StopRule {
  enum class Kind { Events, Time } kind = Kind::Events;
  std::uint64_t events = 0;
  double time = 0.0;

  static StopRule by_events(std::uint64_t n) { return {Kind::Events, n, 0.0}; }
  static StopRule by_time(double t) { return {Kind::Time, 0, t}; }
};

// Time-weighted occupation counts per (vertex, spin) and per (edge, pair
// state). Merging replicas is plain elementwise addition.
struct StatsAccumulator {
  int m = 0;
  int vertices = 0;
  int edges = 0;
  double weighted_time = 0.0;
  std::vector<double> site_weight;  // vertices x m
  std::vector<double> edge_weight;  // edges x m^2

  StatsAccumulator() = default;
  StatsAccumulator(int m_, int vertices_, int edges_)
      : m(m_), vertices(vertices_), edges(edges_), site_weight(vertices_ * m_, 0.0),
        edge_weight(edges_ * m_ * m_, 0.0) {}

  void merge(const StatsAccumulator& other) {
    if (other.m != m || other.vertices != vertices || other.edges != edges)
      throw ValidationError("cannot merge statistics of different shapes");
    weighted_time += other.weighted_time;
    for (std::size_t i = 0; i < site_weight.size(); ++i)
      site_weight[i] += other.site_weight[i];
    for (std::size_t i = 0; i < edge_weight.size(); ++i)
      edge_weight[i] += other.edge_weight[i];
  }

  std::vector<double> site_marginal(int v) const {
    std::vector<double> p(site_weight.begin() + v * m, site_weight.begin() + (v + 1) * m);
    double s = 0.0;
    for (double x : p)
      s += x;
    if (s > 0.0)
      for (double& x : p)
        x /= s;
    return p;
  }

  std::vector<double> edge_marginal(int e) const {
    std::vector<double> p(edge_weight.begin() + e * m * m, edge_weight.begin() + (e + 1) * m * m);
    double s = 0.0;
    for (double x : p)
      s += x;
    if (s > 0.0)
      for (double& x : p)
        x /= s;
    return p;
  }
};

struct EventRecord {
  double time = 0.0;
  int edge = -1;
  PairState before{}, after{};
};

struct TvSample {
  std::uint64_t events = 0;
  double mean_site_tv = 0.0;
};

struct RunReport {
  std::uint64_t events = 0;
  double elapsed = 0.0;
  bool frozen = false;
  std::vector<TvSample> tv_series;
};

class Simulator {
public:
  Simulator(const ProcessModel& model, const SpinMeasure& nu, std::uint64_t seed)
      : Simulator(model, sample_configuration(model, nu, seed), seed) {}

  Simulator(const ProcessModel& model, std::vector<int> configuration, std::uint64_t seed)
      : model_(&model), spin_(std::move(configuration)), rng_(splitmix64(seed ^ 0x9e3779b97f4a7c15ULL)) {
    const int m = model.spins.size;
    if (static_cast<int>(spin_.size()) != model.vertex_count)
      throw ValidationError("configuration length does not match the vertex count");
    for (int s : spin_)
      if (s < 0 || s >= m)
        throw ValidationError("configuration spin out of range");
    incident_.resize(model.vertex_count);
    for (std::size_t e = 0; e < model.edges.size(); ++e) {
      incident_[model.edges[e].v].push_back(static_cast<int>(e));
      incident_[model.edges[e].w].push_back(static_cast<int>(e));
    }
    edge_rate_.assign(model.edges.size(), 0.0);
    tree_ = SumTree(static_cast<int>(model.edges.size()));
    for (std::size_t e = 0; e < model.edges.size(); ++e) {
      edge_rate_[e] = effective_rate(static_cast<int>(e));
      tree_.set(static_cast<int>(e), edge_rate_[e]);
      if (edge_rate_[e] > 0.0)
        ++active_edges_;
    }
    reset_stats();
  }

  // Initial configuration drawn site by site from nu, in vertex order.
  static std::vector<int> sample_configuration(const ProcessModel& model, const SpinMeasure& nu,
                                               std::uint64_t seed) {
    if (nu.size() != model.spins.size)
      throw ValidationError("measure size does not match the model's spin count");
    Rng rng(splitmix64(seed ^ 0xd1b54a32d192ed03ULL));
    std::vector<int> spin(model.vertex_count);
    for (int v = 0; v < model.vertex_count; ++v) {
      const double u = rng.uniform01();
      double acc = 0.0;
      int chosen = nu.size() - 1;
      for (int s = 0; s < nu.size(); ++s) {
        acc += nu.p[s];
        if (u < acc) {
          chosen = s;
          break;
        }
      }
      spin[v] = chosen;
    }
    return spin;
  }

  const std::vector<int>& configuration() const { return spin_; }
  double clock() const { return clock_; }
  std::uint64_t event_count() const { return events_; }
  bool frozen() const { return active_edges_ == 0; }
  const StatsAccumulator& stats() const { return stats_; }

  // Drops everything accumulated so far and restarts the measuring window
  // at the current clock (burn-in boundary).
  void reset_stats() {
    stats_ = StatsAccumulator(model_->spins.size, model_->vertex_count,
                              static_cast<int>(model_->edges.size()));
    stats_start_ = clock_;
    snapshot_taken_ = false;
    site_last_.assign(model_->vertex_count, clock_);
    edge_last_.assign(model_->edges.size(), clock_);
  }

  // One transition: exponential waiting time at the total effective rate,
  // then an edge chosen proportionally to its rate. Returns nothing when
  // the state is frozen.
  std::optional<EventRecord> step() {
    if (active_edges_ == 0)
      return std::nullopt;
    advance_clock(rng_.exponential(tree_.total()));
    const int e = pick_edge();
    const Edge& edge = model_->edges[e];
    const PairState s{spin_[edge.v], spin_[edge.w]};
    apply_event(e);
    return EventRecord{clock_, e, s, model_->map.apply(s)};
  }

  // Reference distribution for the optional running TV monitor.
  void set_tv_reference(const SpinMeasure& nu) {
    if (nu.size() != model_->spins.size)
      throw ValidationError("measure size does not match the model's spin count");
    tv_reference_ = nu.p;
  }

  RunReport run(const StopRule& stop, std::uint64_t tv_stride = 0) {
    RunReport rep;
    const std::uint64_t start_events = events_;
    while (true) {
      if (stop.kind == StopRule::Kind::Events && events_ - start_events >= stop.events)
        break;
      if (active_edges_ == 0) {
        rep.frozen = true;
        if (stop.kind == StopRule::Kind::Time && clock_ < stop.time)
          advance_clock(stop.time - clock_);
        break;
      }
      if (stop.kind == StopRule::Kind::Time) {
        // Peek the waiting time so the censored final interval still
        // weights the statistics up to the stop boundary exactly.
        const double dt = rng_.exponential(tree_.total());
        if (clock_ + dt > stop.time) {
          advance_clock(stop.time - clock_);
          break;
        }
        advance_clock(dt);
        apply_event(pick_edge());
      } else {
        step();
      }
      if (tv_stride > 0 && (events_ - start_events) % tv_stride == 0)
        rep.tv_series.push_back({events_ - start_events, snapshot_mean_site_tv()});
    }
    finalize();
    rep.events = events_ - start_events;
    rep.elapsed = clock_ - stats_start_;
    return rep;
  }

  // Recomputes all rates from the configuration and compares them with the
  // incremental bookkeeping. Returns the worst relative deviation.
  double verify_integrity() const {
    double worst = 0.0;
    double sum = 0.0;
    int active = 0;
    for (std::size_t e = 0; e < edge_rate_.size(); ++e) {
      const double fresh = effective_rate(static_cast<int>(e));
      const double ref = std::max(std::abs(fresh), std::abs(edge_rate_[e]));
      if (ref > 0.0)
        worst = std::max(worst, std::abs(fresh - edge_rate_[e]) / ref);
      sum += fresh;
      if (fresh > 0.0)
        ++active;
    }
    if (sum > 0.0)
      worst = std::max(worst, std::abs(tree_.total() - sum) / sum);
    else if (tree_.total() != 0.0)
      worst = std::max(worst, 1.0);
    if (active != active_edges_)
      worst = std::max(worst, 1.0);
    return worst;
  }

private:
  static constexpr std::uint64_t kRebuildPeriod = 1ULL << 20;

  double effective_rate(int e) const {
    const Edge& edge = model_->edges[e];
    const PairState s{spin_[edge.v], spin_[edge.w]};
    if (model_->map.apply(s) == s)
      return 0.0;
    return edge.rates.at(s);
  }

  void advance_clock(double dt) { clock_ += dt; }

  int pick_edge() {
    const double u = rng_.uniform01() * tree_.total();
    int e = tree_.sample(u);
    // Float boundary: if the slot is empty, take the next active edge.
    if (edge_rate_[e] <= 0.0) {
      const int n = tree_.size();
      for (int probe = 1; probe <= n; ++probe) {
        const int cand = (e + probe) % n;
        if (edge_rate_[cand] > 0.0) {
          e = cand;
          break;
        }
      }
    }
    return e;
  }

  void apply_event(int e) {
    const Edge& edge = model_->edges[e];
    const PairState s{spin_[edge.v], spin_[edge.w]};
    const PairState t = model_->map.apply(s);
    flush_vertex(edge.v);
    flush_vertex(edge.w);
    for (int inc : incident_[edge.v])
      flush_edge(inc);
    for (int inc : incident_[edge.w])
      flush_edge(inc);
    spin_[edge.v] = t.a;
    spin_[edge.w] = t.b;
    refresh_incident(edge.v);
    refresh_incident(edge.w);
    ++events_;
    if ((events_ & (kRebuildPeriod - 1)) == 0)
      tree_.rebuild();
  }

  void refresh_incident(int v) {
    for (int e : incident_[v]) {
      const double fresh = effective_rate(e);
      if (fresh == edge_rate_[e])
        continue;
      if ((edge_rate_[e] > 0.0) != (fresh > 0.0))
        active_edges_ += fresh > 0.0 ? 1 : -1;
      edge_rate_[e] = fresh;
      tree_.set(e, fresh);
    }
  }

  void flush_vertex(int v) {
    const double dt = clock_ - site_last_[v];
    if (dt > 0.0)
      stats_.site_weight[v * stats_.m + spin_[v]] += dt;
    site_last_[v] = clock_;
  }

  void flush_edge(int e) {
    const double dt = clock_ - edge_last_[e];
    if (dt > 0.0) {
      const Edge& edge = model_->edges[e];
      stats_.edge_weight[e * stats_.m * stats_.m +
                         pair_index({spin_[edge.v], spin_[edge.w]}, stats_.m)] += dt;
    }
    edge_last_[e] = clock_;
  }

  void finalize() {
    for (int v = 0; v < model_->vertex_count; ++v)
      flush_vertex(v);
    for (std::size_t e = 0; e < model_->edges.size(); ++e)
      flush_edge(static_cast<int>(e));
    stats_.weighted_time = clock_ - stats_start_;
    // A run frozen before any time passed still has a definite occupation
    // law: the point mass on the initial configuration. Snapshot it with
    // unit weight so the marginals stay defined.
    if (stats_.weighted_time == 0.0 && !snapshot_taken_) {
      snapshot_taken_ = true;
      for (int v = 0; v < model_->vertex_count; ++v)
        stats_.site_weight[v * stats_.m + spin_[v]] += 1.0;
      for (std::size_t e = 0; e < model_->edges.size(); ++e) {
        const Edge& edge = model_->edges[e];
        stats_.edge_weight[e * stats_.m * stats_.m +
                           pair_index({spin_[edge.v], spin_[edge.w]}, stats_.m)] += 1.0;
      }
      stats_.weighted_time = 1.0;
    }
  }

  double snapshot_mean_site_tv() const {
    // Cheap monitor against the running marginals; exact values come from
    // compare_marginals after the run.
    double sum = 0.0;
    int counted = 0;
    for (int v = 0; v < model_->vertex_count; ++v) {
      double tot = 0.0;
      for (int s = 0; s < stats_.m; ++s)
        tot += stats_.site_weight[v * stats_.m + s];
      if (tot <= 0.0)
        continue;
      double tv = 0.0;
      for (int s = 0; s < stats_.m; ++s) {
        const double ref = tv_reference_.empty() ? 1.0 / stats_.m : tv_reference_[s];
        tv += std::abs(stats_.site_weight[v * stats_.m + s] / tot - ref);
      }
      sum += 0.5 * tv;
      ++counted;
    }
    return counted > 0 ? sum / counted : 0.0;
  }

  const ProcessModel* model_;
  std::vector<int> spin_;
  std::vector<std::vector<int>> incident_;
  std::vector<double> edge_rate_;
  SumTree tree_;
  Rng rng_;
  double clock_ = 0.0;
  double stats_start_ = 0.0;
  std::uint64_t events_ = 0;
  int active_edges_ = 0;
  bool snapshot_taken_ = false;
  StatsAccumulator stats_;
  std::vector<double> site_last_, edge_last_;
  std::vector<double> tv_reference_;
};

// ---------------------------------------------------------------------------
// Marginal comparison against a target single-site measure.

struct MarginalReport {
  std::vector<double> site_tv;
  std::vector<double> edge_tv;
  double site_tv_max = 0.0, site_tv_mean = 0.0;
  double edge_tv_max = 0.0, edge_tv_mean = 0.0;
};

inline MarginalReport compare_marginals(const StatsAccumulator& stats, const SpinMeasure& nu) {
  if (stats.weighted_time <= 0.0)
    throw ValidationError("statistics cover no simulated time");
  if (nu.size() != stats.m)
    throw ValidationError("measure size does not match the statistics' spin count");
  const PairMeasure nu2 = pair_measure(nu);
  MarginalReport rep;
  for (int v = 0; v < stats.vertices; ++v) {
    const auto p = stats.site_marginal(v);
    double tv = 0.0;
    for (int s = 0; s < stats.m; ++s)
      tv += std::abs(p[s] - nu.p[s]);
    rep.site_tv.push_back(0.5 * tv);
  }
  for (int e = 0; e < stats.edges; ++e) {
    const auto p = stats.edge_marginal(e);
    double tv = 0.0;
    for (int i = 0; i < stats.m * stats.m; ++i)
      tv += std::abs(p[i] - nu2.at(pair_from_index(i, stats.m)));
    rep.edge_tv.push_back(0.5 * tv);
  }
  for (double tv : rep.site_tv) {
    rep.site_tv_max = std::max(rep.site_tv_max, tv);
    rep.site_tv_mean += tv;
  }
  if (!rep.site_tv.empty())
    rep.site_tv_mean /= static_cast<double>(rep.site_tv.size());
  for (double tv : rep.edge_tv) {
    rep.edge_tv_max = std::max(rep.edge_tv_max, tv);
    rep.edge_tv_mean += tv;
  }
  if (!rep.edge_tv.empty())
    rep.edge_tv_mean /= static_cast<double>(rep.edge_tv.size());
  return rep;
}

// Pooled single-site and adjacent-pair distributions over all sites and
// edges, for aggregate comparisons that average out frozen local disorder.
inline double pooled_site_tv(const StatsAccumulator& stats, const SpinMeasure& nu) {
  std::vector<double> pooled(stats.m, 0.0);
  double tot = 0.0;
  for (std::size_t i = 0; i < stats.site_weight.size(); ++i) {
    pooled[i % stats.m] += stats.site_weight[i];
    tot += stats.site_weight[i];
  }
  if (tot <= 0.0)
    throw ValidationError("statistics cover no simulated time");
  double tv = 0.0;
  for (int s = 0; s < stats.m; ++s)
    tv += std::abs(pooled[s] / tot - nu.p[s]);
  return 0.5 * tv;
}

inline double pooled_edge_tv(const StatsAccumulator& stats, const SpinMeasure& nu) {
  const PairMeasure nu2 = pair_measure(nu);
  const int mm = stats.m * stats.m;
  std::vector<double> pooled(mm, 0.0);
  double tot = 0.0;
  for (std::size_t i = 0; i < stats.edge_weight.size(); ++i) {
    pooled[i % mm] += stats.edge_weight[i];
    tot += stats.edge_weight[i];
  }
  if (tot <= 0.0)
    throw ValidationError("statistics cover no simulated time");
  double tv = 0.0;
  for (int i = 0; i < mm; ++i)
    tv += std::abs(pooled[i] / tot - nu2.at(pair_from_index(i, stats.m)));
  return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// Replicas: independent streams from a master seed, run in index order and
// merged deterministically.

struct ReplicaResult {
  RunReport report;
  StatsAccumulator stats;
};

struct ReplicaSet {
  std::vector<ReplicaResult> replicas;
  StatsAccumulator merged;
};

inline ReplicaSet run_replicas(const ProcessModel& model, const SpinMeasure& nu,
                               std::uint64_t master_seed, int replicas,
                               const StopRule& burn_in, const StopRule& measure,
                               std::uint64_t tv_stride = 0) {
  if (replicas < 1)
    throw ValidationError("at least one replica is required");
  ReplicaSet out;
  out.merged = StatsAccumulator(model.spins.size, model.vertex_count,
                                static_cast<int>(model.edges.size()));
  for (int r = 0; r < replicas; ++r) {
    Simulator sim(model, nu, replica_seed(master_seed, r));
    sim.set_tv_reference(nu);
    const bool want_burn_in = burn_in.kind == StopRule::Kind::Events ? burn_in.events > 0
                                                                     : burn_in.time > 0.0;
    if (want_burn_in)
      sim.run(burn_in);
    sim.reset_stats();
    ReplicaResult res;
    res.report = sim.run(measure, tv_stride);
    res.stats = sim.stats();
    out.merged.merge(res.stats);
    out.replicas.push_back(std::move(res));
  }
  return out;
}

}  // namespace exchange

#endif  // EXCHANGE_KMC_HPP
