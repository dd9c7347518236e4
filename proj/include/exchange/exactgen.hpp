// Exact verification on small configuration spaces: the CTMC generator,
// stationarity residuals for product measures, communicating classes, and
// an exhaustive set-partition oracle for the family enumeration.
#ifndef EXCHANGE_EXACTGEN_HPP
#define EXCHANGE_EXACTGEN_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "exchange/model.hpp"
#include "exchange/partitions.hpp"
#include "exchange/types.hpp"

namespace exchange {

constexpr std::int64_t kDefaultStateCap = 200000;

// Sparse generator over configuration indices c = sum_i x_{v_i} m^i.
// Off-diagonal entries per row; diagonal kept explicitly so the row-sum
// invariant stays checkable.
struct GeneratorMatrix {
  std::int64_t states = 0;
  int m = 0;
  int vertices = 0;
  std::vector<std::vector<std::pair<std::int64_t, double>>> rows;
  std::vector<double> diag;
  double max_rate = 0.0;

  double row_sum(std::int64_t c) const {
    double s = diag[c];
    for (const auto& [to, rate] : rows[c])
      s += rate;
    return s;
  }
};

inline std::int64_t state_count_checked(int m, int vertices, std::int64_t cap) {
  std::int64_t n = 1;
  for (int i = 0; i < vertices; ++i) {
    if (n > cap / m)
      throw ResourceCapError("state space " + std::to_string(m) + "^" +
                             std::to_string(vertices) + " exceeds the cap of " +
                             std::to_string(cap) + " states");
    n *= m;
  }
  return n;
}

inline GeneratorMatrix build_generator(const ProcessModel& model,
                                       std::int64_t state_cap = kDefaultStateCap) {
  const int m = model.spins.size;
  GeneratorMatrix q;
  q.m = m;
  q.vertices = model.vertex_count;
  q.states = state_count_checked(m, model.vertex_count, state_cap);
  q.rows.resize(q.states);
  q.diag.assign(q.states, 0.0);

  // Precomputed digit weights m^v per vertex.
  std::vector<std::int64_t> weight(model.vertex_count, 1);
  for (int v = 1; v < model.vertex_count; ++v)
    weight[v] = weight[v - 1] * m;

  std::vector<int> spin(model.vertex_count);
  for (std::int64_t c = 0; c < q.states; ++c) {
    std::int64_t rest = c;
    for (int v = 0; v < model.vertex_count; ++v) {
      spin[v] = static_cast<int>(rest % m);
      rest /= m;
    }
    for (const Edge& e : model.edges) {
      const PairState s{spin[e.v], spin[e.w]};
      const PairState t = model.map.apply(s);
      if (t == s)
        continue;
      const double rate = e.rates.at(s);
      if (rate <= 0.0)
        continue;
      const std::int64_t to = c + (t.a - s.a) * weight[e.v] + (t.b - s.b) * weight[e.w];
      q.rows[c].emplace_back(to, rate);
      q.diag[c] -= rate;
      if (rate > q.max_rate)
        q.max_rate = rate;
    }
  }
  return q;
}

// Product-measure weights mu(c) = prod_v nu(x_v), multiplied in vertex
// order so equal configurations always give bitwise-equal weights.
inline std::vector<double> product_weights(const SpinMeasure& nu, const GeneratorMatrix& q) {
  if (nu.size() != q.m)
    throw ValidationError("measure size does not match the generator's spin count");
  std::vector<double> mu(q.states);
  for (std::int64_t c = 0; c < q.states; ++c) {
    double w = 1.0;
    std::int64_t rest = c;
    for (int v = 0; v < q.vertices; ++v) {
      w *= nu.p[static_cast<int>(rest % q.m)];
      rest /= q.m;
    }
    mu[c] = w;
  }
  return mu;
}

struct ExactResidual {
  double residual = 0.0;   // max-norm of mu^T Q
  double tol = 0.0;        // 1e-12 x max rate unless overridden
  bool invariant = false;
};

inline ExactResidual verify_invariant_exact(const SpinMeasure& nu, const GeneratorMatrix& q,
                                            double tol_scale = 1e-12) {
  const std::vector<double> mu = product_weights(nu, q);
  std::vector<double> acc(q.states, 0.0);
  for (std::int64_t c = 0; c < q.states; ++c) {
    if (mu[c] == 0.0 && q.diag[c] == 0.0)
      continue;
    acc[c] += mu[c] * q.diag[c];
    for (const auto& [to, rate] : q.rows[c])
      acc[to] += mu[c] * rate;
  }
  ExactResidual out;
  for (double v : acc)
    out.residual = std::max(out.residual, std::abs(v));
  out.tol = tol_scale * q.max_rate;
  out.invariant = out.residual <= out.tol;
  return out;
}

// ---------------------------------------------------------------------------
// Communicating classes: strongly connected components of the positive-rate
// transition digraph (iterative Tarjan). A class is closed when no rate
// leaves it; closed classes are the recurrent ones.

struct ClassAnalysis {
  int count = 0;
  int closed_count = 0;
  std::vector<int> class_of;
  bool irreducible = false;
};

inline ClassAnalysis communicating_classes(const GeneratorMatrix& q) {
  const std::int64_t n = q.states;
  ClassAnalysis out;
  out.class_of.assign(n, -1);
  std::vector<std::int64_t> index(n, -1), low(n, 0), stack;
  std::vector<char> on_stack(n, 0);
  std::int64_t next_index = 0;

  struct Frame {
    std::int64_t v;
    std::size_t edge;
  };
  std::vector<Frame> frames;
  for (std::int64_t root = 0; root < n; ++root) {
    if (index[root] >= 0)
      continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      auto& [v, ei] = frames.back();
      if (ei == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      if (ei < q.rows[v].size()) {
        const std::int64_t w = q.rows[v][ei++].first;
        if (index[w] < 0)
          frames.push_back({w, 0});
        else if (on_stack[w])
          low[v] = std::min(low[v], index[w]);
        continue;
      }
      if (low[v] == index[v]) {
        std::int64_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          out.class_of[w] = out.count;
        } while (w != v);
        ++out.count;
      }
      const std::int64_t done = v;
      frames.pop_back();
      if (!frames.empty())
        low[frames.back().v] = std::min(low[frames.back().v], low[done]);
    }
  }
  std::vector<char> closed(out.count, 1);
  for (std::int64_t c = 0; c < n; ++c)
    for (const auto& [to, rate] : q.rows[c])
      if (out.class_of[to] != out.class_of[c])
        closed[out.class_of[c]] = 0;
  for (char f : closed)
    out.closed_count += f;
  out.irreducible = out.count == 1;
  return out;
}

// Diagnostic only: dimension of the stationary space, n - rank(Q^T), via
// column-pivoted QR with a relative threshold. Dense, so capped small.
inline int stationary_dimension(const GeneratorMatrix& q, std::int64_t dense_cap = 1024) {
  if (q.states > dense_cap)
    throw ResourceCapError("dense rank diagnostic capped at " + std::to_string(dense_cap) +
                           " states");
  const auto n = static_cast<Eigen::Index>(q.states);
  Eigen::MatrixXd qt = Eigen::MatrixXd::Zero(n, n);
  for (std::int64_t c = 0; c < q.states; ++c) {
    qt(c, c) = q.diag[c];
    for (const auto& [to, rate] : q.rows[c])
      qt(to, c) += rate;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(qt);
  qr.setThreshold(1e-10);
  return static_cast<int>(n - qr.rank());
}

// ---------------------------------------------------------------------------
// Exhaustive oracle: all set partitions of X (restricted growth strings),
// filtered to those agreeing with F, then reduced to the finest antichain.

inline std::vector<SpinPartition> brute_force_families(const PairMap& f, int m_cap = 8) {
  if (!f.is_symmetric() || !f.is_bijective())
    throw ValidationError("partition oracle requires a symmetric bijective map");
  const int m = f.spin_count();
  if (m > m_cap)
    throw ValidationError("partition oracle capped at m = " + std::to_string(m_cap));
  const auto cycles = decompose_cycles(f);

  std::vector<SpinPartition> agreeing;
  std::vector<int> rgs(m, 0);
  auto visit = [&](auto&& self, int pos, int max_used) -> void {
    if (pos == m) {
      SpinPartition p;
      p.block_of = rgs;
      p.block_count = max_used + 1;
      if (partition_agrees(p, cycles))
        agreeing.push_back(std::move(p));
      return;
    }
    for (int b = 0; b <= max_used + 1; ++b) {
      rgs[pos] = b;
      self(self, pos + 1, std::max(max_used, b));
    }
  };
  visit(visit, 1, 0);  // rgs[0] = 0 fixed

  std::vector<SpinPartition> out;
  for (const SpinPartition& p : agreeing) {
    const bool dominated =
        std::any_of(agreeing.begin(), agreeing.end(), [&](const SpinPartition& finer) {
          return finer != p && finer.refines(p);
        });
    if (!dominated)
      out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace exchange

#endif  // EXCHANGE_EXACTGEN_HPP
