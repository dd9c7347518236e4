// Core value types for exchange processes: the spin set X, states of
// S = X×X, the pair map F, measures on X and S, and per-edge rate tables.
#ifndef EXCHANGE_TYPES_HPP
#define EXCHANGE_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace exchange {

using SpinIndex = int;

// Raised on any model/input invariant violation. The message names the
// first offending entry.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a computation would exceed a configured resource cap
// (state-space or search-size limits); mapped to its own exit code.
class ResourceCapError : public std::runtime_error {
public:
  explicit ResourceCapError(const std::string& what) : std::runtime_error(what) {}
};

// Relative closeness test used wherever two probability values are compared
// for level-set membership. Zero compares equal only to zero.
inline bool close_rel(double x, double y, double tol) {
  const double diff = std::abs(x - y);
  if (diff == 0.0)
    return true;
  return diff <= tol * std::max(std::abs(x), std::abs(y));
}

struct SpinSpace {
  int size = 0;
  std::vector<std::string> labels;

  static SpinSpace with_size(int m) {
    if (m < 1)
      throw ValidationError("spin space must contain at least one spin");
    SpinSpace s;
    s.size = m;
    s.labels.reserve(m);
    for (int i = 0; i < m; ++i)
      s.labels.push_back("x" + std::to_string(i + 1));
    return s;
  }

  static SpinSpace with_labels(std::vector<std::string> labels) {
    SpinSpace s;
    s.size = static_cast<int>(labels.size());
    s.labels = std::move(labels);
    if (s.size < 1)
      throw ValidationError("spin space must contain at least one spin");
    auto sorted = s.labels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("spin labels must be pairwise distinct");
    return s;
  }

  const std::string& label(SpinIndex i) const { return labels[i]; }
};

// One state of S = X×X.
struct PairState {
  SpinIndex a = 0;
  SpinIndex b = 0;

  friend bool operator==(const PairState&, const PairState&) = default;
  friend auto operator<=>(const PairState&, const PairState&) = default;
};

// The coordinate swap j(a,b) = (b,a).
inline PairState swapped(PairState s) { return {s.b, s.a}; }

// Row-major index of a pair state; the canonical enumeration order of S.
inline int pair_index(PairState s, int m) { return s.a * m + s.b; }
inline PairState pair_from_index(int idx, int m) { return {idx / m, idx % m}; }

// The deterministic binary reaction F : S -> S stored as an explicit table.
class PairMap {
public:
  PairMap() = default;

  // Validates every entry and caches the symmetry/bijectivity flags.
  static PairMap from_table(int m, std::vector<PairState> table) {
    if (m < 1)
      throw ValidationError("pair map needs at least one spin");
    if (static_cast<int>(table.size()) != m * m)
      throw ValidationError("pair map table must have m*m entries");
    PairMap f;
    f.m_ = m;
    f.table_ = std::move(table);
    for (int i = 0; i < m * m; ++i) {
      const PairState t = f.table_[i];
      if (t.a < 0 || t.a >= m || t.b < 0 || t.b >= m) {
        const PairState s = pair_from_index(i, m);
        throw ValidationError("F(" + std::to_string(s.a) + "," + std::to_string(s.b) +
                              ") spin index out of range");
      }
    }
    f.symmetric_ = f.compute_symmetric();
    f.bijective_ = f.compute_bijective();
    return f;
  }

  // Kawasaki exchange: F(a,b) = (b,a).
  static PairMap swap_map(int m) {
    std::vector<PairState> t(m * m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        t[a * m + b] = {b, a};
    return from_table(m, std::move(t));
  }

  static PairMap identity(int m) {
    std::vector<PairState> t(m * m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        t[a * m + b] = {a, b};
    return from_table(m, std::move(t));
  }

  // Componentwise action of a single-spin map: F(a,b) = (f(a), f(b)).
  static PairMap from_spin_map(const std::vector<SpinIndex>& f) {
    const int m = static_cast<int>(f.size());
    std::vector<PairState> t(m * m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        t[a * m + b] = {f[a], f[b]};
    return from_table(m, std::move(t));
  }

  int spin_count() const { return m_; }
  int state_count() const { return m_ * m_; }

  PairState apply(PairState s) const { return table_[s.a * m_ + s.b]; }
  PairState apply_index(int idx) const { return table_[idx]; }

  bool is_symmetric() const { return symmetric_; }
  bool is_bijective() const { return bijective_; }

  // Preimage table for bijective maps: inverse()[pair_index(s)] = F^{-1}(s).
  std::vector<PairState> inverse() const {
    if (!bijective_)
      throw ValidationError("F is not bijective; no inverse exists");
    std::vector<PairState> inv(m_ * m_);
    for (int i = 0; i < m_ * m_; ++i)
      inv[pair_index(table_[i], m_)] = pair_from_index(i, m_);
    return inv;
  }

  friend bool operator==(const PairMap& x, const PairMap& y) {
    return x.m_ == y.m_ && x.table_ == y.table_;
  }

private:
  bool compute_symmetric() const {
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        if (apply({b, a}) != swapped(apply({a, b})))
          return false;
    return true;
  }

  bool compute_bijective() const {
    std::vector<char> hit(m_ * m_, 0);
    for (const PairState& t : table_) {
      char& h = hit[pair_index(t, m_)];
      if (h)
        return false;
      h = 1;
    }
    return true;
  }

  int m_ = 0;
  std::vector<PairState> table_;
  bool symmetric_ = false;
  bool bijective_ = false;
};

// A probability vector on X.
struct SpinMeasure {
  std::vector<double> p;

  static SpinMeasure from_probs(std::vector<double> probs) {
    SpinMeasure nu;
    nu.p = std::move(probs);
    if (nu.p.empty())
      throw ValidationError("measure must have at least one entry");
    double sum = 0.0;
    for (std::size_t i = 0; i < nu.p.size(); ++i) {
      const double v = nu.p[i];
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw ValidationError("nu[" + std::to_string(i) + "] must lie in [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw ValidationError("measure entries sum to " + std::to_string(sum) +
                            ", expected 1 within 1e-12");
    return nu;
  }

  static SpinMeasure uniform(int m) {
    return from_probs(std::vector<double>(m, 1.0 / m));
  }

  int size() const { return static_cast<int>(p.size()); }
  double operator[](SpinIndex i) const { return p[i]; }
};

// The product measure nu^2 = nu x nu on S.
struct PairMeasure {
  int m = 0;
  std::vector<double> p;  // row-major over S

  static PairMeasure product(const SpinMeasure& nu) {
    PairMeasure q;
    q.m = nu.size();
    q.p.resize(q.m * q.m);
    for (int a = 0; a < q.m; ++a)
      for (int b = 0; b < q.m; ++b)
        q.p[a * q.m + b] = nu.p[a] * nu.p[b];
    return q;
  }

  double at(PairState s) const { return p[s.a * m + s.b]; }
};

// Shorthand used throughout: nu^2 as a free function.
inline PairMeasure pair_measure(const SpinMeasure& nu) { return PairMeasure::product(nu); }

// Per-edge transition rates lambda(a,b) >= 0.
struct RateTable {
  int m = 0;
  std::vector<double> r;  // row-major over S

  static RateTable constant(int m, double rate) {
    RateTable t;
    t.m = m;
    t.r.assign(m * m, rate);
    t.validate();
    return t;
  }

  static RateTable from_rows(int m, std::vector<double> rows) {
    RateTable t;
    t.m = m;
    t.r = std::move(rows);
    if (static_cast<int>(t.r.size()) != m * m)
      throw ValidationError("rate table must have m*m entries");
    t.validate();
    return t;
  }

  void validate() const {
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double v = r[a * m + b];
        if (!std::isfinite(v) || v < 0.0)
          throw ValidationError("rate(" + std::to_string(a) + "," + std::to_string(b) +
                                ") must be finite and non-negative");
      }
  }

  double at(PairState s) const { return r[s.a * m + s.b]; }

  bool is_symmetric() const {
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (r[a * m + b] != r[b * m + a])
          return false;
    return true;
  }

  friend bool operator==(const RateTable&, const RateTable&) = default;
};

}  // namespace exchange

#endif  // EXCHANGE_TYPES_HPP
