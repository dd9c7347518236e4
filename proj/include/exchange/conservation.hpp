// Additive conservation laws of a pair map: the nullspace of the
// constraints E(x)+E(y) = E(x1)+E(y1) over all transitions, and the check
// that log nu lies in that space for an invariant Bernoulli measure.
#ifndef EXCHANGE_CONSERVATION_HPP
#define EXCHANGE_CONSERVATION_HPP

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "exchange/types.hpp"

namespace exchange {

struct ConservationBasis {
  Eigen::MatrixXd basis;  // m x dimension, orthonormal columns
  int dimension = 0;
};

// Orthonormal basis of {E : E(x)+E(y) is preserved by F on every pair},
// via SVD of the constraint matrix with a relative singular-value cutoff.
inline ConservationBasis conservation_laws(const PairMap& f, double cutoff_scale = 1e-10) {
  const int m = f.spin_count();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m * m, m);
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) {
      const PairState t = f.apply({x, y});
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
      row(x) += 1.0;
      row(y) += 1.0;
      row(t.a) -= 1.0;
      row(t.b) -= 1.0;
      a.row(x * m + y) = row;
    }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const double cutoff = sigma.size() > 0 ? cutoff_scale * sigma(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cutoff && sigma(i) > 0.0)
      ++rank;
  ConservationBasis out;
  out.dimension = m - rank;
  out.basis = svd.matrixV().rightCols(out.dimension);
  return out;
}

struct LogMeasureResult {
  bool ok = false;
  double residual = 0.0;  // relative norm of ln(nu) off the conservation space
  int dimension = 0;
};

inline LogMeasureResult verify_log_measure(const SpinMeasure& nu, const PairMap& f,
                                           double tol = 1e-9) {
  if (nu.size() != f.spin_count())
    throw ValidationError("measure size does not match the map's spin count");
  Eigen::VectorXd v(nu.size());
  for (int x = 0; x < nu.size(); ++x) {
    if (nu.p[x] <= 0.0)
      throw ValidationError("log-measure check needs a strictly positive measure; spin " +
                            std::to_string(x) + " has probability 0 (reduce the map first)");
    v(x) = std::log(nu.p[x]);
  }
  const ConservationBasis laws = conservation_laws(f);
  const Eigen::VectorXd off = v - laws.basis * (laws.basis.transpose() * v);
  const double scale = std::max(1.0, v.norm());
  LogMeasureResult out;
  out.dimension = laws.dimension;
  out.residual = off.norm() / scale;
  out.ok = out.residual <= tol;
  return out;
}

}  // namespace exchange

#endif  // EXCHANGE_CONSERVATION_HPP
