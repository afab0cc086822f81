#include "pml/balancing.hpp"

#include <cmath>

#include "pml/errors.hpp"

namespace pml {

LossHistory::LossHistory(Eigen::Index tasks, Eigen::Index window)
    : window_(window), values_(Eigen::MatrixXd::Zero(window > 0 ? window : 0, tasks)) {
  if (window < 1) throw InvalidParameter("loss balancing window must be positive");
  if (tasks < 1) throw InvalidParameter("loss history needs at least one task");
}

void LossHistory::push(const Eigen::Ref<const VectorLoss>& losses) {
  if (losses.size() != tasks()) throw DimensionMismatch("loss history: task count mismatch");
  if (!losses.allFinite()) throw InvalidParameter("loss history: non-finite loss");
  values_.row(steps_ % window_) = losses.transpose();
  ++steps_;
}

Eigen::VectorXd LossHistory::mean() const {
  if (steps_ == 0) throw InvalidParameter("loss history is empty");
  return values_.topRows(filled()).colwise().mean().transpose();
}

Eigen::VectorXd loss_balance_denominators(const LossHistory& hist) {
  return hist.mean().cwiseAbs().array() + kBalanceEpsilon;
}

VectorLoss loss_balance(const Eigen::Ref<const VectorLoss>& raw, const LossHistory& hist) {
  if (raw.size() != hist.tasks()) throw DimensionMismatch("loss_balance: task count mismatch");
  return raw.cwiseQuotient(loss_balance_denominators(hist));
}

Eigen::VectorXd gradient_balance_factors(const Eigen::Ref<const VectorGradient>& g) {
  Eigen::VectorXd factors(g.rows());
  for (Eigen::Index t = 0; t < g.rows(); ++t) {
    const double norm = g.row(t).norm();
    factors(t) = norm < kStationaryNorm ? 1.0 : 1.0 / norm;
  }
  return factors;
}

VectorGradient gradient_balance(const Eigen::Ref<const VectorGradient>& g) {
  return gradient_balance_factors(g).asDiagonal() * g;
}

}  // namespace pml
