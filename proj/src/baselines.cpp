#include <algorithm>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "pml/errors.hpp"
#include "pml/trainer.hpp"

namespace pml {

Mgda2Combination mgda2_combine(const Eigen::Ref<const VectorGradient>& g) {
  if (g.rows() != 2) throw UnsupportedConfiguration("MGDA closed form supports exactly two tasks");
  const Eigen::VectorXd g1 = g.row(0).transpose();
  const Eigen::VectorXd g2 = g.row(1).transpose();
  const double denom = (g1 - g2).squaredNorm();
  double gamma = 0.5;
  if (denom > 0.0) gamma = std::clamp((g2 - g1).dot(g2) / denom, 0.0, 1.0);
  return {gamma, gamma * g1 + (1.0 - gamma) * g2};
}

Eigen::VectorXd pcgrad_combine(const Eigen::Ref<const VectorGradient>& g, Rng& rng) {
  const Eigen::Index tasks = g.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(tasks));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::VectorXd total = Eigen::VectorXd::Zero(g.cols());
  for (Eigen::Index i = 0; i < tasks; ++i) {
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    Eigen::VectorXd gi = g.row(i).transpose();
    for (const Eigen::Index j : order) {
      if (j == i) continue;
      const double dot = gi.dot(g.row(j));
      const double nj = g.row(j).squaredNorm();
      if (dot < 0.0 && nj > 0.0) gi -= (dot / nj) * g.row(j).transpose();
    }
    total += gi;
  }
  return total;
}

BaselineResult run_baseline(VectorObjective& objective, const ParameterVector& theta0,
                            BaselineMethod method, const TrainerConfig& config) {
  check_trainer_config(config);
  if (theta0.size() != objective.parameter_count()) {
    throw DimensionMismatch("initial parameters do not match the objective");
  }
  if (method == BaselineMethod::mgda2 && objective.task_count() != 2) {
    throw UnsupportedConfiguration("MGDA baseline is implemented for two tasks only");
  }

  const Eigen::Index tasks = objective.task_count();
  BaselineResult result{theta0, TrajectoryRecord{tasks, {}}, objective.losses(theta0)};
  AdamState adam(theta0.size());
  Rng rng(config.seed);

  auto log_row = [&](std::int64_t k, const VectorLoss& losses) {
    result.trajectory.rows.push_back({k, 0, losses, losses.mean(), 0.0});
  };

  for (std::int64_t k = 0; k < config.iterations; ++k) {
    objective.next_batch(rng);
    const Evaluation e = objective.evaluate(result.theta);
    if (!e.losses.allFinite() || !e.gradients.allFinite()) {
      throw NumericFailure(k, fmt::format("non-finite baseline loss at step {}", k));
    }
    Eigen::VectorXd grad;
    switch (method) {
      case BaselineMethod::ls:
        grad = e.gradients.colwise().mean().transpose();
        break;
      case BaselineMethod::mgda2:
        grad = mgda2_combine(e.gradients).combined;
        break;
      case BaselineMethod::pcgrad:
        grad = pcgrad_combine(e.gradients, rng);
        break;
    }
    if (k == 0 || (config.log_stride > 0 && k % config.log_stride == 0)) log_row(k, e.losses);
    result.previous_losses = e.losses;
    if (config.optimizer == OptimizerKind::adam) {
      adam_step(adam, result.theta, grad, config.learning_rate, config.adam);
    } else {
      sgd_step(result.theta, grad, config.learning_rate);
    }
  }
  log_row(config.iterations, objective.losses(result.theta));
  return result;
}

}  // namespace pml
