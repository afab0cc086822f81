#pragma once

#include <Eigen/Dense>

#include "pml/random.hpp"

namespace pml {

/// Length-T task losses.
using VectorLoss = Eigen::VectorXd;

/// T x N: row t holds dLoss_t/dtheta.
using VectorGradient = Eigen::MatrixXd;

struct Evaluation {
  VectorLoss losses;
  VectorGradient gradients;
};

/// A differentiable vector-valued loss over one parameter vector.
///
/// Stochastic objectives (mini-batches) expose the current batch through
/// next_batch(); evaluate() and losses() always refer to the current batch.
class VectorObjective {
 public:
  virtual ~VectorObjective() = default;

  virtual Eigen::Index task_count() const = 0;
  virtual Eigen::Index parameter_count() const = 0;

  virtual VectorLoss losses(const Eigen::VectorXd& theta) const = 0;
  virtual Evaluation evaluate(const Eigen::VectorXd& theta) const = 0;

  /// 1 for parameters shared by all tasks, 0 for task-specific ones.
  virtual Eigen::ArrayXd shared_mask() const { return Eigen::ArrayXd::Ones(parameter_count()); }

  virtual void next_batch(Rng&) {}
};

}  // namespace pml
