#pragma once

#include <Eigen/Dense>

#include "pml/objective.hpp"

namespace pml {

enum class Balancing { none, loss, gradient };

/// Per-task window of the most recent losses, used to normalize each task
/// loss by its running mean.
class LossHistory {
 public:
  LossHistory(Eigen::Index tasks, Eigen::Index window);

  void push(const Eigen::Ref<const VectorLoss>& losses);

  /// Mean over the last min(steps, window) pushed values, per task.
  Eigen::VectorXd mean() const;

  Eigen::Index window() const { return window_; }
  Eigen::Index tasks() const { return values_.cols(); }
  Eigen::Index steps() const { return steps_; }
  Eigen::Index filled() const { return steps_ < window_ ? steps_ : window_; }

 private:
  Eigen::Index window_;
  Eigen::MatrixXd values_;  // ring buffer, window x tasks
  Eigen::Index steps_ = 0;
};

inline constexpr double kBalanceEpsilon = 1e-12;

/// Per-task denominators |mean| + eps. The magnitude keeps the descent
/// direction when losses are negative.
Eigen::VectorXd loss_balance_denominators(const LossHistory& hist);

/// raw ./ denominators. Push the current step's losses into `hist` first.
VectorLoss loss_balance(const Eigen::Ref<const VectorLoss>& raw, const LossHistory& hist);

inline constexpr double kStationaryNorm = 1e-12;

/// Per-row factors 1/||g_t|| (1 for rows with norm below 1e-12).
Eigen::VectorXd gradient_balance_factors(const Eigen::Ref<const VectorGradient>& g);

/// Rows rescaled to unit l2 norm; near-zero rows pass through unchanged.
VectorGradient gradient_balance(const Eigen::Ref<const VectorGradient>& g);

}  // namespace pml
