#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pml/balancing.hpp"
#include "pml/ensemble.hpp"
#include "pml/multiforward.hpp"
#include "pml/objective.hpp"
#include "pml/optimizer.hpp"
#include "pml/simplex.hpp"

namespace pml {

struct TrainerConfig {
  std::int64_t iterations = 50000;
  double learning_rate = 2e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamParams adam;
  Eigen::Index window = 1;  ///< weightings sampled per step
  double lambda = 0.0;      ///< ordering-regularizer strength
  Eigen::VectorXd dirichlet;  ///< concentration; empty means Dir(1, ..., 1)
  Balancing balancing = Balancing::none;
  Eigen::Index balance_window = 10;
  GraphMode graph_mode = GraphMode::lex;
  /// Multiply the learning rate by the member count: interpolation scales each
  /// member's gradient by its coefficient, 1/M in expectation.
  bool lr_scale_by_members = false;
  std::int64_t log_stride = 1000;  ///< <= 0 logs only the first and final states
  std::uint64_t seed = 0;
  TaskWeightMatrix task_weights;  ///< M x T; empty means identity (M == T)
};

void check_trainer_config(const TrainerConfig& config);

struct TrajectoryRow {
  std::int64_t iteration = 0;
  Eigen::Index member = 0;
  VectorLoss losses;
  double total = 0.0;
  double reg = 0.0;
};

struct TrajectoryRecord {
  Eigen::Index tasks = 0;
  std::vector<TrajectoryRow> rows;
};

/// CSV: `iter,member,loss_1,...,loss_T,total,reg`.
std::string trajectory_csv(const TrajectoryRecord& record);

/// Losses and per-task gradients of the W interpolated models of one step.
struct NodeEvaluations {
  Eigen::MatrixXd losses;              ///< W x T
  std::vector<VectorGradient> gradients;  ///< W entries of T x N
};

NodeEvaluations evaluate_nodes(const VectorObjective& objective, const ParameterMatrix& theta,
                               const Eigen::Ref<const Eigen::MatrixXd>& weightings);

struct StepOptions {
  double lambda = 0.0;
  GraphMode graph_mode = GraphMode::lex;
  Eigen::VectorXd loss_denominators;  ///< empty: no loss balancing
  bool gradient_balancing = false;
  Eigen::ArrayXd shared_mask;         ///< empty: every parameter shared
  TaskWeightMatrix task_weights;      ///< empty: identity
};

struct StepResult {
  double total = 0.0;
  double reg = 0.0;
  Eigen::MatrixXd gradient;  ///< dL_total / dTheta, M x N
};

/// Total multi-forward loss of one step and its gradient with respect to the
/// member matrix, given already evaluated nodes.
///
/// Each node's gradient reaches member m scaled by a_{i,m}. Loss balancing
/// divides task t's losses by its denominator (also inside the regularizer).
/// Gradient balancing rescales task t's shared-parameter contribution by
/// 1/||sum_i dL_t(a_i)/dTheta||, once per step.
StepResult combine_step(const ParameterMatrix& theta, const Eigen::Ref<const Eigen::MatrixXd>& weightings,
                        const NodeEvaluations& nodes, const StepOptions& options);

StepResult pml_step(const VectorObjective& objective, const ParameterMatrix& theta,
                    const Eigen::Ref<const Eigen::MatrixXd>& weightings, const StepOptions& options);

struct PmlResult {
  ParameterMatrix theta;
  TrajectoryRecord trajectory;
};

/// Trains the ensemble: per step, sample `window` weightings, evaluate the
/// interpolated models, add the ordering regularizer, update all members.
///
/// Logged rows hold the pre-update member losses at every `log_stride`-th
/// step. A last row per member at iteration == iterations records the final
/// members with total = sum of member-own losses and reg = 0.
/// Throws NumericFailure if a step's total loss is not finite.
PmlResult run_pml(VectorObjective& objective, const ParameterMatrix& theta0, const TrainerConfig& config);

enum class BaselineMethod { ls, mgda2, pcgrad };

struct Mgda2Combination {
  double gamma = 0.5;
  Eigen::VectorXd combined;
};

/// Min-norm point gamma*g1 + (1-gamma)*g2 of two task gradients, with
/// gamma = clip((g2 - g1).g2 / ||g1 - g2||^2, 0, 1).
Mgda2Combination mgda2_combine(const Eigen::Ref<const VectorGradient>& g);

/// Projects each task gradient (in random order) off every other task's
/// gradient it conflicts with, then sums.
Eigen::VectorXd pcgrad_combine(const Eigen::Ref<const VectorGradient>& g, Rng& rng);

struct BaselineResult {
  ParameterVector theta;
  TrajectoryRecord trajectory;
  VectorLoss previous_losses;  ///< losses before the last update
};

/// Single-model training with a combined task gradient and Adam. LS descends
/// the average loss. No member-count learning-rate scaling.
BaselineResult run_baseline(VectorObjective& objective, const ParameterVector& theta0,
                            BaselineMethod method, const TrainerConfig& config);

}  // namespace pml
