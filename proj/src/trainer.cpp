#include "pml/trainer.hpp"

#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "pml/errors.hpp"
#include "pml/io.hpp"

namespace pml {
namespace {

Eigen::MatrixXd loss_weightings(const Eigen::Ref<const Eigen::MatrixXd>& weightings,
                                const TaskWeightMatrix& task_weights) {
  if (task_weights.size() == 0) return weightings;
  if (task_weights.rows() != weightings.cols()) {
    throw DimensionMismatch("task weight matrix must have one row per member");
  }
  return weightings * task_weights;
}

void append_member_rows(TrajectoryRecord& record, const VectorObjective& objective,
                        const ParameterMatrix& theta, std::int64_t iteration, double total, double reg) {
  for (Eigen::Index m = 0; m < theta.rows(); ++m) {
    record.rows.push_back({iteration, m, objective.losses(theta.row(m).transpose()), total, reg});
  }
}

bool should_log(std::int64_t k, std::int64_t stride) {
  if (k == 0) return true;
  return stride > 0 && k % stride == 0;
}

}  // namespace

void check_trainer_config(const TrainerConfig& c) {
  if (c.iterations < 0) throw InvalidParameter("iterations must be non-negative");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw InvalidParameter("learning rate must be positive");
  }
  if (c.window < 1) throw InvalidParameter("window W must be at least 1");
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw InvalidParameter("lambda must be >= 0");
  if (c.balance_window < 1) throw InvalidParameter("balancing window must be positive");
  if (c.dirichlet.size() > 0) DirichletParams check(c.dirichlet);
  if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0 &&
        c.adam.eps > 0.0)) {
    throw InvalidParameter("Adam parameters out of range");
  }
  if (c.task_weights.size() > 0) check_task_weight_matrix(c.task_weights);
}

std::string trajectory_csv(const TrajectoryRecord& record) {
  std::string out = "iter,member";
  for (Eigen::Index t = 0; t < record.tasks; ++t) out += fmt::format(",loss_{}", t + 1);
  out += ",total,reg\n";
  for (const auto& row : record.rows) {
    out += fmt::format("{},{}", row.iteration, row.member);
    for (Eigen::Index t = 0; t < row.losses.size(); ++t) out += "," + io::format_real(row.losses(t));
    out += "," + io::format_real(row.total) + "," + io::format_real(row.reg) + "\n";
  }
  return out;
}

NodeEvaluations evaluate_nodes(const VectorObjective& objective, const ParameterMatrix& theta,
                               const Eigen::Ref<const Eigen::MatrixXd>& weightings) {
  if (weightings.cols() != theta.rows()) {
    throw DimensionMismatch("weightings must have one coordinate per member");
  }
  if (theta.cols() != objective.parameter_count()) {
    throw DimensionMismatch("member length does not match the objective");
  }
  NodeEvaluations nodes{Eigen::MatrixXd(weightings.rows(), objective.task_count()), {}};
  for (Eigen::Index i = 0; i < weightings.rows(); ++i) {
    Evaluation e = objective.evaluate(interpolate(theta, weightings.row(i).transpose()));
    nodes.losses.row(i) = e.losses.transpose();
    nodes.gradients.push_back(std::move(e.gradients));
  }
  return nodes;
}

StepResult combine_step(const ParameterMatrix& theta, const Eigen::Ref<const Eigen::MatrixXd>& weightings,
                        const NodeEvaluations& nodes, const StepOptions& options) {
  const Eigen::Index w = weightings.rows();
  const Eigen::Index members = theta.rows();
  const Eigen::Index n = theta.cols();
  const Eigen::Index tasks = nodes.losses.cols();
  if (nodes.losses.rows() != w || static_cast<Eigen::Index>(nodes.gradients.size()) != w) {
    throw DimensionMismatch("node evaluations do not match the weightings");
  }

  const Eigen::MatrixXd lw = loss_weightings(weightings, options.task_weights);
  if (lw.cols() != tasks) throw DimensionMismatch("loss weighting width must equal the task count");

  Eigen::VectorXd den = Eigen::VectorXd::Ones(tasks);
  if (options.loss_denominators.size() > 0) {
    if (options.loss_denominators.size() != tasks) throw DimensionMismatch("one denominator per task");
    den = options.loss_denominators;
  }
  const Eigen::MatrixXd scaled = nodes.losses * den.cwiseInverse().asDiagonal();

  StepResult result;
  Eigen::MatrixXd coeff = lw;  // dL_total / dL_scaled, W x T
  if (w >= 2) {
    const MultiForwardGraph graph = build_multiforward_graph(lw, options.graph_mode);
    const RegularizationResult r = regularize(graph, scaled);
    result.reg = r.value;
    if (options.lambda > 0.0) coeff += options.lambda * r.gradient;
  }
  result.total = lw.cwiseProduct(scaled).sum() + options.lambda * result.reg;
  coeff = coeff * den.cwiseInverse().asDiagonal();

  // Per-task contributions to dL_total/dTheta, plus the raw per-task
  // gradients that gradient balancing normalizes by.
  std::vector<Eigen::MatrixXd> contribution(static_cast<std::size_t>(tasks), Eigen::MatrixXd::Zero(members, n));
  std::vector<Eigen::MatrixXd> raw;
  if (options.gradient_balancing) raw.assign(static_cast<std::size_t>(tasks), Eigen::MatrixXd::Zero(members, n));
  for (Eigen::Index i = 0; i < w; ++i) {
    const VectorGradient& g = nodes.gradients[static_cast<std::size_t>(i)];
    if (g.rows() != tasks || g.cols() != n) throw DimensionMismatch("node gradient must be T x N");
    for (Eigen::Index t = 0; t < tasks; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      contribution[ts].noalias() += (coeff(i, t) * weightings.row(i).transpose()) * g.row(t);
      if (options.gradient_balancing) raw[ts].noalias() += weightings.row(i).transpose() * g.row(t);
    }
  }

  result.gradient = Eigen::MatrixXd::Zero(members, n);
  if (!options.gradient_balancing) {
    for (const auto& c : contribution) result.gradient += c;
    return result;
  }

  Eigen::ArrayXd mask = options.shared_mask;
  if (mask.size() == 0) mask = Eigen::ArrayXd::Ones(n);
  if (mask.size() != n) throw DimensionMismatch("shared mask must cover every parameter");
  const Eigen::RowVectorXd shared = mask.matrix().transpose();
  const Eigen::RowVectorXd specific = (1.0 - mask).matrix().transpose();

  VectorGradient shared_raw(tasks, members * n);
  for (Eigen::Index t = 0; t < tasks; ++t) {
    const Eigen::MatrixXd masked = raw[static_cast<std::size_t>(t)] * shared.asDiagonal();
    shared_raw.row(t) = Eigen::Map<const Eigen::RowVectorXd>(masked.data(), masked.size());
  }
  const Eigen::VectorXd factor = gradient_balance_factors(shared_raw);
  for (Eigen::Index t = 0; t < tasks; ++t) {
    const auto& c = contribution[static_cast<std::size_t>(t)];
    result.gradient += factor(t) * (c * shared.asDiagonal()) + c * specific.asDiagonal();
  }
  return result;
}

StepResult pml_step(const VectorObjective& objective, const ParameterMatrix& theta,
                    const Eigen::Ref<const Eigen::MatrixXd>& weightings, const StepOptions& options) {
  return combine_step(theta, weightings, evaluate_nodes(objective, theta, weightings), options);
}

PmlResult run_pml(VectorObjective& objective, const ParameterMatrix& theta0, const TrainerConfig& config) {
  check_trainer_config(config);
  check_parameter_matrix(theta0);
  const Eigen::Index members = theta0.rows();
  const Eigen::Index tasks = objective.task_count();
  if (theta0.cols() != objective.parameter_count()) {
    throw DimensionMismatch("member length does not match the objective");
  }
  if (config.task_weights.size() == 0 && members != tasks) {
    throw DimensionMismatch("identity task weights need one member per task");
  }
  if (config.task_weights.size() > 0 &&
      (config.task_weights.rows() != members || config.task_weights.cols() != tasks)) {
    throw DimensionMismatch("task weight matrix must be M x T");
  }

  const DirichletParams dirichlet = config.dirichlet.size() > 0
                                        ? DirichletParams(config.dirichlet)
                                        : DirichletParams::symmetric(members, 1.0);
  if (dirichlet.size() != members) throw DimensionMismatch("Dirichlet dimension must equal member count");

  PmlResult result{theta0, TrajectoryRecord{tasks, {}}};
  ParameterMatrix& theta = result.theta;
  Eigen::Map<Eigen::VectorXd> flat(theta.data(), theta.size());
  AdamState adam(theta.size());
  std::optional<LossHistory> history;
  if (config.balancing == Balancing::loss) history.emplace(tasks, config.balance_window);

  StepOptions options;
  options.lambda = config.lambda;
  options.graph_mode = config.graph_mode;
  options.gradient_balancing = config.balancing == Balancing::gradient;
  options.shared_mask = objective.shared_mask();
  options.task_weights = config.task_weights;

  const double lr = config.learning_rate * (config.lr_scale_by_members ? static_cast<double>(members) : 1.0);
  Rng rng(config.seed);

  for (std::int64_t k = 0; k < config.iterations; ++k) {
    objective.next_batch(rng);
    const Eigen::MatrixXd weightings = sample_dirichlet(dirichlet, config.window, rng);
    const NodeEvaluations nodes = evaluate_nodes(objective, theta, weightings);
    if (!nodes.losses.allFinite()) {
      throw NumericFailure(k, fmt::format("non-finite task loss at step {}", k));
    }
    if (history) {
      history->push(nodes.losses.colwise().mean().transpose());
      options.loss_denominators = loss_balance_denominators(*history);
    }
    const StepResult step = combine_step(theta, weightings, nodes, options);
    if (!std::isfinite(step.total) || !step.gradient.allFinite()) {
      throw NumericFailure(k, fmt::format("non-finite total loss {} at step {}", step.total, k));
    }
    if (should_log(k, config.log_stride)) {
      append_member_rows(result.trajectory, objective, theta, k, step.total, step.reg);
    }
    const Eigen::Map<const Eigen::VectorXd> grad(step.gradient.data(), step.gradient.size());
    if (config.optimizer == OptimizerKind::adam) {
      adam_step(adam, flat, grad, lr, config.adam);
    } else {
      sgd_step(flat, grad, lr);
    }
  }

  double own = 0.0;
  for (Eigen::Index m = 0; m < members; ++m) {
    const VectorLoss l = objective.losses(theta.row(m).transpose());
    const Eigen::VectorXd lw = config.task_weights.size() > 0
                                   ? Eigen::VectorXd(config.task_weights.row(m).transpose())
                                   : Eigen::VectorXd::Unit(tasks, m);
    own += lw.dot(l);
  }
  append_member_rows(result.trajectory, objective, theta, config.iterations, own, 0.0);
  return result;
}

}  // namespace pml
