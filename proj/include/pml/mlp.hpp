#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "pml/dataset.hpp"
#include "pml/objective.hpp"
#include "pml/random.hpp"

namespace pml {

/// Shared-bottom network: a ReLU encoder shared by all tasks followed by one
/// linear classification head per task.
///
/// Flat parameter layout: for each encoder layer its weight (out x in,
/// row-major) then bias; then for each task head its weight then bias.
struct MlpSpec {
  Eigen::Index input_dim = 2;
  std::vector<Eigen::Index> hidden_dims{16};
  Eigen::Index tasks = 2;
  Eigen::Index output_dim = 2;
};

void check_mlp_spec(const MlpSpec& spec);
Eigen::Index parameter_count(const MlpSpec& spec);
Eigen::Index shared_parameter_count(const MlpSpec& spec);

/// Independent uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) draws for weights and
/// biases of every layer.
Eigen::VectorXd init_mlp_parameters(const MlpSpec& spec, Rng& rng);

/// Per-task softmax outputs, one n x output_dim matrix per task.
std::vector<Eigen::MatrixXd> mlp_probabilities(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                               const MlpSpec& spec,
                                               const Eigen::Ref<const Eigen::MatrixXd>& inputs);

/// Per-task mean cross-entropy and its exact gradient. Row t of the gradient
/// covers the encoder and head t; the other heads' entries are zero.
Evaluation mlp_loss_and_grad(const Eigen::Ref<const Eigen::VectorXd>& theta, const MlpSpec& spec,
                             const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                             const Eigen::Ref<const Eigen::MatrixXi>& labels);

VectorLoss mlp_loss(const Eigen::Ref<const Eigen::VectorXd>& theta, const MlpSpec& spec,
                    const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                    const Eigen::Ref<const Eigen::MatrixXi>& labels);

/// Per-task classification accuracy.
Eigen::VectorXd mlp_accuracy(const Eigen::Ref<const Eigen::VectorXd>& theta, const MlpSpec& spec,
                             const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                             const Eigen::Ref<const Eigen::MatrixXi>& labels);

/// Mini-batch view of a dataset. batch_size <= 0 or >= n means full batch.
class MlpObjective final : public VectorObjective {
 public:
  MlpObjective(MlpSpec spec, std::shared_ptr<const SyntheticDataset> data, Eigen::Index batch_size);

  Eigen::Index task_count() const override { return spec_.tasks; }
  Eigen::Index parameter_count() const override { return pml::parameter_count(spec_); }
  VectorLoss losses(const Eigen::VectorXd& theta) const override;
  Evaluation evaluate(const Eigen::VectorXd& theta) const override;
  Eigen::ArrayXd shared_mask() const override;

  /// Advances to the next batch of a seeded per-epoch shuffle.
  void next_batch(Rng& rng) override;

  const MlpSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& batch_inputs() const { return batch_inputs_; }
  const Eigen::MatrixXi& batch_labels() const { return batch_labels_; }

 private:
  void load_batch();

  MlpSpec spec_;
  std::shared_ptr<const SyntheticDataset> data_;
  Eigen::Index batch_size_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
  bool shuffled_ = false;
  Eigen::MatrixXd batch_inputs_;
  Eigen::MatrixXi batch_labels_;
};

}  // namespace pml
