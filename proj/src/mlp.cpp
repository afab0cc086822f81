#include "pml/mlp.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "pml/errors.hpp"

namespace pml {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstLayerMap = Eigen::Map<const RowMatrix>;
using LayerMap = Eigen::Map<RowMatrix>;

struct Layer {
  Eigen::Index in;
  Eigen::Index out;
  Eigen::Index offset;  // weight start; bias follows at offset + in * out

  Eigen::Index bias_offset() const { return offset + in * out; }
  Eigen::Index size() const { return in * out + out; }
};

struct Layout {
  std::vector<Layer> encoder;
  std::vector<Layer> heads;
  Eigen::Index total = 0;
};

Layout layout_of(const MlpSpec& spec) {
  Layout l;
  Eigen::Index in = spec.input_dim;
  for (const Eigen::Index h : spec.hidden_dims) {
    l.encoder.push_back({in, h, l.total});
    l.total += l.encoder.back().size();
    in = h;
  }
  for (Eigen::Index t = 0; t < spec.tasks; ++t) {
    l.heads.push_back({in, spec.output_dim, l.total});
    l.total += l.heads.back().size();
  }
  return l;
}

ConstLayerMap weight(const Eigen::Ref<const Eigen::VectorXd>& theta, const Layer& layer) {
  return ConstLayerMap(theta.data() + layer.offset, layer.out, layer.in);
}

Eigen::Map<const Eigen::RowVectorXd> bias(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                          const Layer& layer) {
  return Eigen::Map<const Eigen::RowVectorXd>(theta.data() + layer.bias_offset(), layer.out);
}

struct Forward {
  std::vector<Eigen::MatrixXd> pre;   // encoder pre-activations
  std::vector<Eigen::MatrixXd> post;  // post[0] = inputs, post[l + 1] = relu(pre[l])
  std::vector<Eigen::MatrixXd> logits;
};

Forward forward(const Eigen::Ref<const Eigen::VectorXd>& theta, const MlpSpec& spec,
                const Layout& layout, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  if (theta.size() != layout.total) {
    throw DimensionMismatch(fmt::format("MLP expects {} parameters, got {}", layout.total, theta.size()));
  }
  if (inputs.cols() != spec.input_dim) {
    throw DimensionMismatch(fmt::format("MLP expects {}-D inputs, got {}", spec.input_dim, inputs.cols()));
  }
  Forward f;
  f.post.push_back(inputs);
  for (const Layer& layer : layout.encoder) {
    Eigen::MatrixXd z = f.post.back() * weight(theta, layer).transpose();
    z.rowwise() += bias(theta, layer);
    f.post.push_back(z.cwiseMax(0.0));
    f.pre.push_back(std::move(z));
  }
  for (const Layer& head : layout.heads) {
    Eigen::MatrixXd z = f.post.back() * weight(theta, head).transpose();
    z.rowwise() += bias(theta, head);
    f.logits.push_back(std::move(z));
  }
  return f;
}

// Row-wise softmax and mean cross-entropy for one head.
std::pair<Eigen::MatrixXd, double> softmax_cross_entropy(const Eigen::MatrixXd& logits,
                                                         const Eigen::Ref<const Eigen::VectorXi>& y) {
  const Eigen::Index n = logits.rows();
  Eigen::MatrixXd p(n, logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shift = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - shift).exp().matrix();
    const double z = e.sum();
    p.row(i) = e / z;
    loss += shift + std::log(z) - logits(i, y(i));
  }
  return {std::move(p), loss / static_cast<double>(n)};
}

void check_batch(const MlpSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                 const Eigen::Ref<const Eigen::MatrixXi>& labels) {
  if (inputs.rows() == 0) throw InvalidParameter("MLP batch is empty");
  if (labels.rows() != inputs.rows() || labels.cols() != spec.tasks) {
    throw DimensionMismatch("MLP labels must be n x tasks");
  }
  if ((labels.array() < 0).any() || (labels.array() >= spec.output_dim).any()) {
    throw InvalidParameter("MLP label out of range");
  }
}

}  // namespace

void check_mlp_spec(const MlpSpec& spec) {
  if (spec.input_dim < 1 || spec.tasks < 1 || spec.output_dim < 2) {
    throw InvalidParameter("MLP needs positive input size, tasks, and at least two classes");
  }
  if (spec.hidden_dims.empty()) throw InvalidParameter("MLP needs at least one hidden layer");
  for (const auto h : spec.hidden_dims) {
    if (h < 1) throw InvalidParameter("MLP hidden widths must be positive");
  }
}

Eigen::Index parameter_count(const MlpSpec& spec) { return layout_of(spec).total; }

Eigen::Index shared_parameter_count(const MlpSpec& spec) {
  const Layout l = layout_of(spec);
  return l.heads.front().offset;
}

Eigen::VectorXd init_mlp_parameters(const MlpSpec& spec, Rng& rng) {
  check_mlp_spec(spec);
  const Layout layout = layout_of(spec);
  Eigen::VectorXd theta(layout.total);
  auto fill = [&](const Layer& layer) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (Eigen::Index k = 0; k < layer.size(); ++k) {
      theta(layer.offset + k) = rng.uniform(-bound, bound);
    }
  };
  for (const Layer& layer : layout.encoder) fill(layer);
  for (const Layer& head : layout.heads) fill(head);
  return theta;
}

std::vector<Eigen::MatrixXd> mlp_probabilities(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                               const MlpSpec& spec,
                                               const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  check_mlp_spec(spec);
  const Layout layout = layout_of(spec);
  const Forward f = forward(theta, spec, layout, inputs);
  std::vector<Eigen::MatrixXd> out;
  const Eigen::VectorXi dummy = Eigen::VectorXi::Zero(inputs.rows());
  for (const auto& logits : f.logits) out.push_back(softmax_cross_entropy(logits, dummy).first);
  return out;
}

Evaluation mlp_loss_and_grad(const Eigen::Ref<const Eigen::VectorXd>& theta, const MlpSpec& spec,
                             const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                             const Eigen::Ref<const Eigen::MatrixXi>& labels) {
  check_mlp_spec(spec);
  check_batch(spec, inputs, labels);
  const Layout layout = layout_of(spec);
  const Forward f = forward(theta, spec, layout, inputs);
  const auto n = static_cast<double>(inputs.rows());

  Evaluation e{VectorLoss(spec.tasks), VectorGradient::Zero(spec.tasks, layout.total)};
  for (Eigen::Index t = 0; t < spec.tasks; ++t) {
    auto [p, loss] = softmax_cross_entropy(f.logits[static_cast<std::size_t>(t)], labels.col(t));
    e.losses(t) = loss;

    Eigen::MatrixXd dlogits = std::move(p);
    for (Eigen::Index i = 0; i < dlogits.rows(); ++i) dlogits(i, labels(i, t)) -= 1.0;
    dlogits /= n;

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout.total);
    const Layer& head = layout.heads[static_cast<std::size_t>(t)];
    LayerMap(grad.data() + head.offset, head.out, head.in) = dlogits.transpose() * f.post.back();
    grad.segment(head.bias_offset(), head.out) = dlogits.colwise().sum().transpose();

    Eigen::MatrixXd dpost = dlogits * weight(theta, head);
    for (std::size_t l = layout.encoder.size(); l-- > 0;) {
      const Layer& layer = layout.encoder[l];
      const Eigen::MatrixXd dpre = (f.pre[l].array() > 0.0).select(dpost, 0.0);
      LayerMap(grad.data() + layer.offset, layer.out, layer.in) = dpre.transpose() * f.post[l];
      grad.segment(layer.bias_offset(), layer.out) = dpre.colwise().sum().transpose();
      if (l > 0) dpost = dpre * weight(theta, layer);
    }
    e.gradients.row(t) = grad.transpose();
  }
  return e;
}

VectorLoss mlp_loss(const Eigen::Ref<const Eigen::VectorXd>& theta, const MlpSpec& spec,
                    const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                    const Eigen::Ref<const Eigen::MatrixXi>& labels) {
  check_mlp_spec(spec);
  check_batch(spec, inputs, labels);
  const Layout layout = layout_of(spec);
  const Forward f = forward(theta, spec, layout, inputs);
  VectorLoss losses(spec.tasks);
  for (Eigen::Index t = 0; t < spec.tasks; ++t) {
    losses(t) = softmax_cross_entropy(f.logits[static_cast<std::size_t>(t)], labels.col(t)).second;
  }
  return losses;
}

Eigen::VectorXd mlp_accuracy(const Eigen::Ref<const Eigen::VectorXd>& theta, const MlpSpec& spec,
                             const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                             const Eigen::Ref<const Eigen::MatrixXi>& labels) {
  check_mlp_spec(spec);
  check_batch(spec, inputs, labels);
  const Layout layout = layout_of(spec);
  const Forward f = forward(theta, spec, layout, inputs);
  Eigen::VectorXd acc(spec.tasks);
  for (Eigen::Index t = 0; t < spec.tasks; ++t) {
    const auto& logits = f.logits[static_cast<std::size_t>(t)];
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      if (arg == labels(i, t)) ++correct;
    }
    acc(t) = static_cast<double>(correct) / static_cast<double>(logits.rows());
  }
  return acc;
}

MlpObjective::MlpObjective(MlpSpec spec, std::shared_ptr<const SyntheticDataset> data,
                           Eigen::Index batch_size)
    : spec_(std::move(spec)), data_(std::move(data)), batch_size_(batch_size) {
  check_mlp_spec(spec_);
  if (!data_ || data_->sample_count() == 0) throw InvalidParameter("MLP objective needs data");
  if (data_->task_count() != spec_.tasks) {
    throw DimensionMismatch("dataset task count does not match the MLP heads");
  }
  if (batch_size_ <= 0 || batch_size_ > data_->sample_count()) batch_size_ = data_->sample_count();
  order_.resize(static_cast<std::size_t>(data_->sample_count()));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  load_batch();
}

void MlpObjective::next_batch(Rng& rng) {
  if (batch_size_ == data_->sample_count()) return;
  if (shuffled_) cursor_ += static_cast<std::size_t>(batch_size_);
  if (!shuffled_ || cursor_ + static_cast<std::size_t>(batch_size_) > order_.size()) {
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng.below(i)]);
    }
    cursor_ = 0;
    shuffled_ = true;
  }
  load_batch();
}

void MlpObjective::load_batch() {
  batch_inputs_.resize(batch_size_, data_->inputs.cols());
  batch_labels_.resize(batch_size_, data_->labels.cols());
  for (Eigen::Index i = 0; i < batch_size_; ++i) {
    const Eigen::Index src = order_[cursor_ + static_cast<std::size_t>(i)];
    batch_inputs_.row(i) = data_->inputs.row(src);
    batch_labels_.row(i) = data_->labels.row(src);
  }
}

VectorLoss MlpObjective::losses(const Eigen::VectorXd& theta) const {
  return mlp_loss(theta, spec_, batch_inputs_, batch_labels_);
}

Evaluation MlpObjective::evaluate(const Eigen::VectorXd& theta) const {
  return mlp_loss_and_grad(theta, spec_, batch_inputs_, batch_labels_);
}

Eigen::ArrayXd MlpObjective::shared_mask() const {
  Eigen::ArrayXd mask = Eigen::ArrayXd::Zero(parameter_count());
  mask.head(shared_parameter_count(spec_)).setOnes();
  return mask;
}

}  // namespace pml
