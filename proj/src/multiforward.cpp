#include "pml/multiforward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pml/errors.hpp"

namespace pml {

MultiForwardGraph build_multiforward_graph(const Eigen::Ref<const Eigen::MatrixXd>& weightings,
                                           GraphMode mode) {
  if (weightings.rows() < 2) throw InvalidParameter("multi-forward graph needs at least two nodes");
  MultiForwardGraph g{weightings, std::vector<std::vector<Edge>>(static_cast<std::size_t>(weightings.cols()))};
  const Eigen::Index w = weightings.rows();

  for (Eigen::Index t = 0; t < weightings.cols(); ++t) {
    auto& edges = g.edges[static_cast<std::size_t>(t)];
    if (mode == GraphMode::full) {
      for (Eigen::Index i = 0; i < w; ++i) {
        for (Eigen::Index j = 0; j < w; ++j) {
          if (weightings(i, t) < weightings(j, t)) edges.emplace_back(i, j);
        }
      }
      continue;
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(w));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (weightings(a, t) != weightings(b, t)) return weightings(a, t) < weightings(b, t);
      for (Eigen::Index k = 0; k < weightings.cols(); ++k) {
        if (weightings(a, k) != weightings(b, k)) return weightings(a, k) < weightings(b, k);
      }
      return false;
    });
    for (std::size_t k = 0; k + 1 < order.size(); ++k) edges.emplace_back(order[k], order[k + 1]);
  }
  return g;
}

RegularizationResult regularize(const MultiForwardGraph& graph,
                                const Eigen::Ref<const Eigen::MatrixXd>& node_losses) {
  if (node_losses.rows() != graph.node_count() || node_losses.cols() != graph.task_count()) {
    throw DimensionMismatch("regularization: losses must be W x T matching the graph");
  }
  RegularizationResult r{0.0, Eigen::MatrixXd::Zero(node_losses.rows(), node_losses.cols())};
  for (Eigen::Index t = 0; t < graph.task_count(); ++t) {
    const auto& edges = graph.edges[static_cast<std::size_t>(t)];
    if (edges.empty()) continue;
    Eigen::ArrayXd gap(static_cast<Eigen::Index>(edges.size()));
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto [i, j] = edges[e];
      gap(static_cast<Eigen::Index>(e)) = std::max(node_losses(j, t) - node_losses(i, t), 0.0);
    }
    // log-mean-exp, shifted by the largest gap
    const double shift = gap.maxCoeff();
    const Eigen::ArrayXd w = (gap - shift).exp();
    const double sum = w.sum();
    r.value += shift + std::log(sum / static_cast<double>(edges.size()));
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto k = static_cast<Eigen::Index>(e);
      if (!(gap(k) > 0.0)) continue;
      const auto [i, j] = edges[e];
      const double d = w(k) / sum;
      r.gradient(j, t) += d;
      r.gradient(i, t) -= d;
    }
  }
  return r;
}

double regularization(const MultiForwardGraph& graph, const Eigen::Ref<const Eigen::MatrixXd>& node_losses) {
  return regularize(graph, node_losses).value;
}

double total_loss(const Eigen::Ref<const Eigen::MatrixXd>& weightings,
                  const Eigen::Ref<const Eigen::MatrixXd>& node_losses, double lambda,
                  const MultiForwardGraph* graph) {
  if (weightings.rows() != node_losses.rows() || weightings.cols() != node_losses.cols()) {
    throw DimensionMismatch("total_loss: weightings and losses must both be W x T");
  }
  const double scalarized = weightings.cwiseProduct(node_losses).sum();
  if (lambda == 0.0 || graph == nullptr) return scalarized;
  return scalarized + lambda * regularization(*graph, node_losses);
}

}  // namespace pml
