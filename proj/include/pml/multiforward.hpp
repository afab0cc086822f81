#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pml {

enum class GraphMode { full, lex };

using Edge = std::pair<Eigen::Index, Eigen::Index>;

/// Per-task ordering graphs over the weightings sampled in one step.
///
/// An edge (i, j) in task t's list means node j puts strictly more weight on
/// task t than node i (ties only in lex mode), so node j should reach the
/// lower task-t loss.
struct MultiForwardGraph {
  Eigen::MatrixXd nodes;           ///< W x T, one weighting per row
  std::vector<std::vector<Edge>> edges;  ///< one edge list per task

  Eigen::Index node_count() const { return nodes.rows(); }
  Eigen::Index task_count() const { return nodes.cols(); }
};

/// full: every pair with alpha_{i,t} < alpha_{j,t}.
/// lex: per task, nodes sorted by alpha_{.,t} (ties by the whole weighting,
/// lexicographically) and chained, W - 1 edges.
MultiForwardGraph build_multiforward_graph(const Eigen::Ref<const Eigen::MatrixXd>& weightings,
                                           GraphMode mode);

struct RegularizationResult {
  double value = 0.0;
  Eigen::MatrixXd gradient;  ///< dR / dL, W x T
};

/// R = sum_t log(mean_{(i,j) in E_t} exp([L_t(j) - L_t(i)]_+)). Tasks with no
/// edges contribute zero. [x]_+ has subgradient 0 at x = 0.
RegularizationResult regularize(const MultiForwardGraph& graph,
                                const Eigen::Ref<const Eigen::MatrixXd>& node_losses);

double regularization(const MultiForwardGraph& graph, const Eigen::Ref<const Eigen::MatrixXd>& node_losses);

/// sum_i a_i^T L(a_i) + lambda * R. A null graph (single node) has R = 0.
double total_loss(const Eigen::Ref<const Eigen::MatrixXd>& weightings,
                  const Eigen::Ref<const Eigen::MatrixXd>& node_losses, double lambda,
                  const MultiForwardGraph* graph);

}  // namespace pml
