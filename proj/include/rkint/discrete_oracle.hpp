#pragma once

// Finite event-tree markets. Everything here is exact up to floating point:
// deflators are the solutions of node-wise linear martingale conditions,
// hedging values come from linear programs on the whole tree.

#include <Eigen/Dense>

#include <istream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rkint/rkhs.hpp"

namespace rkint {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct TreeNode {
  std::string id;
  Index parent = -1;   // -1 for the root
  double prob = 1.0;   // conditional branch probability
  VectorXd prices;
};

class TreeMarket {
 public:
  TreeMarket() = default;
  /// Nodes in any order with parents given by index; validated here.
  TreeMarket(Labels assets, std::vector<TreeNode> nodes);

  /// Text format, one node per line: `id parent prob price...`; parent `-`
  /// marks the root; `assets a b ...` names the price columns; `#` comments.
  static TreeMarket parse(std::istream& in);
  std::string to_text() const;

  Index size() const { return static_cast<Index>(nodes_.size()); }
  Index assets() const { return static_cast<Index>(assets_.size()); }
  const Labels& asset_labels() const { return assets_; }
  const TreeNode& node(Index n) const { return nodes_[n]; }
  const std::vector<Index>& children(Index n) const { return children_[n]; }
  bool is_leaf(Index n) const { return children_[n].empty(); }
  Index root() const { return 0; }
  /// Unconditional probability of reaching node n.
  double path_probability(Index n) const { return path_prob_[n]; }
  /// Nodes ordered parents-first (index order after construction).
  std::vector<Index> leaves() const;
  std::optional<Index> find(const std::string& id) const;

 private:
  Labels assets_;
  std::vector<TreeNode> nodes_;
  std::vector<std::vector<Index>> children_;
  std::vector<double> path_prob_;
};

/// Per-node values (cumulative withdrawal stream, wealth, claim).
using NodeValues = VectorXd;
NodeValues parse_node_values(const TreeMarket& tree, std::istream& in);

struct DeflatorPolytope {
  MatrixXd equalities;  // rows: normalization, then per nonleaf node (1 + assets) martingale rows
  VectorXd rhs;
  Index dimension = 0;  // of the affine solution set
  bool strictly_positive = false;
  std::vector<VectorXd> vertices;  // closure vertices, when enumerable
  bool vertices_enumerated = false;
  bool complete() const { return strictly_positive && dimension == 0; }
};

/// Throws NO_DEFLATOR when no strictly positive solution exists.
DeflatorPolytope deflator_polytope(const TreeMarket& tree, Index vertex_cap = 100000);

/// Vertices of {z >= 0 : sum pi_c z_c = 1, sum pi_c z_c P_c = P_node}.
std::vector<VectorXd> local_vertices(const TreeMarket& tree, Index node);

struct Replication {
  double cost = 0.0;
  VectorXd values;            // per node
  std::vector<VectorXd> hedge; // per node (empty for leaves)
};

/// Backward replication of a terminal claim given on the leaves.
/// Throws INCOMPLETE when some node cannot be hedged exactly.
Replication replicate_backward(const TreeMarket& tree, const NodeValues& claim);

struct DualityResult {
  double primal = 0.0;  // minimal hedging capital
  double dual = 0.0;    // sup over the deflator polytope closure of E[sum Y dK]
  double gap = 0.0;
  VectorXd primal_hedge;  // stacked per nonleaf node, assets each
  VectorXd dual_deflator; // per node
};

/// Throws LP_FAIL when either program does not solve, INVALID_ARGUMENT when
/// the stream is negative/decreasing or the instance exceeds `variable_cap`.
DualityResult superhedge_duality(const TreeMarket& tree, const NodeValues& stream, Index variable_cap = 10000);

/// Minimal hedge by backward recursion Z_n = max(K_n, max_z E_z[Z_children])
/// and by per-subtree duals K_n + sup E[sum_{t > n} (Y_t/Y_n) dK_t].
struct DynamicHedgeCheck {
  VectorXd backward;
  VectorXd dual;
  double max_gap = 0.0;
};
DynamicHedgeCheck dynamic_hedge_check(const TreeMarket& tree, const NodeValues& stream);

struct OptionalDecomposition {
  std::vector<VectorXd> hedge;  // per node (empty for leaves)
  NodeValues gains;             // cumulative trading gains per node
  NodeValues consumption;       // cumulative K per node, K(root) = 0
  double residual = 0.0;        // worst negative consumption increment
};

/// Decomposes X = x + gains - K with K nondecreasing. Throws
/// NOT_SUPERMARTINGALE (naming node and vertex) if some deflator vertex
/// makes Y X a strict submartingale at a node.
OptionalDecomposition optional_decomposition_check(const TreeMarket& tree, const NodeValues& wealth);

/// Recombining-free random trees for property checks.
TreeMarket random_binomial_tree(std::mt19937_64& rng, int depth, double degenerate_probability = 0.0);
TreeMarket random_trinomial_tree(std::mt19937_64& rng, int depth, Index assets = 1);

/// Terminal payoff sum_i w_i max(P_i - strike, 0) spread over leaves as a
/// stream that is zero before maturity.
NodeValues terminal_call_stream(const TreeMarket& tree, double strike, Index asset = 0);

}  // namespace rkint
