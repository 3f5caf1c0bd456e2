#include "rkint/discrete_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "rkint/simplex.hpp"

namespace rkint {

namespace {

constexpr double kExact = 1e-10;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Price moves of the children of `node`, one column per child.
MatrixXd child_moves(const TreeMarket& tree, Index node) {
  const auto& kids = tree.children(node);
  MatrixXd moves(tree.assets(), static_cast<Index>(kids.size()));
  for (std::size_t c = 0; c < kids.size(); ++c) moves.col(c) = tree.node(kids[c]).prices - tree.node(node).prices;
  return moves;
}

/// Local system [pi_c ; pi_c dP_c] z = (1, 0).
MatrixXd local_system(const TreeMarket& tree, Index node) {
  const auto& kids = tree.children(node);
  const MatrixXd moves = child_moves(tree, node);
  MatrixXd m(1 + tree.assets(), static_cast<Index>(kids.size()));
  for (std::size_t c = 0; c < kids.size(); ++c) {
    const double pi = tree.node(kids[c]).prob;
    m(0, c) = pi;
    m.col(c).tail(tree.assets()) = pi * moves.col(c);
  }
  return m;
}

Index numerical_rank(const MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::FullPivLU<MatrixXd> lu(m);
  lu.setThreshold(1e-11);
  return lu.rank();
}

/// Nodes of the subtree rooted at r, parents first.
std::vector<Index> subtree(const TreeMarket& tree, Index r) {
  std::vector<Index> out{r};
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (Index c : tree.children(out[i])) out.push_back(c);
  }
  return out;
}

struct SubtreeSystem {
  std::vector<Index> nodes;
  std::map<Index, Index> column;
  MatrixXd A;
  VectorXd b;
};

/// Y_r = 1 plus node-wise martingale conditions of Y and Y P below r.
SubtreeSystem subtree_system(const TreeMarket& tree, Index r) {
  SubtreeSystem s;
  s.nodes = subtree(tree, r);
  for (std::size_t i = 0; i < s.nodes.size(); ++i) s.column[s.nodes[i]] = static_cast<Index>(i);
  Index nonleaf = 0;
  for (Index n : s.nodes) nonleaf += tree.is_leaf(n) ? 0 : 1;
  const Index d = tree.assets();
  const Index rows = 1 + nonleaf * (1 + d);
  s.A = MatrixXd::Zero(rows, static_cast<Index>(s.nodes.size()));
  s.b = VectorXd::Zero(rows);
  s.A(0, 0) = 1.0;
  s.b(0) = 1.0;
  Index row = 1;
  for (Index n : s.nodes) {
    if (tree.is_leaf(n)) continue;
    const Index yn = s.column[n];
    s.A(row, yn) = -1.0;
    for (Index i = 0; i < d; ++i) s.A(row + 1 + i, yn) = -tree.node(n).prices(i);
    for (Index c : tree.children(n)) {
      const Index yc = s.column[c];
      const double pi = tree.node(c).prob;
      s.A(row, yc) = pi;
      for (Index i = 0; i < d; ++i) s.A(row + 1 + i, yc) = pi * tree.node(c).prices(i);
    }
    row += 1 + d;
  }
  return s;
}

/// sup over the closure of the subtree deflator polytope of weights^T Y.
double subtree_sup(const SubtreeSystem& s, const VectorXd& weights) {
  const LpResult lp = solve_standard_lp(s.A, s.b, -weights);
  if (lp.status != LpStatus::optimal) throw Error(Errc::lp_fail, "deflator polytope LP: " + to_string(lp.status));
  return -lp.objective;
}

void validate_stream(const TreeMarket& tree, const NodeValues& k) {
  if (k.size() != tree.size()) throw Error(Errc::invalid_argument, "stream needs one value per node");
  for (Index n = 0; n < tree.size(); ++n) {
    if (!(k(n) >= 0.0)) throw Error(Errc::invalid_argument, "stream must be nonnegative");
    const Index p = tree.node(n).parent;
    if (p >= 0 && k(n) < k(p) - 1e-12) throw Error(Errc::invalid_argument, "stream must be nondecreasing");
  }
}

}  // namespace

TreeMarket::TreeMarket(Labels assets, std::vector<TreeNode> nodes) : assets_(std::move(assets)) {
  if (nodes.empty()) throw Error(Errc::invalid_argument, "tree has no nodes");
  const Index n = static_cast<Index>(nodes.size());
  Index root = -1;
  for (Index i = 0; i < n; ++i) {
    if (nodes[i].parent < 0) {
      if (root >= 0) throw Error(Errc::invalid_argument, "tree has two roots");
      root = i;
    } else if (nodes[i].parent >= n || nodes[i].parent == i) {
      throw Error(Errc::invalid_argument, "bad parent index at node " + nodes[i].id);
    }
  }
  if (root < 0) throw Error(Errc::invalid_argument, "tree has no root");
  std::vector<std::vector<Index>> kids(n);
  for (Index i = 0; i < n; ++i) {
    if (nodes[i].parent >= 0) kids[nodes[i].parent].push_back(i);
  }
  // Re-index parents first.
  std::vector<Index> order{root};
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (Index c : kids[order[i]]) order.push_back(c);
  }
  if (static_cast<Index>(order.size()) != n) throw Error(Errc::invalid_argument, "tree is not connected");
  std::vector<Index> new_index(n);
  for (Index i = 0; i < n; ++i) new_index[order[i]] = i;
  nodes_.resize(n);
  children_.assign(n, {});
  for (Index i = 0; i < n; ++i) {
    TreeNode node = nodes[order[i]];
    if (node.parent >= 0) node.parent = new_index[node.parent];
    nodes_[i] = std::move(node);
  }
  for (Index i = 1; i < n; ++i) children_[nodes_[i].parent].push_back(i);

  const Index d = static_cast<Index>(assets_.size());
  for (const auto& node : nodes_) {
    if (node.prices.size() != d) throw Error(Errc::invalid_argument, "node " + node.id + " price count mismatch");
    if (!node.prices.allFinite()) throw Error(Errc::invalid_argument, "node " + node.id + " has non-finite prices");
  }
  path_prob_.assign(n, 1.0);
  for (Index i = 0; i < n; ++i) {
    if (children_[i].empty()) continue;
    double total = 0.0;
    for (Index c : children_[i]) {
      if (!(nodes_[c].prob > 0.0)) throw Error(Errc::invalid_argument, "branch probability must be positive at " + nodes_[c].id);
      total += nodes_[c].prob;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error(Errc::invalid_argument, "branch probabilities at " + nodes_[i].id + " do not sum to 1");
    for (Index c : children_[i]) path_prob_[c] = path_prob_[i] * nodes_[c].prob;
  }
}

TreeMarket TreeMarket::parse(std::istream& in) {
  Labels assets;
  std::vector<TreeNode> nodes;
  std::vector<std::string> parent_ids;
  std::map<std::string, Index> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string first;
    ss >> first;
    if (first == "assets") {
      std::string a;
      while (ss >> a) assets.push_back(a);
      continue;
    }
    TreeNode node;
    node.id = first;
    std::string parent;
    if (!(ss >> parent >> node.prob)) throw Error(Errc::invalid_argument, "tree line needs: id parent prob prices...");
    std::vector<double> prices;
    double v;
    while (ss >> v) prices.push_back(v);
    if (!ss.eof()) throw Error(Errc::invalid_argument, "unparseable price on line: " + line);
    node.prices = Eigen::Map<VectorXd>(prices.data(), static_cast<Index>(prices.size()));
    if (ids.count(node.id)) throw Error(Errc::invalid_argument, "duplicate node id " + node.id);
    ids[node.id] = static_cast<Index>(nodes.size());
    parent_ids.push_back(parent);
    nodes.push_back(std::move(node));
  }
  if (nodes.empty()) throw Error(Errc::invalid_argument, "tree file has no nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (parent_ids[i] == "-") {
      nodes[i].parent = -1;
      nodes[i].prob = 1.0;
    } else {
      auto it = ids.find(parent_ids[i]);
      if (it == ids.end()) throw Error(Errc::invalid_argument, "unknown parent " + parent_ids[i]);
      nodes[i].parent = it->second;
    }
  }
  if (assets.empty()) {
    for (Index i = 0; i < nodes.front().prices.size(); ++i) assets.push_back("S" + std::to_string(i + 1));
  }
  return TreeMarket(std::move(assets), std::move(nodes));
}

std::string TreeMarket::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "# id parent prob prices...\nassets";
  for (const auto& a : assets_) out << ' ' << a;
  out << '\n';
  for (const auto& node : nodes_) {
    out << node.id << ' ' << (node.parent < 0 ? std::string("-") : nodes_[node.parent].id) << ' ' << node.prob;
    for (Index i = 0; i < node.prices.size(); ++i) out << ' ' << node.prices(i);
    out << '\n';
  }
  return out.str();
}

std::vector<Index> TreeMarket::leaves() const {
  std::vector<Index> out;
  for (Index n = 0; n < size(); ++n) {
    if (is_leaf(n)) out.push_back(n);
  }
  return out;
}

std::optional<Index> TreeMarket::find(const std::string& id) const {
  for (Index n = 0; n < size(); ++n) {
    if (nodes_[n].id == id) return n;
  }
  return std::nullopt;
}

NodeValues parse_node_values(const TreeMarket& tree, std::istream& in) {
  NodeValues out = NodeValues::Zero(tree.size());
  std::vector<bool> seen(tree.size(), false);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id;
    double v;
    if (!(ss >> id >> v)) throw Error(Errc::invalid_argument, "node value line needs: id value");
    const auto n = tree.find(id);
    if (!n) throw Error(Errc::invalid_argument, "unknown node " + id);
    out(*n) = v;
    seen[*n] = true;
  }
  return out;
}

std::vector<VectorXd> local_vertices(const TreeMarket& tree, Index node) {
  const MatrixXd m = local_system(tree, node);
  const Index kids = m.cols();
  VectorXd rhs = VectorXd::Zero(m.rows());
  rhs(0) = 1.0;
  const Index r = numerical_rank(m);
  std::vector<VectorXd> out;
  std::vector<Index> pick(kids);
  std::iota(pick.begin(), pick.end(), 0);
  // Enumerate column subsets of size r via a selection mask.
  std::vector<bool> mask(kids, false);
  std::fill(mask.begin(), mask.begin() + r, true);
  do {
    std::vector<Index> cols;
    for (Index c = 0; c < kids; ++c) {
      if (mask[c]) cols.push_back(c);
    }
    const MatrixXd sub = m(Eigen::all, cols);
    if (numerical_rank(sub) != r) continue;
    const VectorXd zs = sub.colPivHouseholderQr().solve(rhs);
    if ((sub * zs - rhs).norm() > kExact) continue;
    if ((zs.array() < -kExact).any()) continue;
    VectorXd z = VectorXd::Zero(kids);
    for (std::size_t a = 0; a < cols.size(); ++a) z(cols[a]) = std::max(0.0, zs(a));
    bool duplicate = false;
    for (const auto& v : out) duplicate = duplicate || (v - z).norm() <= 1e-9 * (1.0 + z.norm());
    if (!duplicate) out.push_back(std::move(z));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return out;
}

DeflatorPolytope deflator_polytope(const TreeMarket& tree, Index vertex_cap) {
  DeflatorPolytope poly;
  const SubtreeSystem sys = subtree_system(tree, tree.root());
  poly.equalities = sys.A;
  poly.rhs = sys.b;
  poly.dimension = tree.size() - numerical_rank(sys.A);

  // Local polytopes are bounded, so a strictly positive point exists iff
  // every child is charged by some local vertex.
  std::vector<std::vector<VectorXd>> local(tree.size());
  double count = 1.0;
  poly.strictly_positive = true;
  for (Index n = 0; n < tree.size(); ++n) {
    if (tree.is_leaf(n)) continue;
    local[n] = local_vertices(tree, n);
    if (local[n].empty())
      throw Error(Errc::no_deflator, "no deflator at node " + tree.node(n).id + " (market not viable)");
    VectorXd charged = VectorXd::Zero(static_cast<Index>(tree.children(n).size()));
    for (const auto& v : local[n]) charged += v;
    if ((charged.array() <= kExact).any())
      throw Error(Errc::no_deflator, "every deflator vanishes below node " + tree.node(n).id);
    count *= static_cast<double>(local[n].size());
  }

  if (count <= static_cast<double>(vertex_cap)) {
    poly.vertices_enumerated = true;
    // Depth-first over choices of local vertex per reachable nonleaf node.
    std::function<void(std::size_t, VectorXd)> expand;
    std::vector<Index> order;
    for (Index n = 0; n < tree.size(); ++n) {
      if (!tree.is_leaf(n)) order.push_back(n);
    }
    expand = [&](std::size_t i, VectorXd y) {
      if (i == order.size()) {
        for (const auto& v : poly.vertices) {
          if ((v - y).norm() <= 1e-12 * (1.0 + y.norm())) return;
        }
        poly.vertices.push_back(std::move(y));
        return;
      }
      const Index n = order[i];
      const auto& kids = tree.children(n);
      if (y(n) == 0.0) {
        expand(i + 1, std::move(y));
        return;
      }
      for (const auto& z : local[n]) {
        VectorXd next = y;
        for (std::size_t c = 0; c < kids.size(); ++c) next(kids[c]) = y(n) * z(c);
        expand(i + 1, std::move(next));
      }
    };
    VectorXd start = VectorXd::Zero(tree.size());
    start(tree.root()) = 1.0;
    expand(0, std::move(start));
  }
  return poly;
}

Replication replicate_backward(const TreeMarket& tree, const NodeValues& claim) {
  if (claim.size() != tree.size()) throw Error(Errc::invalid_argument, "claim needs one value per node");
  Replication out;
  out.values = VectorXd::Zero(tree.size());
  out.hedge.assign(tree.size(), VectorXd());
  for (Index n = tree.size() - 1; n >= 0; --n) {
    if (tree.is_leaf(n)) {
      out.values(n) = claim(n);
      continue;
    }
    const auto& kids = tree.children(n);
    const MatrixXd moves = child_moves(tree, n);
    MatrixXd design(static_cast<Index>(kids.size()), 1 + tree.assets());
    VectorXd target(static_cast<Index>(kids.size()));
    for (std::size_t c = 0; c < kids.size(); ++c) {
      design(c, 0) = 1.0;
      design.row(c).tail(tree.assets()) = moves.col(c).transpose();
      target(c) = out.values(kids[c]);
    }
    const VectorXd sol = design.completeOrthogonalDecomposition().solve(target);
    const double miss = (design * sol - target).norm();
    if (miss > kExact * (1.0 + target.norm()))
      throw Error(Errc::incomplete, "claim not attainable at node " + tree.node(n).id);
    out.values(n) = sol(0);
    out.hedge[n] = sol.tail(tree.assets());
  }
  out.cost = out.values(tree.root());
  return out;
}

DualityResult superhedge_duality(const TreeMarket& tree, const NodeValues& stream, Index variable_cap) {
  validate_stream(tree, stream);
  const Index d = tree.assets();
  std::vector<Index> nonleaf;
  std::vector<Index> hedge_slot(tree.size(), -1);
  for (Index n = 0; n < tree.size(); ++n) {
    if (!tree.is_leaf(n)) {
      hedge_slot[n] = static_cast<Index>(nonleaf.size());
      nonleaf.push_back(n);
    }
  }
  const Index H = static_cast<Index>(nonleaf.size()) * d;
  const Index vars = 1 + 2 * H + tree.size();
  if (vars > variable_cap) throw Error(Errc::invalid_argument, "tree exceeds the LP variable cap");

  // Primal: x + gains along the path to n - s_n = K_n.
  MatrixXd A = MatrixXd::Zero(tree.size(), vars);
  VectorXd c = VectorXd::Zero(vars);
  c(0) = 1.0;
  for (Index n = 0; n < tree.size(); ++n) {
    A(n, 0) = 1.0;
    A(n, 1 + 2 * H + n) = -1.0;
    for (Index child = n; tree.node(child).parent >= 0; child = tree.node(child).parent) {
      const Index a = tree.node(child).parent;
      const VectorXd move = tree.node(child).prices - tree.node(a).prices;
      const Index base = 1 + hedge_slot[a] * d;
      A.row(n).segment(base, d) += move.transpose();
      A.row(n).segment(base + H, d) -= move.transpose();
    }
  }
  const LpResult primal = solve_standard_lp(A, stream, c);
  if (primal.status != LpStatus::optimal) throw Error(Errc::lp_fail, "primal hedging LP: " + to_string(primal.status));

  // Dual: maximize E[sum Y dK] over the polytope closure.
  const SubtreeSystem sys = subtree_system(tree, tree.root());
  VectorXd weights(tree.size());
  for (Index i = 0; i < tree.size(); ++i) {
    const Index n = sys.nodes[i];
    const Index p = tree.node(n).parent;
    const double dk = stream(n) - (p >= 0 ? stream(p) : 0.0);
    weights(i) = tree.path_probability(n) * dk;
  }
  const LpResult dual = solve_standard_lp(sys.A, sys.b, -weights);
  if (dual.status != LpStatus::optimal) throw Error(Errc::lp_fail, "dual deflator LP: " + to_string(dual.status));

  DualityResult out;
  out.primal = primal.objective;
  out.dual = -dual.objective;
  out.gap = out.primal - out.dual;
  out.primal_hedge = primal.x.segment(1, H) - primal.x.segment(1 + H, H);
  out.dual_deflator = VectorXd::Zero(tree.size());
  for (Index i = 0; i < tree.size(); ++i) out.dual_deflator(sys.nodes[i]) = dual.x(i);
  return out;
}

DynamicHedgeCheck dynamic_hedge_check(const TreeMarket& tree, const NodeValues& stream) {
  validate_stream(tree, stream);
  DynamicHedgeCheck out;
  out.backward = VectorXd::Zero(tree.size());
  out.dual = VectorXd::Zero(tree.size());
  for (Index n = tree.size() - 1; n >= 0; --n) {
    if (tree.is_leaf(n)) {
      out.backward(n) = stream(n);
      continue;
    }
    const auto& kids = tree.children(n);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& z : local_vertices(tree, n)) {
      double e = 0.0;
      for (std::size_t c = 0; c < kids.size(); ++c) e += tree.node(kids[c]).prob * z(c) * out.backward(kids[c]);
      best = std::max(best, e);
    }
    if (!std::isfinite(best)) throw Error(Errc::no_deflator, "node " + tree.node(n).id);
    out.backward(n) = std::max(stream(n), best);
  }
  for (Index n = 0; n < tree.size(); ++n) {
    const SubtreeSystem sys = subtree_system(tree, n);
    VectorXd weights = VectorXd::Zero(static_cast<Index>(sys.nodes.size()));
    for (std::size_t i = 1; i < sys.nodes.size(); ++i) {
      const Index t = sys.nodes[i];
      weights(i) = tree.path_probability(t) / tree.path_probability(n) * (stream(t) - stream(tree.node(t).parent));
    }
    out.dual(n) = stream(n) + (sys.nodes.size() > 1 ? subtree_sup(sys, weights) : 0.0);
    out.max_gap = std::max(out.max_gap, std::abs(out.dual(n) - out.backward(n)));
  }
  return out;
}

OptionalDecomposition optional_decomposition_check(const TreeMarket& tree, const NodeValues& wealth) {
  if (wealth.size() != tree.size()) throw Error(Errc::invalid_argument, "wealth needs one value per node");
  const Index d = tree.assets();
  OptionalDecomposition out;
  out.hedge.assign(tree.size(), VectorXd());
  out.gains = VectorXd::Zero(tree.size());
  out.consumption = VectorXd::Zero(tree.size());
  VectorXd dk = VectorXd::Zero(tree.size());

  for (Index n = 0; n < tree.size(); ++n) {
    if (tree.is_leaf(n)) continue;
    const auto& kids = tree.children(n);
    const double scale = 1.0 + std::abs(wealth(n));
    for (const auto& z : local_vertices(tree, n)) {
      double e = 0.0;
      for (std::size_t c = 0; c < kids.size(); ++c) e += tree.node(kids[c]).prob * z(c) * wealth(kids[c]);
      if (e > wealth(n) + kExact * scale) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "node " << tree.node(n).id << ": E_z[X] = " << e << " > X = " << wealth(n) << " at vertex z = ("
            << z.transpose() << ")";
        throw Error(Errc::not_supermartingale, msg.str());
      }
    }

    const MatrixXd moves = child_moves(tree, n);
    const Index m = static_cast<Index>(kids.size());
    VectorXd dx(m);
    for (Index c = 0; c < m; ++c) dx(c) = wealth(kids[c]) - wealth(n);
    // Least-squares projection of dX on span{1, dP}.
    MatrixXd design(m, 1 + d);
    design.col(0).setOnes();
    design.rightCols(d) = moves.transpose();
    VectorXd h = design.completeOrthogonalDecomposition().solve(dx).tail(d);
    VectorXd consume = moves.transpose() * h - dx;
    if (consume.minCoeff() < -1e-12 * scale) {
      // Minimize expected consumption subject to nonnegative increments.
      MatrixXd A = MatrixXd::Zero(m, 2 * d + m);
      A.leftCols(d) = moves.transpose();
      A.middleCols(d, d) = -moves.transpose();
      A.rightCols(m) = -MatrixXd::Identity(m, m);
      VectorXd cost = VectorXd::Zero(2 * d + m);
      VectorXd drift = VectorXd::Zero(d);
      for (Index c = 0; c < m; ++c) drift += tree.node(kids[c]).prob * moves.col(c);
      cost.head(d) = drift;
      cost.segment(d, d) = -drift;
      const LpResult lp = solve_standard_lp(A, dx, cost);
      if (lp.status != LpStatus::optimal) throw Error(Errc::lp_fail, "hedge recovery at node " + tree.node(n).id);
      h = lp.x.head(d) - lp.x.segment(d, d);
      consume = moves.transpose() * h - dx;
    }
    out.hedge[n] = h;
    for (Index c = 0; c < m; ++c) {
      out.gains(kids[c]) = out.gains(n) + h.dot(moves.col(c));
      dk(kids[c]) = consume(c);
    }
  }
  for (Index n = 1; n < tree.size(); ++n) {
    out.consumption(n) = out.consumption(tree.node(n).parent) + dk(n);
    out.residual = std::max(out.residual, -dk(n));
  }
  return out;
}

TreeMarket random_binomial_tree(std::mt19937_64& rng, int depth, double degenerate_probability) {
  std::uniform_real_distribution<double> up(1.05, 1.6), down(0.5, 0.95), prob(0.2, 0.8), unit(0.0, 1.0);
  std::vector<TreeNode> nodes;
  nodes.push_back({"n0", -1, 1.0, VectorXd::Constant(1, 1.0)});
  std::vector<Index> frontier{0};
  for (int level = 0; level < depth; ++level) {
    std::vector<Index> next;
    for (Index parent : frontier) {
      const double p0 = nodes[parent].prices(0);
      const bool flat = unit(rng) < degenerate_probability;
      const double u = flat ? 1.0 : up(rng);
      const double dn = flat ? 1.0 : down(rng);
      const double p = prob(rng);
      const Index base = static_cast<Index>(nodes.size());
      nodes.push_back({"n" + std::to_string(base), parent, p, VectorXd::Constant(1, p0 * u)});
      nodes.push_back({"n" + std::to_string(base + 1), parent, 1.0 - p, VectorXd::Constant(1, p0 * dn)});
      next.push_back(base);
      next.push_back(base + 1);
    }
    frontier = std::move(next);
  }
  return TreeMarket({"S1"}, std::move(nodes));
}

TreeMarket random_trinomial_tree(std::mt19937_64& rng, int depth, Index assets) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Labels names;
  for (Index i = 0; i < assets; ++i) names.push_back("S" + std::to_string(i + 1));
  std::vector<TreeNode> nodes;
  nodes.push_back({"n0", -1, 1.0, VectorXd::Ones(assets)});
  std::vector<Index> frontier{0};
  for (int level = 0; level < depth; ++level) {
    std::vector<Index> next;
    for (Index parent : frontier) {
      const VectorXd p0 = nodes[parent].prices;
      double w[3];
      double total = 0.0;
      for (double& x : w) total += (x = 0.2 + unit(rng));
      MatrixXd factor(assets, 3);
      for (Index i = 0; i < assets; ++i) {
        if (i == 0) {
          factor(i, 0) = 0.5 + 0.4 * unit(rng);
          factor(i, 1) = 0.9 + 0.2 * unit(rng);
          factor(i, 2) = 1.1 + 0.5 * unit(rng);
        } else {
          // Directions roughly 120 degrees apart keep the parent inside the
          // children's convex hull.
          for (int c = 0; c < 3; ++c) {
            const double angle = 2.0 * M_PI * c / 3.0 + 0.4 * (unit(rng) - 0.5);
            const double radius = 0.1 + 0.3 * unit(rng);
            factor(0, c) = 1.0 + radius * std::cos(angle);
            factor(i, c) = 1.0 + radius * std::sin(angle) * (i == 1 ? 1.0 : 0.5 + unit(rng));
          }
        }
      }
      for (int c = 0; c < 3; ++c) {
        const Index id = static_cast<Index>(nodes.size());
        nodes.push_back({"n" + std::to_string(id), parent, w[c] / total, p0.cwiseProduct(factor.col(c))});
        next.push_back(id);
      }
    }
    frontier = std::move(next);
  }
  return TreeMarket(std::move(names), std::move(nodes));
}

NodeValues terminal_call_stream(const TreeMarket& tree, double strike, Index asset) {
  NodeValues k = NodeValues::Zero(tree.size());
  for (Index n : tree.leaves()) k(n) = std::max(tree.node(n).prices(asset) - strike, 0.0);
  return k;
}

}  // namespace rkint
