#include "egoemg/graph_features.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

constexpr double kSignEpsilon = 1e-10;

std::vector<int> bfs_hops(const std::vector<std::vector<int>>& adj, int source) {
  std::vector<int> hops(adj.size(), -1);
  std::queue<int> frontier;
  hops[static_cast<std::size_t>(source)] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (hops[static_cast<std::size_t>(v)] < 0) {
        hops[static_cast<std::size_t>(v)] = hops[static_cast<std::size_t>(u)] + 1;
        frontier.push(v);
      }
    }
  }
  return hops;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > kSignEpsilon) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

// Replaces the columns of `basis` (an orthonormal basis of one eigenspace)
// by Gram-Schmidt over the projections of the standard unit vectors.
void canonicalize_eigenspace(Eigen::Ref<Eigen::MatrixXd> basis) {
  const Eigen::Index n = basis.rows();
  const Eigen::Index dim = basis.cols();
  const Eigen::MatrixXd projector = basis * basis.transpose();
  Eigen::MatrixXd out(n, dim);
  Eigen::Index found = 0;
  for (Eigen::Index j = 0; j < n && found < dim; ++j) {
    Eigen::VectorXd w = projector.col(j);
    for (Eigen::Index i = 0; i < found; ++i) w -= out.col(i).dot(w) * out.col(i);
    for (Eigen::Index i = 0; i < found; ++i) w -= out.col(i).dot(w) * out.col(i);
    const double norm = w.norm();
    if (norm > 1e-6) out.col(found++) = w / norm;
  }
  if (found == dim) basis = out;
}

}  // namespace

void SkeletonGraph::validate() const {
  if (n_nodes <= 0) fail(ErrorKind::kInvalidInput, "graph needs at least one node");
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes) {
      fail(ErrorKind::kInvalidInput, "edge (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range");
    }
    if (a == b) fail(ErrorKind::kInvalidInput, "self-loop at node " + std::to_string(a));
    if (!seen.insert(std::minmax(a, b)).second) {
      fail(ErrorKind::kInvalidInput, "duplicate edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    }
  }
  const auto hops = bfs_hops(adjacency(), 0);
  if (std::find(hops.begin(), hops.end(), -1) != hops.end()) {
    fail(ErrorKind::kDisconnectedGraph, "graph is not connected");
  }
}

std::vector<std::vector<int>> SkeletonGraph::adjacency() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(std::max(n_nodes, 0)));
  for (auto [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

SkeletonGraph SkeletonGraph::default_hand() {
  SkeletonGraph g;
  g.n_nodes = kNumMarkers;
  for (int digit = 0; digit < 5; ++digit) {
    const int base = 1 + 4 * digit;
    g.edges.emplace_back(0, base);
    for (int j = 0; j < 3; ++j) g.edges.emplace_back(base + j, base + j + 1);
  }
  return g;
}

Eigen::MatrixXd laplacian_matrix(const SkeletonGraph& graph, LaplacianKind kind) {
  graph.validate();
  const Eigen::Index n = graph.n_nodes;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (auto [a, b] : graph.edges) {
    lap(a, b) -= 1.0;
    lap(b, a) -= 1.0;
    lap(a, a) += 1.0;
    lap(b, b) += 1.0;
  }
  if (kind == LaplacianKind::kSymmetricNormalized && n > 1) {
    const Eigen::VectorXd inv_sqrt_deg = lap.diagonal().cwiseSqrt().cwiseInverse();
    lap = inv_sqrt_deg.asDiagonal() * lap * inv_sqrt_deg.asDiagonal();
  }
  return lap;
}

GraphPE laplacian_eigenvectors(const SkeletonGraph& graph, int k, LaplacianKind kind) {
  const Eigen::MatrixXd lap = laplacian_matrix(graph, kind);
  if (k < 1 || k > graph.n_nodes) {
    fail(ErrorKind::kInvalidInput, "k must lie in [1, " + std::to_string(graph.n_nodes) + "]");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) fail(ErrorKind::kDomain, "Laplacian eigensolver did not converge");
  Eigen::VectorXd values = solver.eigenvalues();
  Eigen::MatrixXd vectors = solver.eigenvectors();

  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  const double tie = 1e-8 * scale;
  if (values.size() > 1 && values[1] <= tie) fail(ErrorKind::kDisconnectedGraph, "second Laplacian eigenvalue is zero");

  for (Eigen::Index begin = 0; begin < values.size();) {
    Eigen::Index end = begin + 1;
    while (end < values.size() && values[end] - values[begin] <= tie) ++end;
    if (end - begin > 1) canonicalize_eigenspace(vectors.middleCols(begin, end - begin));
    begin = end;
  }
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) fix_sign(vectors.col(c));

  GraphPE pe;
  pe.eigenvalues = values.head(k);
  pe.eigenvectors = vectors.leftCols(k);
  return pe;
}

Eigen::MatrixXi shortest_path_distances(const SkeletonGraph& graph) {
  graph.validate();
  const auto adj = graph.adjacency();
  Eigen::MatrixXi dist(graph.n_nodes, graph.n_nodes);
  for (int s = 0; s < graph.n_nodes; ++s) {
    const auto hops = bfs_hops(adj, s);
    for (int t = 0; t < graph.n_nodes; ++t) dist(s, t) = hops[static_cast<std::size_t>(t)];
  }
  return dist;
}

}  // namespace egoemg
