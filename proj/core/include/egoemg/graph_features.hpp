#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace egoemg {

inline constexpr int kNumMarkers = 21;  // wrist + 4 per digit

/// Undirected simple graph over n_nodes vertices.
struct SkeletonGraph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;

  /// Throws kInvalidInput for bad indices, self-loops or duplicate edges and
  /// kDisconnectedGraph when the graph is not connected.
  void validate() const;
  std::vector<std::vector<int>> adjacency() const;

  /// Marker connectivity: node 0 is the wrist, digit d (thumb = 0 .. pinky =
  /// 4) owns nodes 1 + 4d .. 4 + 4d ordered proximal to distal, and each
  /// digit is a chain hanging off the wrist.
  static SkeletonGraph default_hand();
};

enum class LaplacianKind {
  kUnnormalized,          // D - A
  kSymmetricNormalized,   // I - D^-1/2 A D^-1/2
};

Eigen::MatrixXd laplacian_matrix(const SkeletonGraph& graph, LaplacianKind kind = LaplacianKind::kUnnormalized);

struct GraphPE {
  Eigen::MatrixXd eigenvectors;  // [n_nodes x k], orthonormal columns
  Eigen::VectorXd eigenvalues;   // ascending
};

/// The k smallest eigenpairs of the graph Laplacian. Each eigenvector's
/// first entry with magnitude above 1e-10 is positive. Inside a repeated
/// eigenvalue the basis is fixed by Gram-Schmidt over the projections of
/// e_0, e_1, ... so it does not depend on the solver; it is still only one
/// of many valid bases.
GraphPE laplacian_eigenvectors(const SkeletonGraph& graph, int k = 8,
                               LaplacianKind kind = LaplacianKind::kUnnormalized);

/// Hop counts between every pair of nodes (breadth-first search).
Eigen::MatrixXi shortest_path_distances(const SkeletonGraph& graph);

}  // namespace egoemg
