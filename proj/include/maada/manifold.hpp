#ifndef MAADA_MANIFOLD_HPP
#define MAADA_MANIFOLD_HPP

#include <span>
#include <vector>

#include "maada/matrix.hpp"

namespace maada {

struct GraphEdge {
  int to = -1;
  double weight = 0.0;
};

struct BridgeEdge {
  int a = -1;
  int b = -1;
  double weight = 0.0;
};

// Symmetrized k-nearest-neighbour graph with Euclidean edge weights.
// Disconnected graphs are repaired by greedily adding the shortest
// inter-component pair until one component remains; those repair edges are
// recorded in `bridges` (and also present in the adjacency lists).
struct NeighborGraph {
  std::size_t n = 0;
  int k = 0;
  std::vector<std::vector<GraphEdge>> adjacency;  // sorted by target index
  std::vector<BridgeEdge> bridges;
};

NeighborGraph build_graph(const Matrix& points, int k);

// Local tangent-space estimate at one anchor: orthonormal basis spanned by
// the top eigenvectors of the neighbourhood covariance.
struct TangentChart {
  int anchor = -1;
  Matrix basis;                  // d x m, orthonormal columns
  std::vector<int> neighbors;    // graph neighbours used (anchor excluded)
  std::vector<double> spectrum;  // covariance eigenvalues, descending
  bool rank_deficient = false;   // m exceeded the numerical rank
};

TangentChart tangent_basis(const Matrix& points, const NeighborGraph& graph, int anchor, int m);

// Charts for every point of a cloud over its own k-NN graph.
std::vector<TangentChart> all_charts(const Matrix& points, int k, int m);

// U U^T v: orthogonal projection onto the chart's span.
std::vector<double> project_tangent(const TangentChart& chart, std::span<const double> v);

// Single-source shortest-path distances (Dijkstra).
std::vector<double> geodesic_from(const NeighborGraph& graph, int source);

// Distance from each node to its nearest seed node.
std::vector<double> geodesic_multi_source(const NeighborGraph& graph,
                                          const std::vector<int>& seeds);

struct GeoDBreakdown {
  double supinf = 0.0;   // max over source of geodesic distance to the target cloud
  double curvgap = 0.0;  // mean normalized projector distance of matched charts, in [0, 1]
  double scale = 0.0;    // median edge weight of the joint graph
  double total = 0.0;    // supinf + curvgap * scale
};

// Directed geodesic discrepancy from the source cloud to the target cloud.
// Geodesics run on the joint graph over both clouds; the charts entering
// the curvature gap are computed per cloud.
GeoDBreakdown geo_discrepancy(const Matrix& source, const Matrix& target, int k, int m);

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations;
// pairs are returned in descending eigenvalue order.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;  // column i pairs with values[i]
};

SymmetricEigen symmetric_eigen(const Matrix& a);

}  // namespace maada

#endif
