#include "maada/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <unordered_set>

namespace maada {

namespace {

constexpr double kZeroEdgeWeight = 1e-12;

// Union-find over node indices.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), count_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    --count_;
    return true;
  }
  std::size_t count() const { return count_; }

 private:
  std::vector<int> parent_;
  std::size_t count_;
};

double edge_weight(const Matrix& points, int a, int b) {
  const double d = std::sqrt(squared_distance(points.row(a), points.row(b)));
  return d == 0.0 ? kZeroEdgeWeight : d;
}

}  // namespace

NeighborGraph build_graph(const Matrix& points, int k) {
  const std::size_t n = points.rows();
  if (k < 1) throw ConfigError("build_graph: k must be at least 1");
  if (n <= static_cast<std::size_t>(k)) {
    throw ConfigError("build_graph: need at least k+1 = " + std::to_string(k + 1) +
                      " points, got " + std::to_string(n));
  }

  NeighborGraph graph;
  graph.n = n;
  graph.k = k;
  graph.adjacency.resize(n);

  // Directed k-NN edges, deduplicated into an undirected edge set.
  std::vector<std::pair<int, int>> edges;
  std::vector<std::pair<double, int>> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      order.emplace_back(squared_distance(points.row(i), points.row(j)), static_cast<int>(j));
    }
    std::sort(order.begin(), order.end());
    for (int t = 0; t < k; ++t) {
      const int j = order[static_cast<std::size_t>(t)].second;
      edges.emplace_back(std::min<int>(static_cast<int>(i), j),
                         std::max<int>(static_cast<int>(i), j));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  DisjointSets components(n);
  for (const auto& [a, b] : edges) {
    const double w = edge_weight(points, a, b);
    graph.adjacency[static_cast<std::size_t>(a)].push_back({b, w});
    graph.adjacency[static_cast<std::size_t>(b)].push_back({a, w});
    components.unite(a, b);
  }

  // Greedy repair: connect the closest pair of points lying in different
  // components until the graph is a single component.
  while (components.count() > 1) {
    double best = std::numeric_limits<double>::infinity();
    int best_a = -1, best_b = -1;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (components.find(static_cast<int>(i)) == components.find(static_cast<int>(j)))
          continue;
        const double d = squared_distance(points.row(i), points.row(j));
        if (d < best) {
          best = d;
          best_a = static_cast<int>(i);
          best_b = static_cast<int>(j);
        }
      }
    }
    const double w = edge_weight(points, best_a, best_b);
    graph.adjacency[static_cast<std::size_t>(best_a)].push_back({best_b, w});
    graph.adjacency[static_cast<std::size_t>(best_b)].push_back({best_a, w});
    graph.bridges.push_back({best_a, best_b, w});
    components.unite(best_a, best_b);
  }

  for (auto& list : graph.adjacency) {
    std::sort(list.begin(), list.end(),
              [](const GraphEdge& x, const GraphEdge& y) { return x.to < y.to; });
  }
  return graph;
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw DimensionError("symmetric_eigen: matrix is " + a.shape_str());

  Matrix work = a;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double norm = 0.0;
  for (double x : work.data()) norm += x * x;
  const double tol = std::sqrt(norm) * 1e-15 + 1e-300;

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += work(p, q) * work(p, q);
    if (std::sqrt(off) <= tol) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = work(p, q);
        if (std::abs(apq) <= tol / static_cast<double>(n * n)) continue;
        const double theta = (work(q, q) - work(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = work(i, p), aiq = work(i, q);
          work(i, p) = c * aip - s * aiq;
          work(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = work(p, i), aqi = work(q, i);
          work(p, i) = c * api - s * aqi;
          work(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t x, std::size_t y) { return work(x, x) > work(y, y); });

  SymmetricEigen result;
  result.values.resize(n);
  result.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    result.values[c] = work(idx[c], idx[c]);
    for (std::size_t r = 0; r < n; ++r) result.vectors(r, c) = v(r, idx[c]);
  }
  return result;
}

TangentChart tangent_basis(const Matrix& points, const NeighborGraph& graph, int anchor, int m) {
  const std::size_t d = points.cols();
  const std::size_t limit = std::min(d, static_cast<std::size_t>(graph.k));
  if (m < 1 || static_cast<std::size_t>(m) > limit) {
    throw ConfigError("tangent_basis: m must lie in [1, " + std::to_string(limit) + "], got " +
                      std::to_string(m));
  }
  if (anchor < 0 || static_cast<std::size_t>(anchor) >= graph.n) {
    throw ConfigError("tangent_basis: anchor index out of range");
  }

  TangentChart chart;
  chart.anchor = anchor;
  for (const GraphEdge& e : graph.adjacency[static_cast<std::size_t>(anchor)]) {
    chart.neighbors.push_back(e.to);
  }

  std::vector<int> members = chart.neighbors;
  members.push_back(anchor);
  std::sort(members.begin(), members.end());

  std::vector<double> mean(d, 0.0);
  for (int idx : members) {
    auto row = points.row(static_cast<std::size_t>(idx));
    for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(members.size());

  Matrix cov(d, d);
  for (int idx : members) {
    auto row = points.row(static_cast<std::size_t>(idx));
    for (std::size_t r = 0; r < d; ++r) {
      const double dr = row[r] - mean[r];
      for (std::size_t c = 0; c < d; ++c) cov(r, c) += dr * (row[c] - mean[c]);
    }
  }
  for (double& v : cov.data()) v /= static_cast<double>(members.size());

  SymmetricEigen eig = symmetric_eigen(cov);

  chart.spectrum.assign(eig.values.begin(),
                        eig.values.begin() + static_cast<std::ptrdiff_t>(limit));

  const double top = eig.values.front();
  std::size_t numerical_rank = 0;
  for (double v : eig.values) {
    if (v > std::max(top, 0.0) * 1e-10 + 1e-300) ++numerical_rank;
  }
  // When m exceeds the numerical rank the basis is padded from the
  // remaining eigenvectors, flagged for the caller.
  chart.rank_deficient = static_cast<std::size_t>(m) > numerical_rank;

  chart.basis = Matrix(d, static_cast<std::size_t>(m));
  for (std::size_t c = 0; c < static_cast<std::size_t>(m); ++c) {
    std::size_t arg = 0;
    for (std::size_t r = 1; r < d; ++r) {
      if (std::abs(eig.vectors(r, c)) > std::abs(eig.vectors(arg, c))) arg = r;
    }
    const double sign = eig.vectors(arg, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d; ++r) chart.basis(r, c) = sign * eig.vectors(r, c);
  }
  return chart;
}

std::vector<TangentChart> all_charts(const Matrix& points, int k, int m) {
  const NeighborGraph graph = build_graph(points, k);
  std::vector<TangentChart> charts;
  charts.reserve(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    charts.push_back(tangent_basis(points, graph, static_cast<int>(i), m));
  }
  return charts;
}

std::vector<double> project_tangent(const TangentChart& chart, std::span<const double> v) {
  const std::size_t d = chart.basis.rows();
  const std::size_t m = chart.basis.cols();
  if (v.size() != d) {
    throw DimensionError("project_tangent: vector length " + std::to_string(v.size()) +
                         ", chart dimension " + std::to_string(d));
  }
  std::vector<double> coords(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < d; ++r) acc += chart.basis(r, c) * v[r];
    coords[c] = acc;
  }
  std::vector<double> out(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) acc += chart.basis(r, c) * coords[c];
    out[r] = acc;
  }
  return out;
}

namespace {

std::vector<double> dijkstra(const NeighborGraph& graph, const std::vector<int>& seeds) {
  std::vector<double> dist(graph.n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  for (int s : seeds) {
    if (s < 0 || static_cast<std::size_t>(s) >= graph.n) {
      throw ConfigError("geodesic: node index out of range");
    }
    dist[static_cast<std::size_t>(s)] = 0.0;
    queue.emplace(0.0, s);
  }
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const GraphEdge& e : graph.adjacency[static_cast<std::size_t>(u)]) {
      const double nd = d + e.weight;
      if (nd < dist[static_cast<std::size_t>(e.to)]) {
        dist[static_cast<std::size_t>(e.to)] = nd;
        queue.emplace(nd, e.to);
      }
    }
  }
  return dist;
}

std::string row_bytes(const Matrix& points, std::size_t r) {
  auto row = points.row(r);
  return std::string(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(double));
}

Matrix projector(const TangentChart& chart) {
  const std::size_t d = chart.basis.rows();
  Matrix p(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < chart.basis.cols(); ++j)
        acc += chart.basis(r, j) * chart.basis(c, j);
      p(r, c) = acc;
    }
  return p;
}

}  // namespace

std::vector<double> geodesic_from(const NeighborGraph& graph, int source) {
  return dijkstra(graph, {source});
}

std::vector<double> geodesic_multi_source(const NeighborGraph& graph,
                                          const std::vector<int>& seeds) {
  if (seeds.empty()) throw ConfigError("geodesic_multi_source: no seed nodes");
  return dijkstra(graph, seeds);
}

GeoDBreakdown geo_discrepancy(const Matrix& source, const Matrix& target, int k, int m) {
  if (source.rows() == 0 || target.rows() == 0) {
    throw ConfigError("geo_discrepancy: both clouds must be nonempty");
  }
  if (source.cols() != target.cols()) {
    throw DimensionError("geo_discrepancy: dimension mismatch " + source.shape_str() + " vs " +
                         target.shape_str());
  }
  if (static_cast<std::size_t>(m) > source.cols()) {
    throw ConfigError("geo_discrepancy: m exceeds the ambient dimension");
  }

  const std::size_t ns = source.rows();
  const std::size_t nt = target.rows();

  const Matrix joint = vstack(source, target);
  const NeighborGraph joint_graph = build_graph(joint, k);

  std::vector<int> target_nodes(nt);
  std::iota(target_nodes.begin(), target_nodes.end(), static_cast<int>(ns));
  std::vector<double> dist = geodesic_multi_source(joint_graph, target_nodes);

  // A source sample that coincides bitwise with a target sample lies on the
  // target cloud; its distance is zero (the duplicate-edge floor would
  // otherwise report 1e-12).
  std::unordered_set<std::string> target_rows;
  for (std::size_t j = 0; j < nt; ++j) target_rows.insert(row_bytes(target, j));

  GeoDBreakdown result;
  for (std::size_t i = 0; i < ns; ++i) {
    const double di = target_rows.count(row_bytes(source, i)) ? 0.0 : dist[i];
    result.supinf = std::max(result.supinf, di);
  }

  // Curvature gap: charts per cloud, matched by nearest Euclidean target.
  std::vector<TangentChart> source_charts = all_charts(source, k, m);
  std::vector<TangentChart> target_charts = all_charts(target, k, m);

  double gap_sum = 0.0;
  const double normalizer = std::sqrt(2.0 * static_cast<double>(m));
  for (std::size_t i = 0; i < ns; ++i) {
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nt; ++j) {
      const double dij = squared_distance(source.row(i), target.row(j));
      if (dij < best) {
        best = dij;
        nearest = j;
      }
    }
    const Matrix ps = projector(source_charts[i]);
    const Matrix pt = projector(target_charts[nearest]);
    double fro = 0.0;
    for (std::size_t e = 0; e < ps.size(); ++e) {
      const double diff = ps.data()[e] - pt.data()[e];
      fro += diff * diff;
    }
    gap_sum += std::sqrt(fro) / normalizer;
  }
  result.curvgap = gap_sum / static_cast<double>(ns);

  // Median edge weight of the joint graph makes the dimensionless gap
  // commensurate with the geodesic term.
  std::vector<double> weights;
  for (std::size_t i = 0; i < joint_graph.n; ++i) {
    for (const GraphEdge& e : joint_graph.adjacency[i]) {
      if (e.to > static_cast<int>(i)) weights.push_back(e.weight);
    }
  }
  std::sort(weights.begin(), weights.end());
  const std::size_t mid = weights.size() / 2;
  result.scale = weights.size() % 2 == 1 ? weights[mid]
                                         : 0.5 * (weights[mid - 1] + weights[mid]);
  result.total = result.supinf + result.curvgap * result.scale;
  return result;
}

}  // namespace maada
