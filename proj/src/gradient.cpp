#include "topoflow/gradient.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

namespace topoflow {

double SparseGradient::squared_norm() const {
  return std::inner_product(vectors.begin(), vectors.end(), vectors.begin(), 0.0);
}

PointCloud SparseGradient::densify() const {
  PointCloud out(num_points, dim);
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto v = vector(k);
    std::copy(v.begin(), v.end(), out[support[k]].begin());
  }
  return out;
}

namespace {

constexpr double kMinEdgeLength = 1e-12;

void push_edge(std::map<std::size_t, std::vector<double>>& acc, const PointCloud& x, const Edge& e,
               double weight) {
  if (weight == 0.0) return;
  const auto a = x[e.first], b = x[e.second];
  const double len = distance(a, b);
  if (len < kMinEdgeLength)
    throw DegenerateEdgeError("edge (" + std::to_string(e.first) + ", " + std::to_string(e.second) +
                              ") has length below 1e-12; its gradient direction is undefined");
  auto& ga = acc.try_emplace(e.first, x.dim(), 0.0).first->second;
  auto& gb = acc.try_emplace(e.second, x.dim(), 0.0).first->second;
  for (std::size_t c = 0; c < x.dim(); ++c) {
    const double step = weight * (a[c] - b[c]) / len;
    ga[c] += step;
    gb[c] -= step;
  }
}

}  // namespace

SparseGradient pullback(const Diagram& dgm, const Cotangent& cotangent, const PointCloud& x) {
  std::map<std::size_t, std::vector<double>> acc;
  for (const auto& entry : cotangent.entries) {
    if (entry.point >= dgm.size())
      throw ShapeError("cotangent refers to diagram point " + std::to_string(entry.point) +
                       " of " + std::to_string(dgm.size()));
    const auto& p = dgm[entry.point];
    if (p.birth_edge) push_edge(acc, x, *p.birth_edge, entry.d_birth);
    if (p.death_edge) push_edge(acc, x, *p.death_edge, entry.d_death);
  }
  SparseGradient g;
  g.num_points = x.size();
  g.dim = x.dim();
  for (const auto& [index, vec] : acc) {
    if (std::all_of(vec.begin(), vec.end(), [](double c) { return c == 0.0; })) continue;
    g.support.push_back(index);
    g.vectors.insert(g.vectors.end(), vec.begin(), vec.end());
  }
  return g;
}

Constraints consolidate(const SparseGradient& g, const PointCloud& x, double tol) {
  if (tol < 0.0) throw Error("consolidation tolerance must be non-negative");
  const std::size_t m = g.support.size();
  // Single-linkage grouping of support points closer than tol.
  std::vector<std::size_t> group(m);
  std::iota(group.begin(), group.end(), std::size_t{0});
  auto root = [&](std::size_t i) {
    while (group[i] != i) i = group[i] = group[group[i]];
    return i;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (distance(x[g.support[i]], x[g.support[j]]) <= tol) {
        const std::size_t a = root(i), b = root(j);
        if (a != b) group[std::max(a, b)] = std::min(a, b);
      }

  Constraints out{PointCloud(0, g.dim), PointCloud(0, g.dim)};
  for (std::size_t i = 0; i < m; ++i) {
    if (root(i) != i) continue;
    std::vector<double> sum(g.dim, 0.0);
    for (std::size_t j = i; j < m; ++j)
      if (root(j) == i)
        for (std::size_t c = 0; c < g.dim; ++c) sum[c] += g.vector(j)[c];
    if (std::all_of(sum.begin(), sum.end(), [](double c) { return c == 0.0; })) continue;
    out.centers.push_back(x[g.support[i]]);
    out.vectors.push_back(sum);
  }
  return out;
}

}  // namespace topoflow
