#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "topoflow/losses.hpp"
#include "topoflow/point_cloud.hpp"
#include "topoflow/rips.hpp"

namespace topoflow {

class DegenerateEdgeError : public Error {
 public:
  using Error::Error;
};

/// Gradient of a topological loss with respect to point coordinates, stored on
/// its support only. Every stored vector is nonzero.
struct SparseGradient {
  std::size_t num_points = 0;
  std::size_t dim = 0;
  std::vector<std::size_t> support;  // strictly increasing
  std::vector<double> vectors;       // support.size() x dim, row-major

  bool empty() const { return support.empty(); }
  std::span<const double> vector(std::size_t k) const { return {vectors.data() + k * dim, dim}; }
  double squared_norm() const;
  /// Full n x d array with zeros off the support.
  PointCloud densify() const;
};

/// Chain rule from diagram coordinates to points: every birth (death) edge
/// (i, j) receives d_birth (d_death) times the unit vector from x_j to x_i at
/// i, and the opposite at j.
SparseGradient pullback(const Diagram& dgm, const Cotangent& cotangent, const PointCloud& x);

/// Interpolation constraints: distinct centers with their target vectors.
struct Constraints {
  PointCloud centers;
  PointCloud vectors;
  std::size_t size() const { return centers.size(); }
};

inline constexpr double kDefaultConsolidationTol = 1e-9;

/// Merges support points lying within `tol` of each other (summing their
/// vectors) and drops centers whose merged vector is zero.
Constraints consolidate(const SparseGradient& g, const PointCloud& x, double tol = kDefaultConsolidationTol);

}  // namespace topoflow
