#include "topoflow/point_cloud.hpp"

#include <cmath>

namespace topoflow {

PointCloud::PointCloud(std::size_t n, std::size_t dim) : dim_(dim), coords_(n * dim, 0.0) {
  if (dim == 0) throw ShapeError("point cloud dimension must be at least 1");
}

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim == 0) throw ShapeError("point cloud dimension must be at least 1");
  if (coords_.size() % dim != 0)
    throw ShapeError("coordinate count " + std::to_string(coords_.size()) +
                     " is not a multiple of dimension " + std::to_string(dim));
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  PointCloud out(indices.size(), dim_);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = (*this)[indices[r]];
    std::copy(src.begin(), src.end(), out[r].begin());
  }
  return out;
}

void PointCloud::push_back(std::span<const double> point) {
  if (point.size() != dim_)
    throw ShapeError("point of dimension " + std::to_string(point.size()) +
                     " pushed into cloud of dimension " + std::to_string(dim_));
  coords_.insert(coords_.end(), point.begin(), point.end());
}

void PointCloud::validate() const {
  if (dim_ == 0) throw ShapeError("point cloud dimension must be at least 1");
  if (size() == 0) throw ShapeError("point cloud must contain at least one point");
  for (std::size_t k = 0; k < coords_.size(); ++k)
    if (!std::isfinite(coords_[k]))
      throw ShapeError("non-finite coordinate at point " + std::to_string(k / dim_) +
                       ", axis " + std::to_string(k % dim_));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double t = a[c] - b[c];
    s += t * t;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

}  // namespace topoflow
