#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace topoflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simplex count of a filtration would exceed the configured budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Mismatched dimensions or sizes between arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// A set of n points in R^d stored row-major.
///
/// A cloud with zero points is a valid value (an empty batch to push through a
/// flow); algorithms that need points check `size() >= 1` themselves.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::size_t n, std::size_t dim);
  PointCloud(std::size_t dim, std::vector<double> coords);

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<double> operator[](std::size_t i) { return {coords_.data() + i * dim_, dim_}; }

  const std::vector<double>& data() const { return coords_; }
  std::vector<double>& data() { return coords_; }

  /// Rows `indices` in the given order.
  PointCloud select(std::span<const std::size_t> indices) const;

  void push_back(std::span<const double> point);

  /// Throws ShapeError unless n >= 1, d >= 1 and every coordinate is finite.
  void validate() const;

  bool operator==(const PointCloud&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

double distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace topoflow
