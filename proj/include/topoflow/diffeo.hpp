#pragma once

#include <cstddef>
#include <span>

#include "topoflow/gradient.hpp"
#include "topoflow/point_cloud.hpp"

namespace topoflow {

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Diagonal jitter schedule tried when the Gram matrix fails to factorize:
/// initial, initial * factor, ... up to maximum.
struct JitterPolicy {
  double initial = 1e-12;
  double factor = 10.0;
  double maximum = 1e-6;
};

/// Gaussian-kernel vector field v(x) = sum_i exp(-|x - c_i|^2 / (2 sigma^2)) alpha_i,
/// the minimal-norm field of its RKHS that takes the prescribed values at the
/// centers.
struct Interpolant {
  PointCloud centers;       // m x d
  PointCloud coefficients;  // m x d
  double sigma = 0.1;
  double jitter_used = 0.0;
  double kappa = 1.0;  // condition number of the (jittered) Gram matrix

  std::size_t dim() const { return centers.dim(); }
  std::size_t size() const { return centers.size(); }

  /// v(p) written into `out` (size d).
  void evaluate_at(std::span<const double> p, std::span<double> out) const;
};

Interpolant fit(const PointCloud& centers, const PointCloud& vectors, double sigma,
                const JitterPolicy& jitter = {});
inline Interpolant fit(const Constraints& c, double sigma, const JitterPolicy& jitter = {}) {
  return fit(c.centers, c.vectors, sigma, jitter);
}

PointCloud evaluate(const Interpolant& field, const PointCloud& points);

/// sqrt(d) * 2^(3 + (d+1)/2) * pi^((d-1)/2).
double lipschitz_constant_factor(std::size_t d);

/// C_d * sigma^(d-1) * kappa * pers_k: bound on |v(x) - v(y)|_1 / |x - y|_2 for
/// fields interpolating simplification or augmentation gradients.
double lipschitz_bound(double kappa, double sigma, std::size_t d, double pers_k);

struct DescentCheck {
  double inner = 0.0;         // <grad L(X), v(X)>
  double squared_norm = 0.0;  // |grad L(X)|^2
};

DescentCheck descent_check(const SparseGradient& g, const Interpolant& field, const PointCloud& x);

}  // namespace topoflow
