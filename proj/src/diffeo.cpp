#include "topoflow/diffeo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace topoflow {

namespace {

double gaussian(double squared_dist, double sigma) {
  return std::exp(-squared_dist / (2.0 * sigma * sigma));
}

}  // namespace

void Interpolant::evaluate_at(std::span<const double> p, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double w = gaussian(squared_distance(p, centers[i]), sigma);
    const auto a = coefficients[i];
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * a[c];
  }
}

Interpolant fit(const PointCloud& centers, const PointCloud& vectors, double sigma,
                const JitterPolicy& jitter) {
  if (!(sigma > 0.0)) throw Error("kernel bandwidth sigma must be positive");
  if (centers.size() == 0) throw ShapeError("interpolant needs at least one center");
  if (centers.size() != vectors.size() || centers.dim() != vectors.dim())
    throw ShapeError("centers (" + std::to_string(centers.size()) + "x" + std::to_string(centers.dim()) +
                     ") and vectors (" + std::to_string(vectors.size()) + "x" +
                     std::to_string(vectors.dim()) + ") differ in shape");

  const auto m = static_cast<Eigen::Index>(centers.size());
  const auto d = static_cast<Eigen::Index>(centers.dim());
  Eigen::MatrixXd gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    gram(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j)
      gram(i, j) = gram(j, i) = gaussian(squared_distance(centers[i], centers[j]), sigma);
  }
  Eigen::MatrixXd rhs(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index c = 0; c < d; ++c) rhs(i, c) = vectors[i][c];

  double eps = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  while (llt.info() != Eigen::Success) {
    eps = eps == 0.0 ? jitter.initial : eps * jitter.factor;
    if (eps > jitter.maximum * (1.0 + 1e-9))
      throw SingularSystemError("kernel Gram matrix is singular even with jitter " +
                                std::to_string(jitter.maximum) + " (sigma = " + std::to_string(sigma) +
                                ", " + std::to_string(m) + " centers)");
    llt.compute(gram + eps * Eigen::MatrixXd::Identity(m, m));
  }
  const Eigen::MatrixXd alpha = llt.solve(rhs);

  Interpolant out;
  out.centers = centers;
  out.coefficients = PointCloud(centers.size(), centers.dim());
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index c = 0; c < d; ++c) out.coefficients[i][c] = alpha(i, c);
  out.sigma = sigma;
  out.jitter_used = eps;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram + eps * Eigen::MatrixXd::Identity(m, m),
                                                     Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  out.kappa = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return out;
}

PointCloud evaluate(const Interpolant& field, const PointCloud& points) {
  if (points.dim() != field.dim())
    throw ShapeError("evaluating a " + std::to_string(field.dim()) + "-d field on " +
                     std::to_string(points.dim()) + "-d points");
  PointCloud out(points.size(), points.dim());
  for (std::size_t j = 0; j < points.size(); ++j) field.evaluate_at(points[j], out[j]);
  return out;
}

double lipschitz_constant_factor(std::size_t d) {
  const double dd = static_cast<double>(d);
  return std::sqrt(dd) * std::pow(2.0, 3.0 + (dd + 1.0) / 2.0) * std::pow(std::numbers::pi, (dd - 1.0) / 2.0);
}

double lipschitz_bound(double kappa, double sigma, std::size_t d, double pers_k) {
  return lipschitz_constant_factor(d) * std::pow(sigma, static_cast<double>(d) - 1.0) * kappa * pers_k;
}

DescentCheck descent_check(const SparseGradient& g, const Interpolant& field, const PointCloud& x) {
  DescentCheck out;
  if (g.empty()) return out;
  std::vector<double> v(x.dim());
  for (std::size_t k = 0; k < g.support.size(); ++k) {
    field.evaluate_at(x[g.support[k]], v);
    const auto a = g.vector(k);
    for (std::size_t c = 0; c < x.dim(); ++c) {
      out.inner += a[c] * v[c];
      out.squared_norm += a[c] * a[c];
    }
  }
  return out;
}

}  // namespace topoflow
