#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "topoflow/gradient.hpp"
#include "topoflow/io.hpp"

using namespace topoflow;

namespace {

double loss_of(const PointCloud& x, const LossSpec& spec) {
  return topological_loss(rips_persistence(x, {spec.hom_dims}), spec).value;
}

SparseGradient gradient_of(const PointCloud& x, const LossSpec& spec) {
  const auto dgm = rips_persistence(x, {spec.hom_dims});
  return pullback(dgm, topological_loss(dgm, spec).cotangent, x);
}

}  // namespace

TEST_SUITE("gradient") {
  TEST_CASE("two points pulled together by simplify-death on H0") {
    const PointCloud x(2, {0, 0, 3, 0});
    auto spec = LossSpec::defaults_for(LossFamily::simplify_death);
    spec.hom_dims = {0};
    const auto g = gradient_of(x, spec);
    REQUIRE(g.support == std::vector<std::size_t>{0, 1});
    CHECK(g.vector(0)[0] == -6.0);
    CHECK(g.vector(0)[1] == 0.0);
    CHECK(g.vector(1)[0] == 6.0);
    CHECK(g.vector(1)[1] == 0.0);
    CHECK(g.squared_norm() == 72.0);
    const auto dense = g.densify();
    CHECK(dense.size() == 2);
    CHECK(dense[1][0] == 6.0);
  }

  TEST_CASE("empty cotangent gives an empty gradient") {
    const PointCloud x(2, {0, 0, 3, 0});
    const auto g = pullback(rips_persistence(x, {{0}}), Cotangent{}, x);
    CHECK(g.empty());
    CHECK(g.num_points == 2);
    CHECK(g.squared_norm() == 0.0);
  }

  TEST_CASE("contributions to a shared index are summed and zeros dropped") {
    const PointCloud x(1, {0, 1, 3});
    Diagram d;
    d.points.push_back({0, 0, 1, std::nullopt, Edge{0, 1}});
    d.points.push_back({0, 0, 2, std::nullopt, Edge{1, 2}});
    // Equal pulls on both edges: the middle point receives +1 and -1.
    const auto g = pullback(d, Cotangent{{{0, 0, 1}, {1, 0, 1}}}, x);
    CHECK(g.support == std::vector<std::size_t>{0, 2});
    CHECK(g.vector(0)[0] == -1.0);
    CHECK(g.vector(1)[0] == 1.0);
  }

  TEST_CASE("degenerate edges are rejected") {
    const PointCloud x(2, {0, 0, 0, 0});
    Diagram d;
    d.points.push_back({0, 0, 0, std::nullopt, Edge{0, 1}});
    CHECK_THROWS_AS(pullback(d, Cotangent{{{0, 0, 1}}}, x), DegenerateEdgeError);
    // A zero weight never needs the direction.
    CHECK(pullback(d, Cotangent{{{0, 0, 0}}}, x).empty());
  }

  TEST_CASE("cotangent indices are checked") {
    const PointCloud x(2, {0, 0, 1, 0});
    CHECK_THROWS_AS(pullback(Diagram{}, Cotangent{{{3, 1, 1}}}, x), ShapeError);
  }

  TEST_CASE("pullback matches finite differences on generic 6-point clouds") {
    std::mt19937_64 rng(43);
    auto spec = LossSpec::defaults_for(LossFamily::simplify);
    spec.hom_dims = {0, 1};
    int checked = 0;
    while (checked < 50) {
      const auto x = oracle::generic_cloud(rng, 6, 2, 1e-3);
      if (rips_persistence(x, {{1}}).empty()) continue;  // want H1 content too
      const auto num = oracle::numeric_gradient([&](const PointCloud& y) { return loss_of(y, spec); }, x, 1e-5);
      const auto g = gradient_of(x, spec).densify();
      for (std::size_t k = 0; k < g.data().size(); ++k) CHECK(std::abs(num.data()[k] - g.data()[k]) <= 1e-5);
      ++checked;
    }
  }

  TEST_CASE("gradient is translation invariant and rotation equivariant") {
    std::mt19937_64 rng(47);
    auto spec = LossSpec::defaults_for(LossFamily::simplify);
    spec.hom_dims = {0, 1};
    for (int trial = 0; trial < 20; ++trial) {
      const auto x = oracle::generic_cloud(rng, 12, 2, 1e-6);
      const double angle = 0.3 + trial, c = std::cos(angle), s = std::sin(angle);
      PointCloud shifted = x, rotated = x;
      for (std::size_t i = 0; i < x.size(); ++i) {
        shifted[i][0] += 5.0;
        shifted[i][1] -= 2.0;
        rotated[i][0] = c * x[i][0] - s * x[i][1];
        rotated[i][1] = s * x[i][0] + c * x[i][1];
      }
      const auto g = gradient_of(x, spec);
      const auto gs = gradient_of(shifted, spec);
      const auto gr = gradient_of(rotated, spec);
      REQUIRE(g.support == gs.support);
      REQUIRE(g.support == gr.support);
      for (std::size_t k = 0; k < g.support.size(); ++k) {
        const auto a = g.vector(k), b = gs.vector(k), r = gr.vector(k);
        CHECK(std::abs(a[0] - b[0]) <= 1e-9);
        CHECK(std::abs(a[1] - b[1]) <= 1e-9);
        CHECK(std::abs(c * a[0] - s * a[1] - r[0]) <= 1e-9);
        CHECK(std::abs(s * a[0] + c * a[1] - r[1]) <= 1e-9);
      }
    }
  }

  TEST_CASE("vanilla gradient on the noisy circle touches at most four points") {
    const auto x = generate({Shape::circle, 200, 0.05, 1, 2});
    auto spec = LossSpec::defaults_for(LossFamily::simplify_death);
    spec.top_k = 1;
    const auto g = gradient_of(x, spec);
    CHECK(g.support.size() >= 2);
    CHECK(g.support.size() <= 4);
  }

  SparseGradient manual(std::size_t n, std::vector<std::size_t> support, std::vector<double> vectors) {
    SparseGradient g;
    g.num_points = n;
    g.dim = 2;
    g.support = std::move(support);
    g.vectors = std::move(vectors);
    return g;
  }

  TEST_CASE("consolidate keeps distinct centers unchanged") {
    const PointCloud x(2, {0, 0, 1, 0, 0, 1});
    const auto c = consolidate(manual(3, {0, 2}, {1, 2, 3, 4}), x);
    REQUIRE(c.size() == 2);
    CHECK(c.centers == PointCloud(2, {0, 0, 0, 1}));
    CHECK(c.vectors == PointCloud(2, {1, 2, 3, 4}));
  }

  TEST_CASE("consolidate drops coincident points whose vectors cancel") {
    const PointCloud x(2, {0, 0, 0, 0, 5, 5});
    const auto c = consolidate(manual(3, {0, 1, 2}, {1, 2, -1, -2, 1, 0}), x);
    REQUIRE(c.size() == 1);
    CHECK(c.centers == PointCloud(2, {5, 5}));
  }

  TEST_CASE("consolidate sums vectors of coincident points") {
    const PointCloud x(2, {1, 1, 1, 1 + 1e-12});
    const auto c = consolidate(manual(2, {0, 1}, {1, 2, 1, 2}), x);
    REQUIRE(c.size() == 1);
    CHECK(c.vectors == PointCloud(2, {2, 4}));
  }

  TEST_CASE("consolidated centers are separated by more than the tolerance") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 20; ++trial) {
      const auto x = oracle::random_cloud(rng, 30, 2);
      std::vector<std::size_t> support(30);
      std::vector<double> vecs(60, 1.0);
      for (std::size_t i = 0; i < 30; ++i) support[i] = i;
      const double tol = 0.05 * (trial + 1);
      const auto c = consolidate(manual(30, support, vecs), x, tol);
      for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j) CHECK(distance(c.centers[i], c.centers[j]) > tol);
    }
  }
}
