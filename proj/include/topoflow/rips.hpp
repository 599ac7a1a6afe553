#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "topoflow/point_cloud.hpp"

namespace topoflow {

/// Default cap on the number of simplices a Rips computation may touch.
inline constexpr std::size_t kDefaultSimplexBudget = 50'000'000;

/// Budget from TOPOFLOW_SIMPLEX_BUDGET when set to a positive integer,
/// kDefaultSimplexBudget otherwise.
std::size_t simplex_budget_from_env();

/// Unordered point pair stored with first < second.
struct Edge {
  std::size_t first = 0;
  std::size_t second = 0;

  auto operator<=>(const Edge&) const = default;
};

struct Simplex {
  std::vector<std::size_t> vertices;  // strictly increasing
  double value = 0.0;
  std::optional<Edge> critical_edge;  // none for vertices

  std::size_t dim() const { return vertices.size() - 1; }
};

/// Simplices in filtration order: (value, dimension, lexicographic vertices).
struct FilteredComplex {
  std::size_t num_points = 0;
  std::size_t max_dim = 0;
  std::vector<Simplex> simplices;
};

struct PersistencePoint {
  int dim = 0;
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();
  std::optional<Edge> birth_edge;
  std::optional<Edge> death_edge;

  bool finite() const { return death != std::numeric_limits<double>::infinity(); }
  double persistence() const { return death - birth; }
};

struct Diagram {
  std::vector<PersistencePoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const PersistencePoint& operator[](std::size_t i) const { return points[i]; }

  /// Finite points whose dimension is in `dims`, in diagram order.
  Diagram finite_in(std::span<const int> dims) const;
};

/// Canonical point order used by every persistence routine: dimension, then
/// birth, death and the two edges.
void sort_diagram(Diagram& dgm);

/// Longest edge of the simplex spanned by `vertices` and its length; ties go to
/// the lexicographically smallest pair. Single vertices give (0, none).
std::pair<double, std::optional<Edge>> filtration_value(std::span<const std::size_t> vertices,
                                                        const PointCloud& x);

/// Every Vietoris-Rips simplex of dimension <= max_dim with value <= max_radius.
FilteredComplex build_filtration(const PointCloud& x, std::size_t max_dim,
                                 std::optional<double> max_radius = std::nullopt,
                                 std::size_t budget = kDefaultSimplexBudget);

struct PersistenceOptions {
  /// Keep pairs with birth == death.
  bool include_zero = false;
};

/// Z/2 boundary-matrix reduction with clearing, highest dimension first.
/// `dims` must lie in [0, max_dim - 1].
Diagram compute_persistence(const FilteredComplex& complex, std::span<const int> dims,
                            const PersistenceOptions& opts = {});

/// Left-to-right column reduction without any optimization. Cross-check only;
/// meant for complexes on at most ~10 points.
Diagram reduce_oracle(const FilteredComplex& complex, std::span<const int> dims,
                      const PersistenceOptions& opts = {});

struct RipsOptions {
  std::vector<int> dims{1};
  std::optional<double> max_radius;
  std::size_t simplex_budget = kDefaultSimplexBudget;
  bool include_zero = false;
};

/// sum_{k <= max_dim} C(n, k + 1), or limit + 1 once that sum exceeds limit.
std::uint64_t complete_simplex_count(std::size_t n, std::size_t max_dim, std::uint64_t limit);

/// Number of Rips simplices of dimension <= max_dim within max_radius, counted
/// up to `limit` (returns limit + 1 as soon as it is exceeded).
std::uint64_t count_rips_simplices(const PointCloud& x, std::size_t max_dim,
                                   std::optional<double> max_radius, std::uint64_t limit);

/// Persistence diagram of the Rips filtration of `x` without materializing the
/// complex. Produces the same pairs as compute_persistence(build_filtration(...)).
Diagram rips_persistence(const PointCloud& x, const RipsOptions& opts);

}  // namespace topoflow
