#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <tuple>

#include "topoflow/rips.hpp"

namespace topoflow {

std::size_t simplex_budget_from_env() {
  const char* raw = std::getenv("TOPOFLOW_SIMPLEX_BUDGET");
  if (raw == nullptr || *raw == '\0') return kDefaultSimplexBudget;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0' || v == 0) return kDefaultSimplexBudget;
  return static_cast<std::size_t>(v);
}

Diagram Diagram::finite_in(std::span<const int> dims) const {
  Diagram out;
  for (const auto& p : points)
    if (p.finite() && std::find(dims.begin(), dims.end(), p.dim) != dims.end())
      out.points.push_back(p);
  return out;
}

void sort_diagram(Diagram& dgm) {
  auto key = [](const PersistencePoint& p) {
    return std::make_tuple(p.dim, p.birth, p.death, p.birth_edge, p.death_edge);
  };
  std::stable_sort(dgm.points.begin(), dgm.points.end(),
                   [&](const auto& a, const auto& b) { return key(a) < key(b); });
}

std::pair<double, std::optional<Edge>> filtration_value(std::span<const std::size_t> vertices,
                                                        const PointCloud& x) {
  for (std::size_t v : vertices)
    if (v >= x.size())
      throw ShapeError("vertex index " + std::to_string(v) + " out of range for " +
                       std::to_string(x.size()) + " points");
  if (vertices.size() < 2) return {0.0, std::nullopt};
  double best = -1.0;
  Edge best_edge;
  for (std::size_t a = 0; a < vertices.size(); ++a) {
    for (std::size_t b = a + 1; b < vertices.size(); ++b) {
      const Edge e{std::min(vertices[a], vertices[b]), std::max(vertices[a], vertices[b])};
      const double len = distance(x[e.first], x[e.second]);
      if (len > best || (len == best && e < best_edge)) {
        best = len;
        best_edge = e;
      }
    }
  }
  return {best, best_edge};
}

namespace {

void check_rips_args(const PointCloud& x, std::size_t max_dim, std::optional<double> max_radius) {
  x.validate();
  if (max_dim > 3) throw Error("max_dim must be at most 3, got " + std::to_string(max_dim));
  if (max_radius && !(*max_radius > 0.0))
    throw Error("max_radius must be positive");
}

std::string budget_message(std::uint64_t budget) {
  return "Rips filtration exceeds the simplex budget of " + std::to_string(budget) +
         " simplices; subsample the input (or raise TOPOFLOW_SIMPLEX_BUDGET)";
}

// Pairwise distances, row-major n x n.
std::vector<double> distance_matrix(const PointCloud& x) {
  const std::size_t n = x.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = distance(x[i], x[j]);
  return dist;
}

}  // namespace

FilteredComplex build_filtration(const PointCloud& x, std::size_t max_dim,
                                 std::optional<double> max_radius, std::size_t budget) {
  check_rips_args(x, max_dim, max_radius);
  const std::size_t n = x.size();
  const double radius = max_radius.value_or(std::numeric_limits<double>::infinity());
  const auto dist = distance_matrix(x);

  FilteredComplex complex;
  complex.num_points = n;
  complex.max_dim = max_dim;

  std::vector<std::size_t> current;
  // Depth-first clique enumeration; `value` is the diameter of `current`.
  auto extend = [&](auto&& self, double value) -> void {
    if (complex.simplices.size() >= budget) throw CapacityError(budget_message(budget));
    Simplex s;
    s.vertices = current;
    s.value = value;
    if (current.size() >= 2) s.critical_edge = filtration_value(current, x).second;
    complex.simplices.push_back(std::move(s));
    if (current.size() == max_dim + 1) return;
    for (std::size_t v = current.back() + 1; v < n; ++v) {
      double grown = value;
      for (std::size_t u : current) grown = std::max(grown, dist[u * n + v]);
      if (grown > radius) continue;
      current.push_back(v);
      self(self, grown);
      current.pop_back();
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    current.assign(1, v);
    extend(extend, 0.0);
  }

  std::sort(complex.simplices.begin(), complex.simplices.end(),
            [](const Simplex& a, const Simplex& b) {
              if (a.value != b.value) return a.value < b.value;
              if (a.vertices.size() != b.vertices.size())
                return a.vertices.size() < b.vertices.size();
              return a.vertices < b.vertices;
            });
  return complex;
}

std::uint64_t complete_simplex_count(std::size_t n, std::size_t max_dim, std::uint64_t limit) {
  std::uint64_t total = 0;
  long double binom = 1.0L;
  for (std::uint64_t k = 0; k <= max_dim && k < n; ++k) {
    binom = binom * static_cast<long double>(n - k) / static_cast<long double>(k + 1);
    const long double t = static_cast<long double>(total) + binom;
    if (t > static_cast<long double>(limit)) return limit + 1;
    total = static_cast<std::uint64_t>(std::llround(t));
  }
  return total;
}

std::uint64_t count_rips_simplices(const PointCloud& x, std::size_t max_dim,
                                   std::optional<double> max_radius, std::uint64_t limit) {
  check_rips_args(x, max_dim, max_radius);
  const std::size_t n = x.size();
  if (!max_radius) return complete_simplex_count(n, max_dim, limit);

  const double radius = *max_radius;
  std::vector<std::vector<std::size_t>> upper(n);  // neighbours with larger index
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (distance(x[i], x[j]) <= radius) upper[i].push_back(j);

  std::uint64_t count = 0;
  auto grow = [&](auto&& self, const std::vector<std::size_t>& cand, std::size_t depth) -> bool {
    for (std::size_t v : cand) {
      if (++count > limit) return false;
      if (depth == max_dim) continue;
      std::vector<std::size_t> next;
      std::set_intersection(cand.begin(), cand.end(), upper[v].begin(), upper[v].end(),
                            std::back_inserter(next));
      if (!self(self, next, depth + 1)) return false;
    }
    return true;
  };
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (!grow(grow, all, 0)) return limit + 1;
  return count;
}

}  // namespace topoflow
