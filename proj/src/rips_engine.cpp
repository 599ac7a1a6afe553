// Implicit Vietoris-Rips persistence.
//
// Simplices are never stored in full: a k-simplex is a 64-bit index in the
// combinatorial number system and its coboundary is enumerated on demand from
// the distance matrix. Pairs are found by reducing the coboundary matrix
// (lowest dimension first, clearing pivots of the previous dimension), which
// yields exactly the persistence pairs of the boundary-matrix reduction.
//
// Vertices are relabelled u = n - 1 - v internally. With that relabelling,
// lexicographic order on the original sorted vertex tuples is the reverse of
// the numeric order of simplex indices, so the filtration order within one
// dimension is (value ascending, index descending).

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>

#include "topoflow/rips.hpp"

namespace topoflow {
namespace {

using Key = std::uint64_t;

struct Cell {
  double value;
  Key key;
};

inline bool earlier(const Cell& a, const Cell& b) {
  return a.value < b.value || (a.value == b.value && a.key > b.key);
}

// Heap comparator putting the earliest cell at the front.
struct LaterFirst {
  bool operator()(const Cell& a, const Cell& b) const { return earlier(b, a); }
};

class Binomials {
 public:
  Binomials(std::size_t n, std::size_t k) : cols_(k + 1), table_((n + 1) * (k + 1), 0) {
    for (std::size_t i = 0; i <= n; ++i) {
      table_[i * cols_] = 1;
      for (std::size_t j = 1; j <= std::min(i, k); ++j)
        table_[i * cols_ + j] = table_[(i - 1) * cols_ + j - 1] + (j < i ? table_[(i - 1) * cols_ + j] : 0);
    }
  }
  Key operator()(std::size_t n, std::size_t k) const { return k > n ? 0 : table_[n * cols_ + k]; }

 private:
  std::size_t cols_;
  std::vector<Key> table_;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) x = std::exchange(parent_[x], root);
    return root;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

class RipsEngine {
 public:
  RipsEngine(const PointCloud& x, const RipsOptions& opts, std::size_t max_dim)
      : x_(x),
        n_(x.size()),
        dist_(n_ * n_, 0.0),
        threshold_(opts.max_radius.value_or(std::numeric_limits<double>::infinity())),
        binom_(n_, max_dim + 2),
        include_zero_(opts.include_zero) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        dist_[(n_ - 1 - i) * n_ + (n_ - 1 - j)] = dist_[(n_ - 1 - j) * n_ + (n_ - 1 - i)] =
            distance(x[i], x[j]);
  }

  Diagram run(std::span<const int> dims) {
    Diagram out;
    int top = 0;
    for (int p : dims) top = std::max(top, p);
    auto columns = zero_dimensional(wants(dims, 0), out);
    PivotMap pivots;
    for (std::size_t k = 1; k <= static_cast<std::size_t>(top); ++k) {
      if (k >= 2) columns = next_columns(k - 1, pivots);
      pivots = reduce(std::move(columns), k, wants(dims, static_cast<int>(k)), out);
    }
    sort_diagram(out);
    return out;
  }

 private:
  using PivotMap = std::unordered_map<Key, std::uint32_t>;

  static bool wants(std::span<const int> dims, int p) {
    return std::find(dims.begin(), dims.end(), p) != dims.end();
  }

  double d(std::size_t u, std::size_t w) const { return dist_[u * n_ + w]; }

  // Largest v <= top with C(v, k) <= key.
  std::size_t max_vertex(Key key, std::size_t k, std::size_t top) const {
    std::size_t lo = k - 1, hi = top;
    while (lo < hi) {
      const std::size_t mid = hi - (hi - lo) / 2;
      if (binom_(mid, k) <= key)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }

  // Internal vertices of a dim-simplex, in decreasing order.
  std::array<std::size_t, 4> vertices(Key key, std::size_t dim) const {
    std::array<std::size_t, 4> out{};
    std::size_t top = n_ - 1;
    for (std::size_t i = 0; i <= dim; ++i) {
      const std::size_t k = dim + 1 - i;
      top = max_vertex(key, k, top);
      out[i] = top;
      key -= binom_(top, k);
      if (top > 0) --top;
    }
    return out;
  }

  std::optional<Edge> critical_edge(Key key, std::size_t dim) const {
    const auto v = vertices(key, dim);
    std::vector<std::size_t> original(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) original[i] = n_ - 1 - v[i];
    std::sort(original.begin(), original.end());
    return filtration_value(original, x_).second;
  }

  // Calls f(coface) for cofaces in decreasing index order until f returns
  // false. With `only_above`, only vertices larger than the top vertex are
  // inserted, which generates each (dim+1)-simplex exactly once.
  template <class F>
  void for_each_coface(const Cell& s, std::size_t dim, bool only_above, F&& f) const {
    const auto v = vertices(s.key, dim);
    Key below = s.key;
    Key above = 0;
    std::size_t passed = 0;
    for (std::size_t w = n_; w-- > 0;) {
      if (passed <= dim && w == v[passed]) {
        if (only_above) return;
        below -= binom_(v[passed], dim - passed + 1);
        above += binom_(v[passed], dim - passed + 2);
        ++passed;
        continue;
      }
      double value = s.value;
      for (std::size_t j = 0; j <= dim; ++j) value = std::max(value, d(w, v[j]));
      if (value > threshold_) continue;
      if (!f(Cell{value, above + binom_(w, dim + 2 - passed) + below})) return;
    }
  }

  void report(Diagram& out, int dim, const Cell& birth, std::optional<Cell> death) const {
    if (death && death->value == birth.value && !include_zero_) return;
    PersistencePoint p;
    p.dim = dim;
    p.birth = birth.value;
    if (dim > 0) p.birth_edge = critical_edge(birth.key, static_cast<std::size_t>(dim));
    if (death) {
      p.death = death->value;
      p.death_edge = critical_edge(death->key, static_cast<std::size_t>(dim) + 1);
    }
    out.points.push_back(p);
  }

  // H0 by Kruskal; returns the edges that create cycles, latest first.
  std::vector<Cell> zero_dimensional(bool report_h0, Diagram& out) {
    for (std::size_t u = 1; u < n_; ++u)
      for (std::size_t w = 0; w < u; ++w)
        if (d(u, w) <= threshold_) edges_.push_back(Cell{d(u, w), binom_(u, 2) + w});
    std::sort(edges_.begin(), edges_.end(), earlier);

    UnionFind components(n_);
    std::vector<Cell> cycle_edges;
    for (const Cell& e : edges_) {
      const auto v = vertices(e.key, 1);
      if (components.unite(v[0], v[1])) {
        if (report_h0) report(out, 0, Cell{0.0, 0}, e);
      } else {
        cycle_edges.push_back(e);
      }
    }
    if (report_h0)
      for (std::size_t i = 0; i < n_; ++i)
        if (components.find(i) == i) report(out, 0, Cell{0.0, 0}, std::nullopt);
    std::reverse(cycle_edges.begin(), cycle_edges.end());
    return cycle_edges;
  }

  // All k-simplices (k = dim + 1) whose index is not a pivot from the
  // previous dimension, latest first. Keeps the full list for the next round.
  std::vector<Cell> next_columns(std::size_t dim, const PivotMap& cleared) {
    const std::vector<Cell>& faces = dim == 1 ? edges_ : all_simplices_;
    std::vector<Cell> simplices;
    for (const Cell& f : faces)
      for_each_coface(f, dim, true, [&](const Cell& c) {
        simplices.push_back(c);
        return true;
      });
    std::vector<Cell> columns;
    columns.reserve(simplices.size());
    for (const Cell& c : simplices)
      if (!cleared.contains(c.key)) columns.push_back(c);
    std::sort(columns.begin(), columns.end(), LaterFirst{});
    all_simplices_.swap(simplices);
    return columns;
  }

  static std::optional<Cell> pop_pivot(std::vector<Cell>& heap) {
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), LaterFirst{});
      const Cell top = heap.back();
      heap.pop_back();
      if (!heap.empty() && heap.front().key == top.key) {
        std::pop_heap(heap.begin(), heap.end(), LaterFirst{});
        heap.pop_back();
        continue;
      }
      heap.push_back(top);
      std::push_heap(heap.begin(), heap.end(), LaterFirst{});
      return top;
    }
    return std::nullopt;
  }

  PivotMap reduce(std::vector<Cell> columns, std::size_t dim, bool report_dim, Diagram& out) {
    PivotMap pivots;
    pivots.reserve(columns.size());
    std::vector<Cell> stored;  // reduction-matrix columns, flattened
    std::vector<std::size_t> offsets{0};
    std::vector<Cell> heap;
    std::vector<Cell> working;

    auto finish = [&](const Cell& pivot) {
      std::sort(working.begin(), working.end(), [](const Cell& a, const Cell& b) { return a.key < b.key; });
      for (std::size_t i = 0; i < working.size();) {
        if (i + 1 < working.size() && working[i].key == working[i + 1].key) {
          i += 2;
          continue;
        }
        stored.push_back(working[i++]);
      }
      pivots.emplace(pivot.key, static_cast<std::uint32_t>(offsets.size() - 1));
      offsets.push_back(stored.size());
    };

    for (const Cell& column : columns) {
      heap.clear();
      working.assign(1, column);
      bool emergent = false;
      bool seen_equal = false;
      for_each_coface(column, dim, false, [&](const Cell& c) {
        if (!seen_equal && c.value == column.value) {
          seen_equal = true;
          // Earliest possible coface; if unclaimed it is the pivot already.
          if (!pivots.contains(c.key)) {
            emergent = true;
            if (report_dim) report(out, static_cast<int>(dim), column, c);
            finish(c);
            return false;
          }
        }
        heap.push_back(c);
        return true;
      });
      if (emergent) continue;
      std::make_heap(heap.begin(), heap.end(), LaterFirst{});

      for (;;) {
        const auto pivot = pop_pivot(heap);
        if (!pivot) {
          if (report_dim) report(out, static_cast<int>(dim), column, std::nullopt);
          break;
        }
        const auto owner = pivots.find(pivot->key);
        if (owner == pivots.end()) {
          if (report_dim) report(out, static_cast<int>(dim), column, *pivot);
          finish(*pivot);
          break;
        }
        for (std::size_t i = offsets[owner->second]; i < offsets[owner->second + 1]; ++i) {
          const Cell addend = stored[i];
          working.push_back(addend);
          for_each_coface(addend, dim, false, [&](const Cell& c) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end(), LaterFirst{});
            return true;
          });
        }
      }
    }
    return pivots;
  }

  const PointCloud& x_;
  std::size_t n_;
  std::vector<double> dist_;
  double threshold_;
  Binomials binom_;
  bool include_zero_;
  std::vector<Cell> edges_;
  std::vector<Cell> all_simplices_;
};

}  // namespace

Diagram rips_persistence(const PointCloud& x, const RipsOptions& opts) {
  x.validate();
  if (opts.dims.empty()) return {};
  int top = 0;
  for (int p : opts.dims) {
    if (p < 0 || p > 2)
      throw Error("homology dimension must be 0, 1 or 2, got " + std::to_string(p));
    top = std::max(top, p);
  }
  const std::size_t max_dim = static_cast<std::size_t>(top) + 1;
  // The complete complex bounds the truncated one; count exactly only when it does not fit.
  if (complete_simplex_count(x.size(), max_dim, opts.simplex_budget) > opts.simplex_budget &&
      count_rips_simplices(x, max_dim, opts.max_radius, opts.simplex_budget) > opts.simplex_budget)
    throw CapacityError("Rips filtration on " + std::to_string(x.size()) +
                        " points exceeds the simplex budget of " +
                        std::to_string(opts.simplex_budget) +
                        " simplices; subsample the input (or raise TOPOFLOW_SIMPLEX_BUDGET)");
  RipsEngine engine(x, opts, max_dim);
  return engine.run(opts.dims);
}

}  // namespace topoflow
