// Boundary-matrix reduction on explicitly materialized filtrations.

#include <algorithm>
#include <map>
#include <string>

#include "topoflow/rips.hpp"

namespace topoflow {
namespace {

using Column = std::vector<std::size_t>;  // sorted row indices, Z/2 coefficients
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

void add_into(Column& target, const Column& source) {
  Column sum;
  sum.reserve(target.size() + source.size());
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(sum));
  target.swap(sum);
}

std::vector<Column> boundary_columns(const FilteredComplex& complex) {
  std::map<std::vector<std::size_t>, std::size_t> position;
  for (std::size_t i = 0; i < complex.simplices.size(); ++i)
    position.emplace(complex.simplices[i].vertices, i);

  std::vector<Column> columns(complex.simplices.size());
  for (std::size_t i = 0; i < complex.simplices.size(); ++i) {
    const auto& verts = complex.simplices[i].vertices;
    if (verts.size() < 2) continue;
    for (std::size_t drop = 0; drop < verts.size(); ++drop) {
      std::vector<std::size_t> face;
      face.reserve(verts.size() - 1);
      for (std::size_t k = 0; k < verts.size(); ++k)
        if (k != drop) face.push_back(verts[k]);
      const auto it = position.find(face);
      if (it == position.end() || it->second >= i)
        throw Error("filtration is not monotone: a face of a simplex is missing or comes later");
      columns[i].push_back(it->second);
    }
    std::sort(columns[i].begin(), columns[i].end());
  }
  return columns;
}

void check_dims(const FilteredComplex& complex, std::span<const int> dims) {
  for (int p : dims)
    if (p < 0 || static_cast<std::size_t>(p) + 1 > complex.max_dim)
      throw Error("homology dimension " + std::to_string(p) +
                  " needs simplices of dimension " + std::to_string(p + 1) +
                  " but the complex stops at " + std::to_string(complex.max_dim));
}

bool wanted(std::span<const int> dims, std::size_t p) {
  return std::find(dims.begin(), dims.end(), static_cast<int>(p)) != dims.end();
}

// Turns (birth simplex, death simplex) pairs and unpaired creators into a diagram.
Diagram assemble(const FilteredComplex& complex, std::span<const int> dims,
                 const std::vector<std::size_t>& death_of, const std::vector<bool>& is_death,
                 const PersistenceOptions& opts) {
  Diagram dgm;
  for (std::size_t b = 0; b < complex.simplices.size(); ++b) {
    const Simplex& sb = complex.simplices[b];
    const std::size_t p = sb.dim();
    if (is_death[b] || !wanted(dims, p)) continue;
    PersistencePoint pt;
    pt.dim = static_cast<int>(p);
    pt.birth = sb.value;
    pt.birth_edge = sb.critical_edge;
    if (death_of[b] != kNone) {
      const Simplex& sd = complex.simplices[death_of[b]];
      pt.death = sd.value;
      pt.death_edge = sd.critical_edge;
      if (pt.death == pt.birth && !opts.include_zero) continue;
    }
    dgm.points.push_back(pt);
  }
  sort_diagram(dgm);
  return dgm;
}

}  // namespace

Diagram compute_persistence(const FilteredComplex& complex, std::span<const int> dims,
                            const PersistenceOptions& opts) {
  check_dims(complex, dims);
  const std::size_t total = complex.simplices.size();
  if (dims.empty() || total == 0) return {};

  const auto boundary = boundary_columns(complex);
  std::vector<std::size_t> death_of(total, kNone);
  std::vector<bool> is_death(total, false);
  std::vector<bool> cleared(total, false);
  std::vector<std::size_t> owner(total, kNone);  // row -> column whose pivot it is
  std::vector<Column> reduced(total);

  int top = 0;
  for (int p : dims) top = std::max(top, p + 1);
  int bottom = top;
  for (int p : dims) bottom = std::min(bottom, std::max(1, p));

  for (std::size_t k = static_cast<std::size_t>(top); k >= static_cast<std::size_t>(bottom); --k) {
    for (std::size_t j = 0; j < total; ++j) {
      if (complex.simplices[j].dim() != k || cleared[j]) continue;
      Column col = boundary[j];
      while (!col.empty() && owner[col.back()] != kNone) add_into(col, reduced[owner[col.back()]]);
      if (col.empty()) continue;
      const std::size_t pivot = col.back();
      owner[pivot] = j;
      death_of[pivot] = j;
      is_death[j] = true;
      // The creator's own column is known to reduce to zero.
      cleared[pivot] = true;
      reduced[j] = std::move(col);
    }
  }
  return assemble(complex, dims, death_of, is_death, opts);
}

Diagram reduce_oracle(const FilteredComplex& complex, std::span<const int> dims,
                      const PersistenceOptions& opts) {
  check_dims(complex, dims);
  const std::size_t total = complex.simplices.size();
  if (dims.empty() || total == 0) return {};

  std::vector<Column> columns = boundary_columns(complex);
  std::vector<std::size_t> death_of(total, kNone);
  std::vector<bool> is_death(total, false);

  for (std::size_t j = 0; j < total; ++j) {
    bool changed = true;
    while (changed && !columns[j].empty()) {
      changed = false;
      for (std::size_t i = 0; i < j; ++i) {
        if (!columns[i].empty() && columns[i].back() == columns[j].back()) {
          add_into(columns[j], columns[i]);
          changed = true;
          break;
        }
      }
    }
    if (!columns[j].empty()) {
      death_of[columns[j].back()] = j;
      is_death[j] = true;
    }
  }
  return assemble(complex, dims, death_of, is_death, opts);
}

}  // namespace topoflow
