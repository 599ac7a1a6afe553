#include "topoflow/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "topoflow/assignment.hpp"

namespace topoflow {

std::string_view to_string(LossFamily family) {
  switch (family) {
    case LossFamily::simplify: return "simplify";
    case LossFamily::simplify_death: return "simplify-death";
    case LossFamily::augment: return "augment";
    case LossFamily::register_target: return "register";
  }
  return "unknown";
}

LossFamily parse_loss_family(std::string_view name) {
  for (auto f : {LossFamily::simplify, LossFamily::simplify_death, LossFamily::augment,
                 LossFamily::register_target})
    if (to_string(f) == name) return f;
  throw Error("unknown loss family '" + std::string(name) +
              "' (expected simplify, simplify-death, augment or register)");
}

LossSpec LossSpec::defaults_for(LossFamily family) {
  LossSpec spec;
  spec.family = family;
  if (family == LossFamily::augment) spec.top_k = 1;
  return spec;
}

void LossSpec::validate() const {
  if (hom_dims.empty()) throw Error("loss needs at least one homology dimension");
  for (int p : hom_dims)
    if (p < 0 || p > 2) throw Error("loss homology dimensions must be 0, 1 or 2");
  if (top_k && *top_k == 0) throw Error("top-k selection needs k >= 1");
  if (target.has_value() != (family == LossFamily::register_target))
    throw Error("a target diagram is required for, and only for, the register loss");
  if (regularizer) {
    if (regularizer->lower.size() != regularizer->upper.size() || regularizer->lower.empty())
      throw Error("box regularizer corners must have the same, nonzero dimension");
    for (std::size_t c = 0; c < regularizer->lower.size(); ++c)
      if (!(regularizer->lower[c] < regularizer->upper[c]))
        throw Error("box regularizer needs lower < upper on every axis");
  }
}

std::vector<std::size_t> select_points(const Diagram& dgm, const LossSpec& spec) {
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < dgm.size(); ++i) {
    const auto& p = dgm[i];
    if (p.finite() && std::find(spec.hom_dims.begin(), spec.hom_dims.end(), p.dim) != spec.hom_dims.end())
      chosen.push_back(i);
  }
  std::stable_sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
    const double pa = dgm[a].persistence(), pb = dgm[b].persistence();
    if (pa != pb) return pa > pb;
    if (dgm[a].birth != dgm[b].birth) return dgm[a].birth < dgm[b].birth;
    return a < b;
  });
  if (spec.top_k && chosen.size() > *spec.top_k) chosen.resize(*spec.top_k);
  return chosen;
}

LossValue simplification_loss(const Diagram& dgm, const LossSpec& spec) {
  LossValue out;
  for (std::size_t i : select_points(dgm, spec)) {
    const double b = dgm[i].birth, d = dgm[i].death;
    if (spec.family == LossFamily::simplify_death) {
      out.value += d * d;
      out.cotangent.entries.push_back({i, 0.0, 2.0 * d});
    } else {
      out.value += (b - d) * (b - d);
      out.cotangent.entries.push_back({i, 2.0 * (b - d), -2.0 * (b - d)});
    }
  }
  return out;
}

LossValue augmentation_loss(const Diagram& dgm, const LossSpec& spec) {
  LossValue out;
  for (std::size_t i : select_points(dgm, spec)) {
    const double b = dgm[i].birth, d = dgm[i].death;
    out.value -= (b - d) * (b - d);
    out.cotangent.entries.push_back({i, -2.0 * (b - d), 2.0 * (b - d)});
  }
  return out;
}

Registration register_diagram(const Diagram& dgm, const Diagram& target, const LossSpec& spec) {
  std::vector<std::size_t> own;
  for (std::size_t i = 0; i < dgm.size(); ++i)
    if (dgm[i].finite() &&
        std::find(spec.hom_dims.begin(), spec.hom_dims.end(), dgm[i].dim) != spec.hom_dims.end())
      own.push_back(i);
  const Diagram goal = target.finite_in(spec.hom_dims);
  if (own.size() > kMaxRegistrationPoints || goal.size() > kMaxRegistrationPoints)
    throw CapacityError("registration supports at most " + std::to_string(kMaxRegistrationPoints) +
                        " finite points per diagram (got " + std::to_string(own.size()) + " and " +
                        std::to_string(goal.size()) + ")");

  // Rows: own points then one diagonal slot per target point.
  // Columns: target points then one diagonal slot per own point.
  const std::size_t m = own.size(), t = goal.size(), n = m + t;
  auto to_diagonal = [](double b, double d) { return 0.5 * (d - b) * (d - b); };
  std::vector<double> cost(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double& cell = cost[r * n + c];
      if (r < m && c < t) {
        const auto& p = dgm[own[r]];
        const auto& q = goal[c];
        cell = (p.birth - q.birth) * (p.birth - q.birth) + (p.death - q.death) * (p.death - q.death);
      } else if (r < m) {
        cell = to_diagonal(dgm[own[r]].birth, dgm[own[r]].death);
      } else if (c < t) {
        cell = to_diagonal(goal[c].birth, goal[c].death);
      }
    }
  }
  const Assignment match = solve_assignment(cost, n);

  Registration out;
  out.loss.value = match.cost;
  for (std::size_t r = 0; r < m; ++r) {
    const auto& p = dgm[own[r]];
    const std::size_t c = match.column_of_row[r];
    if (c < t) {
      out.loss.cotangent.entries.push_back(
          {own[r], 2.0 * (p.birth - goal[c].birth), 2.0 * (p.death - goal[c].death)});
      out.partner.emplace_back(c);
    } else {
      out.loss.cotangent.entries.push_back({own[r], p.birth - p.death, p.death - p.birth});
      out.partner.emplace_back(std::nullopt);
    }
  }
  return out;
}

LossValue registration_loss(const Diagram& dgm, const Diagram& target, const LossSpec& spec) {
  return register_diagram(dgm, target, spec).loss;
}

LossValue topological_loss(const Diagram& dgm, const LossSpec& spec) {
  switch (spec.family) {
    case LossFamily::simplify:
    case LossFamily::simplify_death: return simplification_loss(dgm, spec);
    case LossFamily::augment: return augmentation_loss(dgm, spec);
    case LossFamily::register_target:
      if (!spec.target) throw Error("register loss needs a target diagram");
      return registration_loss(dgm, *spec.target, spec);
  }
  return {};
}

RegularizerValue box_regularization(const PointCloud& x, const BoxRegularizer& box) {
  if (box.lower.size() != x.dim() || box.upper.size() != x.dim())
    throw ShapeError("box regularizer has dimension " + std::to_string(box.lower.size()) +
                     " but points have dimension " + std::to_string(x.dim()));
  RegularizerValue out{0.0, PointCloud(x.size(), x.dim())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = x[i];
    auto g = out.gradient[i];
    for (std::size_t c = 0; c < x.dim(); ++c) {
      const double excess = p[c] - std::clamp(p[c], box.lower[c], box.upper[c]);
      out.value += excess * excess;
      g[c] = 2.0 * excess;
    }
  }
  return out;
}

double pers_k(const Diagram& dgm, std::size_t k) {
  std::vector<double> gaps;
  for (const auto& p : dgm.points)
    if (p.finite()) gaps.push_back(std::abs(p.death - p.birth));
  const std::size_t take = std::min(k, gaps.size());
  std::partial_sort(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(take), gaps.end(),
                    std::greater<>());
  return std::accumulate(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(take), 0.0);
}

}  // namespace topoflow
