#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "topoflow/point_cloud.hpp"
#include "topoflow/rips.hpp"

namespace topoflow {

enum class LossFamily {
  simplify,        // sum (b - d)^2
  simplify_death,  // sum d^2
  augment,         // -sum (b - d)^2
  register_target  // squared matching distance to a target diagram
};

std::string_view to_string(LossFamily family);
LossFamily parse_loss_family(std::string_view name);

/// Penalty pulling points back into an axis-aligned box.
struct BoxRegularizer {
  std::vector<double> lower;
  std::vector<double> upper;
  double weight = 1.0;
};

struct LossSpec {
  LossFamily family = LossFamily::simplify;
  std::vector<int> hom_dims{1};
  std::optional<std::size_t> top_k;  // unset: every finite point of hom_dims
  std::optional<Diagram> target;     // register_target only
  std::optional<BoxRegularizer> regularizer;

  /// Family defaults: augmentation acts on the single most persistent point.
  static LossSpec defaults_for(LossFamily family);

  void validate() const;
};

struct CotangentEntry {
  std::size_t point = 0;  // index into the diagram the loss was evaluated on
  double d_birth = 0.0;
  double d_death = 0.0;
};

struct Cotangent {
  std::vector<CotangentEntry> entries;
};

struct LossValue {
  double value = 0.0;
  Cotangent cotangent;
};

/// Indices of the finite points of `hom_dims`, most persistent first
/// (ties: smaller birth, then smaller index), truncated to top_k.
std::vector<std::size_t> select_points(const Diagram& dgm, const LossSpec& spec);

LossValue simplification_loss(const Diagram& dgm, const LossSpec& spec);
LossValue augmentation_loss(const Diagram& dgm, const LossSpec& spec);

/// Largest diagram size accepted on either side of a registration.
inline constexpr std::size_t kMaxRegistrationPoints = 64;

struct Registration {
  LossValue loss;
  /// For each point of `dgm` used by the loss (cotangent order): matched target
  /// index, or none when it goes to the diagonal.
  std::vector<std::optional<std::size_t>> partner;
};

/// Exact optimal partial matching with squared Euclidean ground cost; an
/// unmatched point pays its squared distance (d - b)^2 / 2 to the diagonal.
Registration register_diagram(const Diagram& dgm, const Diagram& target, const LossSpec& spec);
LossValue registration_loss(const Diagram& dgm, const Diagram& target, const LossSpec& spec);

/// Dispatches on spec.family.
LossValue topological_loss(const Diagram& dgm, const LossSpec& spec);

struct RegularizerValue {
  double value = 0.0;
  PointCloud gradient;
};

/// Sum of squared distances to the box (weight not applied).
RegularizerValue box_regularization(const PointCloud& x, const BoxRegularizer& box);

/// Sum of the k largest |d - b| over finite points (all of them when fewer).
double pers_k(const Diagram& dgm, std::size_t k);

}  // namespace topoflow
