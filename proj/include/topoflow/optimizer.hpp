#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "topoflow/diffeo.hpp"
#include "topoflow/gradient.hpp"
#include "topoflow/losses.hpp"
#include "topoflow/point_cloud.hpp"
#include "topoflow/rips.hpp"

namespace topoflow {

/// The map X -> loss(Dgm(X)) (+ box penalty) together with its vanilla gradient.
class LossPipeline {
 public:
  struct Evaluation {
    Diagram diagram;
    LossValue loss;                    // topological part
    double value = 0.0;                // loss.value + weight * box penalty
    SparseGradient gradient;           // topological part only
    std::vector<std::size_t> selected; // diagram points the loss acts on
  };

  /// `rips.dims` is replaced by spec.hom_dims.
  explicit LossPipeline(LossSpec spec, RipsOptions rips = {});

  Evaluation evaluate(const PointCloud& x) const;
  /// Value only; skips the pullback.
  double loss(const PointCloud& x) const;

  const LossSpec& spec() const { return spec_; }
  const RipsOptions& rips() const { return rips_; }

 private:
  double penalty(const PointCloud& x) const;

  LossSpec spec_;
  RipsOptions rips_;
};

enum class Mode { vanilla, diffeo };
std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

enum class StopRule {
  none,       // run every epoch
  threshold,  // validation loss < threshold
  ema,        // exponential moving average of training losses < threshold
  increase    // training loss rose by at least `increase` since the previous epoch
};
std::string_view to_string(StopRule rule);
StopRule parse_stop_rule(std::string_view name);

struct StopCriterion {
  StopRule rule = StopRule::threshold;
  double threshold = 1e-10;
  double ema_decay = 0.9;
  double increase = 3.0;
};

struct OptimConfig {
  Mode mode = Mode::diffeo;
  double lr = 0.1;
  double sigma = 0.1;
  std::optional<std::size_t> subsample;  // unset: full batch
  std::size_t epochs = 250;
  StopCriterion stop;
  std::optional<std::size_t> val_reps;  // unset: ceil(n / s)
  std::size_t val_every = 1;            // 0: never validate
  std::uint64_t seed = 0;
  bool record_time = true;

  void validate(std::size_t n) const;
};

struct FlowStep {
  Interpolant field;
  double lr = 0.0;
};

/// Discrete flow x -> x - lr_T v_T( ... x - lr_1 v_1(x) ... ).
struct Flow {
  std::size_t dim = 0;
  std::vector<FlowStep> steps;
};

/// points <- points - lr * v(points), in place.
void advance(const FlowStep& step, PointCloud& points);

PointCloud apply_flow(const Flow& flow, const PointCloud& points);

struct FlowInversion {
  PointCloud points;
  /// Steps (0-based) where some point's fixed-point solve failed and the
  /// explicit estimate p + lr v(p) was used instead.
  std::vector<std::size_t> unconverged_steps;
};

/// Undoes the steps last to first; each step solves q = p + lr v(q) by
/// fixed-point iteration started at p.
FlowInversion invert_flow(const Flow& flow, const PointCloud& points, std::size_t max_iterations = 50,
                          double tolerance = 1e-10);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when not computed this epoch
  std::size_t support = 0;
  double kappa = 0.0;      // NaN without an interpolant
  double lip_bound = 0.0;  // NaN when the bound does not apply
  double seconds = 0.0;    // since the start of the run
};

struct RunTrace {
  double initial_val_loss = 0.0;  // NaN when not computed
  std::vector<EpochRecord> records;
};

struct RunResult {
  PointCloud points;
  Flow flow;
  RunTrace trace;
  std::string stop_reason;
  bool stopped = false;  // a stopping rule fired before the epoch limit
};

/// Uniform sample of s distinct indices out of n, sorted. Consumes exactly s
/// draws of the generator.
std::vector<std::size_t> sample_indices(std::mt19937_64& rng, std::size_t n, std::size_t s);

/// Mean loss over `reps` independent uniform s-subsamples; the exact loss when s >= n.
double validation_loss(const PointCloud& x, const LossPipeline& pipeline, std::size_t s,
                       std::size_t reps, std::mt19937_64& rng);

/// X - lr * (grad L(X) + box penalty gradient); only the support moves when no
/// penalty is configured.
PointCloud vanilla_step(const PointCloud& x, const LossPipeline& pipeline, double lr);

struct DiffeoStep {
  PointCloud points;
  std::optional<Interpolant> field;  // none when the gradient vanished
};

/// X - lr * v(X) where v interpolates the vanilla gradient on its support.
DiffeoStep diffeo_step(const PointCloud& x, const LossPipeline& pipeline, double lr, double sigma);

/// Gradient descent with optional subsampling. Draw order per epoch: the
/// training subsample, then the validation subsamples.
RunResult run(const PointCloud& x0, const LossPipeline& pipeline, const OptimConfig& cfg);

}  // namespace topoflow
