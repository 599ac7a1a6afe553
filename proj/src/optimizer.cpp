#include "topoflow/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

namespace topoflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void subtract_scaled(PointCloud& x, const PointCloud& g, double scale) {
  auto& a = x.data();
  const auto& b = g.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= scale * b[i];
}

void apply_penalty(PointCloud& next, const PointCloud& x, const LossSpec& spec, double lr) {
  if (!spec.regularizer) return;
  const auto reg = box_regularization(x, *spec.regularizer);
  subtract_scaled(next, reg.gradient, lr * spec.regularizer->weight);
}

// Uniform integer in [0, bound) by rejection, so results do not depend on the
// standard library's distribution implementation.
std::size_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= limit) return static_cast<std::size_t>(r % bound);
  }
}

}  // namespace

LossPipeline::LossPipeline(LossSpec spec, RipsOptions rips) : spec_(std::move(spec)), rips_(std::move(rips)) {
  spec_.validate();
  rips_.dims = spec_.hom_dims;
}

double LossPipeline::penalty(const PointCloud& x) const {
  if (!spec_.regularizer) return 0.0;
  return spec_.regularizer->weight * box_regularization(x, *spec_.regularizer).value;
}

LossPipeline::Evaluation LossPipeline::evaluate(const PointCloud& x) const {
  Evaluation out;
  out.diagram = rips_persistence(x, rips_);
  out.loss = topological_loss(out.diagram, spec_);
  out.value = out.loss.value + penalty(x);
  out.gradient = pullback(out.diagram, out.loss.cotangent, x);
  if (spec_.family != LossFamily::register_target) out.selected = select_points(out.diagram, spec_);
  return out;
}

double LossPipeline::loss(const PointCloud& x) const {
  const Diagram dgm = rips_persistence(x, rips_);
  return topological_loss(dgm, spec_).value + penalty(x);
}

std::string_view to_string(Mode mode) { return mode == Mode::vanilla ? "vanilla" : "diffeo"; }

Mode parse_mode(std::string_view name) {
  if (name == "vanilla") return Mode::vanilla;
  if (name == "diffeo") return Mode::diffeo;
  throw ParseError("unknown mode '" + std::string(name) + "' (expected vanilla or diffeo)");
}

std::string_view to_string(StopRule rule) {
  switch (rule) {
    case StopRule::none: return "none";
    case StopRule::threshold: return "threshold";
    case StopRule::ema: return "ema";
    case StopRule::increase: return "increase";
  }
  return "?";
}

StopRule parse_stop_rule(std::string_view name) {
  for (auto r : {StopRule::none, StopRule::threshold, StopRule::ema, StopRule::increase})
    if (name == to_string(r)) return r;
  throw ParseError("unknown stop rule '" + std::string(name) + "' (expected none, threshold, ema or increase)");
}

void OptimConfig::validate(std::size_t n) const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("learning rate must be positive and finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("sigma must be positive and finite");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (subsample && (*subsample < 1 || *subsample > n))
    throw Error("subsample size " + std::to_string(*subsample) + " outside [1, " + std::to_string(n) + "]");
  if (val_reps && *val_reps < 1) throw Error("validation repetitions must be at least 1");
  if (stop.rule == StopRule::ema && !(stop.ema_decay >= 0.0 && stop.ema_decay < 1.0))
    throw Error("EMA decay must lie in [0, 1)");
}

void advance(const FlowStep& step, PointCloud& points) {
  if (points.dim() != step.field.dim())
    throw ShapeError("flow step is " + std::to_string(step.field.dim()) + "-d, points are " +
                     std::to_string(points.dim()) + "-d");
  std::vector<double> v(points.dim());
  for (std::size_t j = 0; j < points.size(); ++j) {
    step.field.evaluate_at(points[j], v);
    auto p = points[j];
    for (std::size_t c = 0; c < v.size(); ++c) p[c] -= step.lr * v[c];
  }
}

PointCloud apply_flow(const Flow& flow, const PointCloud& points) {
  if (!flow.steps.empty() && points.dim() != flow.dim)
    throw ShapeError("flow is " + std::to_string(flow.dim) + "-d, points are " + std::to_string(points.dim()) +
                     "-d");
  PointCloud out = points;
  for (const auto& step : flow.steps) advance(step, out);
  return out;
}

FlowInversion invert_flow(const Flow& flow, const PointCloud& points, std::size_t max_iterations,
                          double tolerance) {
  if (!flow.steps.empty() && points.dim() != flow.dim)
    throw ShapeError("flow is " + std::to_string(flow.dim) + "-d, points are " + std::to_string(points.dim()) +
                     "-d");
  FlowInversion out{points, {}};
  const std::size_t d = points.dim();
  std::vector<double> q(d), next(d), v(d);
  for (std::size_t k = flow.steps.size(); k-- > 0;) {
    const auto& step = flow.steps[k];
    bool failed = false;
    for (std::size_t j = 0; j < out.points.size(); ++j) {
      auto p = out.points[j];
      std::copy(p.begin(), p.end(), q.begin());
      bool converged = false;
      for (std::size_t it = 0; it < max_iterations && !converged; ++it) {
        step.field.evaluate_at(q, v);
        double change = 0.0, scale = 1.0;
        for (std::size_t c = 0; c < d; ++c) {
          next[c] = p[c] + step.lr * v[c];
          change = std::max(change, std::abs(next[c] - q[c]));
          scale = std::max(scale, std::abs(next[c]));
        }
        q.swap(next);
        converged = change <= tolerance * scale;
      }
      if (!converged) {
        failed = true;
        step.field.evaluate_at(p, v);
        for (std::size_t c = 0; c < d; ++c) q[c] = p[c] + step.lr * v[c];
      }
      std::copy(q.begin(), q.end(), p.begin());
    }
    if (failed) out.unconverged_steps.push_back(k);
  }
  std::reverse(out.unconverged_steps.begin(), out.unconverged_steps.end());
  return out;
}

std::vector<std::size_t> sample_indices(std::mt19937_64& rng, std::size_t n, std::size_t s) {
  if (s > n) throw Error("cannot sample " + std::to_string(s) + " of " + std::to_string(n) + " points");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < s; ++i) std::swap(pool[i], pool[i + uniform_below(rng, n - i)]);
  pool.resize(s);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double validation_loss(const PointCloud& x, const LossPipeline& pipeline, std::size_t s, std::size_t reps,
                       std::mt19937_64& rng) {
  if (reps < 1) throw Error("validation repetitions must be at least 1");
  if (s >= x.size()) return pipeline.loss(x);
  double sum = 0.0;
  for (std::size_t r = 0; r < reps; ++r) sum += pipeline.loss(x.select(sample_indices(rng, x.size(), s)));
  return sum / static_cast<double>(reps);
}

PointCloud vanilla_step(const PointCloud& x, const LossPipeline& pipeline, double lr) {
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  const auto eval = pipeline.evaluate(x);
  PointCloud next = x;
  for (std::size_t k = 0; k < eval.gradient.support.size(); ++k) {
    auto p = next[eval.gradient.support[k]];
    const auto g = eval.gradient.vector(k);
    for (std::size_t c = 0; c < p.size(); ++c) p[c] -= lr * g[c];
  }
  apply_penalty(next, x, pipeline.spec(), lr);
  return next;
}

DiffeoStep diffeo_step(const PointCloud& x, const LossPipeline& pipeline, double lr, double sigma) {
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  const auto eval = pipeline.evaluate(x);
  DiffeoStep out{x, std::nullopt};
  const auto constraints = consolidate(eval.gradient, x);
  if (constraints.size() > 0) {
    FlowStep step{fit(constraints, sigma), lr};
    advance(step, out.points);
    out.field = std::move(step.field);
  }
  apply_penalty(out.points, x, pipeline.spec(), lr);
  return out;
}

RunResult run(const PointCloud& x0, const LossPipeline& pipeline, const OptimConfig& cfg) {
  x0.validate();
  const std::size_t n = x0.size();
  cfg.validate(n);
  const std::size_t s = cfg.subsample.value_or(n);
  const bool full_batch = s >= n;
  const std::size_t reps = cfg.val_reps.value_or((n + s - 1) / s);
  const auto& spec = pipeline.spec();
  const bool has_bound = cfg.mode == Mode::diffeo &&
                         (spec.family == LossFamily::simplify || spec.family == LossFamily::augment);

  std::mt19937_64 rng(cfg.seed);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    if (!cfg.record_time) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  RunResult out;
  out.points = x0;
  out.flow.dim = x0.dim();
  out.trace.initial_val_loss = kNaN;

  const bool validating = cfg.val_every > 0 || cfg.stop.rule == StopRule::threshold;
  if (validating) {
    out.trace.initial_val_loss = validation_loss(out.points, pipeline, s, reps, rng);
    if (cfg.stop.rule == StopRule::threshold && out.trace.initial_val_loss < cfg.stop.threshold) {
      out.stopped = true;
      out.stop_reason = "validation loss below threshold before the first epoch";
      return out;
    }
  }

  double ema = 0.0;
  double previous_train = kNaN;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    PointCloud& x = out.points;
    std::vector<std::size_t> idx;
    if (!full_batch) idx = sample_indices(rng, n, s);
    const PointCloud batch = full_batch ? x : x.select(idx);

    LossPipeline::Evaluation eval;
    try {
      eval = pipeline.evaluate(batch);
    } catch (const CapacityError& e) {
      throw CapacityError("epoch " + std::to_string(epoch) + ": " + e.what());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = eval.value;
    rec.val_loss = kNaN;
    rec.support = eval.gradient.support.size();
    rec.kappa = kNaN;
    rec.lip_bound = kNaN;

    PointCloud next = x;
    if (cfg.mode == Mode::vanilla) {
      for (std::size_t k = 0; k < eval.gradient.support.size(); ++k) {
        const std::size_t row = full_batch ? eval.gradient.support[k] : idx[eval.gradient.support[k]];
        auto p = next[row];
        const auto g = eval.gradient.vector(k);
        for (std::size_t c = 0; c < p.size(); ++c) p[c] -= cfg.lr * g[c];
      }
    } else {
      const auto constraints = consolidate(eval.gradient, batch);
      if (constraints.size() > 0) {
        FlowStep step;
        try {
          step = FlowStep{fit(constraints, cfg.sigma), cfg.lr};
        } catch (const SingularSystemError& e) {
          throw SingularSystemError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        advance(step, next);
        rec.kappa = step.field.kappa;
        if (has_bound) {
          const Diagram finite = eval.diagram.finite_in(spec.hom_dims);
          rec.lip_bound = lipschitz_bound(step.field.kappa, cfg.sigma, x.dim(),
                                          pers_k(finite, eval.selected.size()));
        }
        out.flow.steps.push_back(std::move(step));
      }
    }
    apply_penalty(next, x, spec, cfg.lr);
    x = std::move(next);

    if (cfg.val_every > 0 && epoch % cfg.val_every == 0)
      rec.val_loss = validation_loss(x, pipeline, s, reps, rng);
    rec.seconds = elapsed();
    out.trace.records.push_back(rec);

    switch (cfg.stop.rule) {
      case StopRule::none:
        break;
      case StopRule::threshold:
        if (!std::isnan(rec.val_loss) && rec.val_loss < cfg.stop.threshold) {
          out.stopped = true;
          out.stop_reason = "validation loss below threshold at epoch " + std::to_string(epoch);
        }
        break;
      case StopRule::ema:
        ema = epoch == 1 ? rec.train_loss : cfg.stop.ema_decay * ema + (1.0 - cfg.stop.ema_decay) * rec.train_loss;
        if (ema < cfg.stop.threshold) {
          out.stopped = true;
          out.stop_reason = "moving average of the training loss below threshold at epoch " + std::to_string(epoch);
        }
        break;
      case StopRule::increase:
        if (epoch > 1 && rec.train_loss - previous_train >= cfg.stop.increase) {
          out.stopped = true;
          out.stop_reason = "training loss increased by at least " + std::to_string(cfg.stop.increase) +
                            " at epoch " + std::to_string(epoch);
        }
        break;
    }
    previous_train = rec.train_loss;
    if (out.stopped) return out;

    if (full_batch && eval.gradient.empty() && !spec.regularizer) {
      out.stopped = true;
      out.stop_reason = "gradient vanished at epoch " + std::to_string(epoch);
      return out;
    }
  }
  out.stop_reason = "epoch limit " + std::to_string(cfg.epochs) + " reached";
  return out;
}

}  // namespace topoflow
