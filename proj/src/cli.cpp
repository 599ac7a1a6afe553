#include "topoflow/cli.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topoflow/config.hpp"
#include "topoflow/diffeo.hpp"
#include "topoflow/gradient.hpp"
#include "topoflow/io.hpp"
#include "topoflow/optimizer.hpp"
#include "topoflow/rips.hpp"

namespace topoflow {

namespace {

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int d = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      dims.push_back(d);
    } catch (const std::logic_error&) {
      throw ConfigError("--dims expects a comma-separated list of integers, got '" + text + "'");
    }
  }
  if (dims.empty()) throw ConfigError("--dims is empty");
  return dims;
}

void check_max_dim(const std::vector<int>& dims, std::optional<int> max_dim) {
  if (!max_dim) return;
  if (*max_dim < 1 || *max_dim > 3) throw ConfigError("--max-dim must lie in [1, 3]");
  for (int p : dims)
    if (p < 0 || p >= *max_dim)
      throw ConfigError("homology dimension " + std::to_string(p) + " needs --max-dim of at least " +
                        std::to_string(p + 1));
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error("cannot open '" + path + "' for writing");
  write(file);
}

PointCloud read_input(const std::string& path) {
  if (path.empty()) throw ConfigError("no input given (use --input)");
  return read_cloud(path);
}

struct RunFlags {
  std::string config;
  std::string input, output, flow, trace;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> lr, sigma, stop_eps, max_radius;
  std::optional<std::size_t> subsample, epochs, val_reps;
  std::optional<std::string> dims;
  std::optional<int> max_dim;
  bool no_time = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config, "JSON run configuration");
    cmd.add_option("--input", input, "input cloud (CSV or OFF)");
    cmd.add_option("--output", output, "output path (default: standard output)");
    cmd.add_option("--seed", seed, "random seed");
    cmd.add_option("--mode", mode, "vanilla or diffeo")->check(CLI::IsMember({"vanilla", "diffeo"}));
    cmd.add_option("--lr", lr, "step size");
    cmd.add_option("--sigma", sigma, "kernel bandwidth");
    cmd.add_option("--subsample", subsample, "points per training subsample");
    cmd.add_option("--epochs", epochs, "maximum number of epochs");
    cmd.add_option("--stop-eps", stop_eps, "stopping threshold");
    cmd.add_option("--val-reps", val_reps, "validation subsamples per estimate");
    cmd.add_option("--dims", dims, "homology dimensions, e.g. 1 or 0,1");
    cmd.add_option("--max-dim", max_dim, "largest simplex dimension");
    cmd.add_option("--max-radius", max_radius, "Rips truncation radius");
    cmd.add_flag("--no-time", no_time, "write 0 in the seconds column");
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? default_config() : load_config(config);
    if (!input.empty()) cfg.input = input;
    if (!output.empty()) cfg.output = output;
    if (!flow.empty()) cfg.flow = flow;
    if (!trace.empty()) cfg.trace = trace;
    auto& o = cfg.optim;
    if (seed) {
      o.seed = *seed;
      if (cfg.generator && !cfg.generator_seed_pinned) cfg.generator->seed = *seed;
    }
    if (mode) o.mode = parse_mode(*mode);
    if (lr) o.lr = *lr;
    if (sigma) o.sigma = *sigma;
    if (subsample) o.subsample = *subsample;
    if (epochs) o.epochs = *epochs;
    if (stop_eps) o.stop.threshold = *stop_eps;
    if (val_reps) o.val_reps = *val_reps;
    if (no_time) o.record_time = false;
    if (dims) cfg.loss.hom_dims = parse_dims(*dims);
    check_max_dim(cfg.loss.hom_dims, max_dim);
    if (max_radius) cfg.rips.max_radius = *max_radius;
    cfg.loss.validate();
    return cfg;
  }

  PointCloud initial_cloud(const RunConfig& cfg) const {
    if (!cfg.input.empty()) return read_cloud(cfg.input);
    if (cfg.generator) return generate(*cfg.generator);
    throw ConfigError("no input: pass --input or configure a generator");
  }
};

int cmd_generate(const std::string& shape, std::size_t n, double noise, std::size_t dim, std::uint64_t seed,
                 const std::string& output, std::ostream& out) {
  GeneratorSpec spec{parse_shape(shape), n, noise, seed, dim};
  const auto x = generate(spec);
  emit(output, out, [&](std::ostream& s) { write_points(s, x); });
  return kExitOk;
}

int cmd_diagram(const std::string& input, const std::string& output, const std::optional<std::string>& dims_text,
                std::optional<int> max_dim, std::optional<double> radius, std::ostream& out) {
  std::vector<int> dims;
  if (dims_text) {
    dims = parse_dims(*dims_text);
  } else {
    for (int p = 0; p < max_dim.value_or(2); ++p) dims.push_back(p);
  }
  check_max_dim(dims, max_dim);
  RipsOptions opts;
  opts.dims = dims;
  opts.max_radius = radius;
  opts.simplex_budget = simplex_budget_from_env();
  const auto x = read_input(input);
  const auto dgm = rips_persistence(x, opts);
  emit(output, out, [&](std::ostream& s) { write_diagram(s, dgm); });
  return kExitOk;
}

int cmd_optimize(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = flags.resolve();
  const PointCloud x0 = flags.initial_cloud(cfg);
  const LossPipeline pipeline(cfg.loss, cfg.rips);
  const auto result = run(x0, pipeline, cfg.optim);
  emit(cfg.output, out, [&](std::ostream& s) { write_points(s, result.points); });
  if (!cfg.flow.empty()) write_flow(cfg.flow, result.flow);
  if (!cfg.trace.empty()) write_trace(cfg.trace, result.trace);
  (cfg.output.empty() || cfg.output == "-" ? err : out) << "stopped: " << result.stop_reason << '\n';
  return kExitOk;
}

int cmd_bench(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = flags.resolve();
  const PointCloud x0 = flags.initial_cloud(cfg);
  const LossPipeline pipeline(cfg.loss, cfg.rips);
  std::ostringstream csv;
  write_bench_header(csv);
  for (Mode mode : {Mode::vanilla, Mode::diffeo}) {
    OptimConfig oc = cfg.optim;
    oc.mode = mode;
    const auto result = run(x0, pipeline, oc);
    write_bench_rows(csv, to_string(mode), result.trace);
    err << to_string(mode) << ": " << result.stop_reason << '\n';
  }
  emit(cfg.output, out, [&](std::ostream& s) { s << csv.str(); });
  return kExitOk;
}

int cmd_flow(bool inverse, const std::string& flow_path, const std::string& input, const std::string& output,
             std::ostream& out, std::ostream& err) {
  if (flow_path.empty()) throw ConfigError("no flow given (use --flow)");
  const Flow flow = read_flow(flow_path);
  const PointCloud points = read_input(input);
  if (!flow.steps.empty() && points.dim() != flow.dim)
    throw ShapeError("flow is " + std::to_string(flow.dim) + "-dimensional but the points are " +
                     std::to_string(points.dim()) + "-dimensional");
  PointCloud result;
  if (inverse) {
    auto inv = invert_flow(flow, points);
    for (auto k : inv.unconverged_steps)
      err << "warning: fixed-point inversion did not converge at step " << k
          << "; used the explicit estimate (step is not a contraction)\n";
    result = std::move(inv.points);
  } else {
    result = apply_flow(flow, points);
  }
  emit(output, out, [&](std::ostream& s) { write_points(s, result); });
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology optimization of point clouds with diffeomorphic gradient flows", "topoflow"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "sample a synthetic point cloud");
  std::string shape = "circle", gen_output;
  std::size_t gen_n = 200, gen_dim = 2;
  double gen_noise = 0.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--shape", shape, "circle, sphere or uniform-box")
      ->check(CLI::IsMember({"circle", "sphere", "uniform-box"}));
  gen->add_option("--n", gen_n, "number of points");
  gen->add_option("--noise", gen_noise, "Gaussian noise standard deviation");
  gen->add_option("--dim", gen_dim, "ambient dimension for uniform-box");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--output", gen_output, "output CSV (default: standard output)");

  auto* dia = app.add_subcommand("diagram", "persistence diagram of a Rips filtration");
  std::string dia_input, dia_output;
  std::optional<std::string> dia_dims;
  std::optional<int> dia_max_dim;
  std::optional<double> dia_radius;
  dia->add_option("--input", dia_input, "input cloud (CSV or OFF)")->required();
  dia->add_option("--output", dia_output, "output CSV (default: standard output)");
  dia->add_option("--dims", dia_dims, "homology dimensions, e.g. 0,1");
  dia->add_option("--max-dim", dia_max_dim, "largest simplex dimension");
  dia->add_option("--max-radius", dia_radius, "Rips truncation radius");

  RunFlags opt_flags, bench_flags;
  auto* opt = app.add_subcommand("optimize", "run gradient descent on a topological loss");
  opt_flags.attach(*opt);
  opt->add_option("--flow", opt_flags.flow, "write the recorded flow here");
  opt->add_option("--trace", opt_flags.trace, "write the per-epoch trace CSV here");
  auto* bench = app.add_subcommand("bench", "run vanilla and diffeo modes and write both traces");
  bench_flags.attach(*bench);

  std::string flow_path, flow_input, flow_output;
  auto* apply = app.add_subcommand("apply", "push points through a recorded flow");
  auto* invert = app.add_subcommand("invert", "pull points back through a recorded flow");
  for (auto* cmd : {apply, invert}) {
    cmd->add_option("--flow", flow_path, "flow file")->required();
    cmd->add_option("--input", flow_input, "input points CSV")->required();
    cmd->add_option("--output", flow_output, "output CSV (default: standard output)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(shape, gen_n, gen_noise, gen_dim, gen_seed, gen_output, out);
    if (dia->parsed()) return cmd_diagram(dia_input, dia_output, dia_dims, dia_max_dim, dia_radius, out);
    if (opt->parsed()) return cmd_optimize(opt_flags, out, err);
    if (bench->parsed()) return cmd_bench(bench_flags, out, err);
    if (apply->parsed()) return cmd_flow(false, flow_path, flow_input, flow_output, out, err);
    if (invert->parsed()) return cmd_flow(true, flow_path, flow_input, flow_output, out, err);
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << "\nhint: lower --subsample, set --max-radius or raise TOPOFLOW_SIMPLEX_BUDGET\n";
    return kExitBudget;
  } catch (const SingularSystemError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DegenerateEdgeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace topoflow
