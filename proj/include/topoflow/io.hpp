#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "topoflow/optimizer.hpp"
#include "topoflow/point_cloud.hpp"
#include "topoflow/rips.hpp"

namespace topoflow {

enum class Shape { circle, sphere, uniform_box };
std::string_view to_string(Shape shape);
Shape parse_shape(std::string_view name);

struct GeneratorSpec {
  Shape shape = Shape::circle;
  std::size_t n = 200;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  std::size_t box_dim = 2;  // uniform_box only; the box is [-1, 1]^box_dim
};

/// Unit circle in R^2, unit sphere in R^3 or the box [-1, 1]^d, sampled
/// uniformly, plus isotropic Gaussian noise.
PointCloud generate(const GeneratorSpec& spec);

/// Shortest decimal text that parses back to the same double; "inf", "-inf", "nan".
std::string format_double(double v);
double parse_double(std::string_view text);

/// CSV, one point per row. A first row that is not entirely numeric is
/// treated as a header and skipped.
PointCloud read_points(std::istream& in);
PointCloud read_points(const std::filesystem::path& path);
void write_points(std::ostream& out, const PointCloud& x);
void write_points(const std::filesystem::path& path, const PointCloud& x);

/// Vertices of an OFF mesh; faces are checked for count and ignored.
PointCloud read_off(std::istream& in);
PointCloud read_off(const std::filesystem::path& path);

/// read_off for *.off, read_points otherwise.
PointCloud read_cloud(const std::filesystem::path& path);

/// CSV `dim,birth,death,birth_i,birth_j,death_i,death_j`; missing edges are -1.
void write_diagram(std::ostream& out, const Diagram& dgm);
void write_diagram(const std::filesystem::path& path, const Diagram& dgm);
Diagram read_diagram(std::istream& in);
Diagram read_diagram(const std::filesystem::path& path);

/// Versioned JSON document.
void write_flow(std::ostream& out, const Flow& flow);
void write_flow(const std::filesystem::path& path, const Flow& flow);
Flow read_flow(std::istream& in);
Flow read_flow(const std::filesystem::path& path);

/// CSV `epoch,train_loss,val_loss,support,kappa,lip_bound,seconds`, one row per
/// epoch, preceded by an epoch-0 row holding the initial validation loss.
void write_trace(std::ostream& out, const RunTrace& trace);
void write_trace(const std::filesystem::path& path, const RunTrace& trace);
RunTrace read_trace(std::istream& in);

/// The trace columns prefixed by a `series` label, for several runs in one file.
void write_bench_header(std::ostream& out);
void write_bench_rows(std::ostream& out, std::string_view series, const RunTrace& trace);

}  // namespace topoflow
