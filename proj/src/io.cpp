#include "topoflow/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace topoflow {

namespace {

using json = nlohmann::json;

constexpr int kFlowVersion = 1;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next - pos)));
    if (next == std::string_view::npos) return out;
    pos = next + 1;
  }
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto start = line.find_first_not_of(" \t\r", pos);
    if (start == std::string_view::npos) break;
    const auto end = line.find_first_of(" \t\r", start);
    out.push_back(line.substr(start, end - start));
    pos = end == std::string_view::npos ? line.size() : end;
  }
  return out;
}

bool try_parse_double(std::string_view text, double& value) {
  text = trim(text);
  if (text == "inf" || text == "+inf" || text == "Infinity") {
    value = std::numeric_limits<double>::infinity();
    return true;
  }
  if (text == "-inf" || text == "-Infinity") {
    value = -std::numeric_limits<double>::infinity();
    return true;
  }
  if (text == "nan" || text == "NaN") {
    value = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size() && !text.empty();
}

long long parse_int(std::string_view text, const std::string& where) {
  text = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ParseError(where + ": expected an integer, got '" + std::string(text) + "'");
  return v;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string location(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

}  // namespace

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::circle: return "circle";
    case Shape::sphere: return "sphere";
    case Shape::uniform_box: return "uniform-box";
  }
  return "?";
}

Shape parse_shape(std::string_view name) {
  for (auto s : {Shape::circle, Shape::sphere, Shape::uniform_box})
    if (name == to_string(s)) return s;
  throw ParseError("unknown shape '" + std::string(name) + "' (expected circle, sphere or uniform-box)");
}

PointCloud generate(const GeneratorSpec& spec) {
  if (spec.n < 1) throw Error("generator needs n >= 1");
  if (!(spec.noise_std >= 0.0)) throw Error("noise standard deviation must be non-negative");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = spec.shape == Shape::circle ? 2 : spec.shape == Shape::sphere ? 3 : spec.box_dim;
  if (d < 1) throw Error("box dimension must be at least 1");

  PointCloud x(spec.n, d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    auto p = x[i];
    switch (spec.shape) {
      case Shape::circle: {
        const double t = 2.0 * std::numbers::pi * uniform01(rng);
        p[0] = std::cos(t);
        p[1] = std::sin(t);
        break;
      }
      case Shape::sphere: {
        // Uniform on S^2 by Archimedes' projection: z uniform in [-1, 1].
        const double z = 2.0 * uniform01(rng) - 1.0;
        const double t = 2.0 * std::numbers::pi * uniform01(rng);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        p[0] = r * std::cos(t);
        p[1] = r * std::sin(t);
        p[2] = z;
        break;
      }
      case Shape::uniform_box:
        for (auto& c : p) c = 2.0 * uniform01(rng) - 1.0;
        break;
    }
  }
  if (spec.noise_std > 0.0)
    for (auto& c : x.data()) c += spec.noise_std * normal(rng);
  return x;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  if (!try_parse_double(text, v)) throw ParseError("not a number: '" + std::string(text) + "'");
  return v;
}

PointCloud read_points(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  std::size_t dim = 0;
  std::vector<double> coords;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size() && numeric; ++c) numeric = try_parse_double(fields[c], values[c]);
    if (!numeric) {
      if (dim == 0 && coords.empty() && row == 1) continue;  // header
      for (std::size_t c = 0; c < fields.size(); ++c)
        if (!try_parse_double(fields[c], values[c]))
          throw ParseError(location(row, c + 1) + ": not a number: '" + std::string(fields[c]) + "'");
    }
    if (dim == 0) dim = fields.size();
    if (fields.size() != dim)
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                       " columns, expected " + std::to_string(dim));
    for (std::size_t c = 0; c < dim; ++c)
      if (!std::isfinite(values[c]))
        throw ParseError(location(row, c + 1) + ": coordinate is not finite");
    coords.insert(coords.end(), values.begin(), values.end());
  }
  if (dim == 0) throw ParseError("no points found");
  return PointCloud(dim, std::move(coords));
}

PointCloud read_points(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_points(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_points(std::ostream& out, const PointCloud& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = x[i];
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (c) out << ',';
      out << format_double(p[c]);
    }
    out << '\n';
  }
}

void write_points(const std::filesystem::path& path, const PointCloud& x) {
  auto out = open_out(path);
  write_points(out, x);
}

PointCloud read_off(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  // Next non-empty, non-comment line split into tokens.
  auto next_tokens = [&]() -> std::optional<std::vector<std::string_view>> {
    while (std::getline(in, line)) {
      ++row;
      std::string_view view = line;
      if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
      auto tokens = split_ws(view);
      if (!tokens.empty()) return tokens;
    }
    return std::nullopt;
  };

  auto tokens = next_tokens();
  if (!tokens || (*tokens)[0].substr(0, 3) != "OFF")
    throw ParseError("malformed OFF header: first line must start with 'OFF'");
  // Counts may follow the keyword on the same line.
  std::vector<std::string_view> counts(tokens->begin() + 1, tokens->end());
  if (counts.empty()) {
    tokens = next_tokens();
    if (!tokens) throw ParseError("malformed OFF header: missing vertex/face counts");
    counts = *tokens;
  }
  if (counts.size() < 2) throw ParseError("malformed OFF header: expected vertex and face counts");
  const auto nv = parse_int(counts[0], "OFF header");
  const auto nf = parse_int(counts[1], "OFF header");
  if (nv < 1 || nf < 0) throw ParseError("malformed OFF header: invalid counts");

  PointCloud x(0, 3);
  for (long long v = 0; v < nv; ++v) {
    tokens = next_tokens();
    if (!tokens)
      throw ParseError("OFF header announces " + std::to_string(nv) + " vertices, body has " + std::to_string(v));
    if (tokens->size() < 3) throw ParseError("line " + std::to_string(row) + ": vertex needs 3 coordinates");
    std::array<double, 3> p{};
    for (std::size_t c = 0; c < 3; ++c)
      if (!try_parse_double((*tokens)[c], p[c]) || !std::isfinite(p[c]))
        throw ParseError(location(row, c + 1) + ": invalid vertex coordinate");
    x.push_back(p);
  }
  for (long long f = 0; f < nf; ++f) {
    tokens = next_tokens();
    if (!tokens)
      throw ParseError("OFF header announces " + std::to_string(nf) + " faces, body has " + std::to_string(f));
    long long k = 0;
    const auto t = (*tokens)[0];
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), k);
    if (ec != std::errc{} || ptr != t.data() + t.size() || k < 0 || tokens->size() < static_cast<std::size_t>(k) + 1)
      throw ParseError("line " + std::to_string(row) +
                       ": expected a face; the body holds more vertices than the header announces");
  }
  if (next_tokens()) throw ParseError("line " + std::to_string(row) + ": trailing data after the last face");
  return x;
}

PointCloud read_off(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_off(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

PointCloud read_cloud(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".off" ? read_off(path) : read_points(path);
}

void write_diagram(std::ostream& out, const Diagram& dgm) {
  out << "dim,birth,death,birth_i,birth_j,death_i,death_j\n";
  auto edge = [&](const std::optional<Edge>& e) {
    if (e)
      out << e->first << ',' << e->second;
    else
      out << "-1,-1";
  };
  for (const auto& p : dgm.points) {
    out << p.dim << ',' << format_double(p.birth) << ',' << format_double(p.death) << ',';
    edge(p.birth_edge);
    out << ',';
    edge(p.death_edge);
    out << '\n';
  }
}

void write_diagram(const std::filesystem::path& path, const Diagram& dgm) {
  auto out = open_out(path);
  write_diagram(out, dgm);
}

Diagram read_diagram(std::istream& in) {
  Diagram dgm;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (row == 1 && f[0] == "dim") continue;
    if (f.size() != 3 && f.size() != 7)
      throw ParseError("diagram row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                       " columns, expected 3 or 7");
    const std::string where = "diagram row " + std::to_string(row);
    PersistencePoint p;
    p.dim = static_cast<int>(parse_int(f[0], where));
    if (!try_parse_double(f[1], p.birth) || !try_parse_double(f[2], p.death))
      throw ParseError(where + ": invalid birth or death");
    if (f.size() == 7) {
      auto edge = [&](std::string_view a, std::string_view b) -> std::optional<Edge> {
        const auto i = parse_int(a, where), j = parse_int(b, where);
        if (i < 0 || j < 0) return std::nullopt;
        return Edge{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
      };
      p.birth_edge = edge(f[3], f[4]);
      p.death_edge = edge(f[5], f[6]);
    }
    dgm.points.push_back(p);
  }
  return dgm;
}

Diagram read_diagram(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_diagram(in);
}

void write_flow(std::ostream& out, const Flow& flow) {
  auto rows = [](const PointCloud& x) {
    json a = json::array();
    for (std::size_t i = 0; i < x.size(); ++i) a.push_back(std::vector<double>(x[i].begin(), x[i].end()));
    return a;
  };
  json steps = json::array();
  for (const auto& s : flow.steps) {
    steps.push_back({{"lr", s.lr},
                     {"sigma", s.field.sigma},
                     {"jitter", s.field.jitter_used},
                     {"kappa", std::isfinite(s.field.kappa) ? json(s.field.kappa) : json(nullptr)},
                     {"centers", rows(s.field.centers)},
                     {"coefficients", rows(s.field.coefficients)}});
  }
  const json doc = {{"format", "topoflow-flow"}, {"version", kFlowVersion}, {"dim", flow.dim}, {"steps", steps}};
  out << doc.dump(1) << '\n';
}

void write_flow(const std::filesystem::path& path, const Flow& flow) {
  auto out = open_out(path);
  write_flow(out, flow);
}

Flow read_flow(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("flow file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "topoflow-flow") throw ParseError("not a flow file");
    const int version = doc.at("version").get<int>();
    if (version != kFlowVersion) throw ParseError("unsupported flow file version " + std::to_string(version));
    Flow flow;
    flow.dim = doc.at("dim").get<std::size_t>();
    auto cloud = [&](const json& a, std::size_t step) {
      PointCloud x(0, flow.dim);
      for (const auto& r : a) {
        const auto v = r.get<std::vector<double>>();
        if (v.size() != flow.dim)
          throw ParseError("flow step " + std::to_string(step) + " has a row of size " + std::to_string(v.size()) +
                           ", expected " + std::to_string(flow.dim));
        x.push_back(v);
      }
      return x;
    };
    for (const auto& s : doc.at("steps")) {
      const std::size_t k = flow.steps.size();
      FlowStep step;
      step.lr = s.at("lr").get<double>();
      step.field.sigma = s.at("sigma").get<double>();
      step.field.jitter_used = s.value("jitter", 0.0);
      const auto& kappa = s.at("kappa");
      step.field.kappa = kappa.is_null() ? std::numeric_limits<double>::infinity() : kappa.get<double>();
      step.field.centers = cloud(s.at("centers"), k);
      step.field.coefficients = cloud(s.at("coefficients"), k);
      if (step.field.centers.size() != step.field.coefficients.size() || step.field.centers.size() == 0)
        throw ParseError("flow step " + std::to_string(k) + ": centers and coefficients differ in count");
      flow.steps.push_back(std::move(step));
    }
    return flow;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed flow file: ") + e.what());
  }
}

Flow read_flow(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_flow(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace {

void trace_row(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ',' << r.support
      << ',' << format_double(r.kappa) << ',' << format_double(r.lip_bound) << ',' << format_double(r.seconds)
      << '\n';
}

EpochRecord initial_row(const RunTrace& trace) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {0, nan, trace.initial_val_loss, 0, nan, nan, 0.0};
}

constexpr std::string_view kTraceHeader = "epoch,train_loss,val_loss,support,kappa,lip_bound,seconds";

}  // namespace

void write_trace(std::ostream& out, const RunTrace& trace) {
  out << kTraceHeader << '\n';
  trace_row(out, initial_row(trace));
  for (const auto& r : trace.records) trace_row(out, r);
}

void write_trace(const std::filesystem::path& path, const RunTrace& trace) {
  auto out = open_out(path);
  write_trace(out, trace);
}

RunTrace read_trace(std::istream& in) {
  RunTrace trace;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    if (row == 1) {
      if (trim(line) != kTraceHeader) throw ParseError("trace header must be '" + std::string(kTraceHeader) + "'");
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 7) throw ParseError("trace row " + std::to_string(row) + " must have 7 columns");
    const std::string where = "trace row " + std::to_string(row);
    EpochRecord r;
    r.epoch = static_cast<std::size_t>(parse_int(f[0], where));
    r.support = static_cast<std::size_t>(parse_int(f[3], where));
    if (!try_parse_double(f[1], r.train_loss) || !try_parse_double(f[2], r.val_loss) ||
        !try_parse_double(f[4], r.kappa) || !try_parse_double(f[5], r.lip_bound) ||
        !try_parse_double(f[6], r.seconds))
      throw ParseError(where + ": invalid number");
    if (r.epoch == 0)
      trace.initial_val_loss = r.val_loss;
    else
      trace.records.push_back(r);
  }
  return trace;
}

void write_bench_header(std::ostream& out) { out << "series," << kTraceHeader << '\n'; }

void write_bench_rows(std::ostream& out, std::string_view series, const RunTrace& trace) {
  out << series << ',';
  trace_row(out, initial_row(trace));
  for (const auto& r : trace.records) {
    out << series << ',';
    trace_row(out, r);
  }
}

}  // namespace topoflow
