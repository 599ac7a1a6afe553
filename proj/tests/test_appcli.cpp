#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "flow_checks.hpp"
#include "topoflow/cli.hpp"
#include "topoflow/config.hpp"
#include "topoflow/io.hpp"

using namespace topoflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("topoflow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "topoflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("appcli") {
  TEST_CASE("noise-free circle points lie on the unit circle") {
    const auto x = generate({Shape::circle, 4, 0.0, 1, 2});
    REQUIRE(x.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::hypot(x[i][0], x[i][1]) == doctest::Approx(1.0).epsilon(1e-15));
    const auto s = generate({Shape::sphere, 50, 0.0, 1, 2});
    CHECK(s.dim() == 3);
    for (std::size_t i = 0; i < 50; ++i) CHECK(std::sqrt(squared_distance(s[i], std::vector<double>{0, 0, 0})) ==
                                                doctest::Approx(1.0).epsilon(1e-14));
    const auto b = generate({Shape::uniform_box, 100, 0.0, 1, 3});
    CHECK(b.dim() == 3);
    for (double c : b.data()) CHECK(std::abs(c) <= 1.0);
  }

  TEST_CASE("generation is deterministic per seed") {
    CHECK(generate({Shape::circle, 30, 0.1, 5, 2}) == generate({Shape::circle, 30, 0.1, 5, 2}));
    CHECK_FALSE(generate({Shape::circle, 30, 0.1, 5, 2}) == generate({Shape::circle, 30, 0.1, 6, 2}));
  }

  TEST_CASE("noisy circle has exactly one prominent loop") {
    const auto x = generate({Shape::circle, 200, 0.05, 2, 2});
    const auto d = rips_persistence(x, {{1}});
    int prominent = 0;
    for (const auto& p : d.points)
      if (p.persistence() > 0.5) ++prominent;
    CHECK(prominent == 1);
  }

  TEST_CASE("points CSV parsing") {
    std::istringstream plain("0,0\n3,0\n");
    CHECK(read_points(plain) == PointCloud(2, {0, 0, 3, 0}));
    std::istringstream header("x,y\n1.5,-2\n\n4,5e-3\n");
    CHECK(read_points(header) == PointCloud(2, {1.5, -2, 4, 5e-3}));
  }

  TEST_CASE("points CSV errors carry their location") {
    std::istringstream bad("1,2\n3,oops\n");
    try {
      read_points(bad);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("row 2, column 2") != std::string::npos);
    }
    std::istringstream ragged("1,2\n3,4,5\n");
    CHECK_THROWS_AS(read_points(ragged), ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_points(empty), ParseError);
  }

  TEST_CASE("points CSV round trip is bit exact") {
    std::mt19937_64 rng(89);
    auto x = oracle::random_cloud(rng, 1000, 3, 1e3);
    x[0][0] = 1e-310;  // subnormal
    x[1][1] = -0.0;
    x[2][2] = 0.1 + 0.2;
    std::stringstream s;
    write_points(s, x);
    const auto y = read_points(s);
    REQUIRE(y.size() == x.size());
    for (std::size_t k = 0; k < x.data().size(); ++k)
      CHECK(std::bit_cast<std::uint64_t>(x.data()[k]) == std::bit_cast<std::uint64_t>(y.data()[k]));
  }

  TEST_CASE("OFF reader keeps vertices and checks counts") {
    std::istringstream mesh("OFF\n# comment\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    CHECK(read_off(mesh) == PointCloud(3, {0, 0, 0, 1, 0, 0, 0, 1, 0}));
    std::istringstream inline_counts("OFF 2 0 0\n1 2 3\n4 5 6\n");
    CHECK(read_off(inline_counts).size() == 2);
    std::istringstream short_body("OFF\n3 0 0\n0 0 0\n1 0 0\n");
    CHECK_THROWS_AS(read_off(short_body), ParseError);
    std::istringstream long_body("OFF\n2 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    CHECK_THROWS_AS(read_off(long_body), ParseError);
    std::istringstream no_header("PLY\n3 1 0\n");
    CHECK_THROWS_AS(read_off(no_header), ParseError);
  }

  TEST_CASE("diagram CSV round trip") {
    std::mt19937_64 rng(97);
    const auto d = rips_persistence(oracle::random_cloud(rng, 30, 2), {{0, 1}});
    std::stringstream s;
    write_diagram(s, d);
    CHECK(s.str().rfind("dim,birth,death,", 0) == 0);
    CHECK(s.str().find(",inf,") != std::string::npos);
    const auto e = read_diagram(s);
    REQUIRE(e.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(e[i].birth == d[i].birth);
      CHECK(e[i].death == d[i].death);
      CHECK(e[i].birth_edge == d[i].birth_edge);
      CHECK(e[i].death_edge == d[i].death_edge);
    }
  }

  TEST_CASE("flow file round trip is bit exact") {
    std::mt19937_64 rng(101);
    Flow f;
    f.dim = 2;
    for (int k = 0; k < 3; ++k)
      f.steps.push_back({fit(oracle::random_cloud(rng, 4, 2), oracle::random_cloud(rng, 4, 2), 0.1 + k), 0.1 * k + 0.05});
    std::stringstream s;
    write_flow(s, f);
    const auto g = read_flow(s);
    REQUIRE(g.steps.size() == 3);
    CHECK(g.dim == 2);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(g.steps[k].lr == f.steps[k].lr);
      CHECK(g.steps[k].field.sigma == f.steps[k].field.sigma);
      CHECK(g.steps[k].field.kappa == f.steps[k].field.kappa);
      CHECK(g.steps[k].field.centers == f.steps[k].field.centers);
      CHECK(g.steps[k].field.coefficients == f.steps[k].field.coefficients);
    }
    const auto p = oracle::random_cloud(rng, 20, 2);
    CHECK(apply_flow(f, p) == apply_flow(g, p));
    std::istringstream junk("{\"format\": \"topoflow-flow\", \"version\": 9, \"dim\": 2, \"steps\": []}");
    CHECK_THROWS_AS(read_flow(junk), ParseError);
  }

  TEST_CASE("trace CSV round trip") {
    RunTrace t;
    t.initial_val_loss = 1.25;
    t.records.push_back({1, 0.5, std::nan(""), 4, 12.5, std::nan(""), 0.0});
    t.records.push_back({2, 0.25, 0.125, 3, 1.0, 7.0, 0.5});
    std::stringstream s;
    write_trace(s, t);
    CHECK(s.str().rfind("epoch,train_loss,val_loss,support,kappa,lip_bound,seconds\n", 0) == 0);
    const auto u = read_trace(s);
    CHECK(u.initial_val_loss == 1.25);
    REQUIRE(u.records.size() == 2);
    CHECK(std::isnan(u.records[0].val_loss));
    CHECK(u.records[1].lip_bound == 7.0);
    CHECK(u.records[1].support == 3);
  }

  TEST_CASE("config parsing applies defaults and rejects unknown keys") {
    const auto d = parse_config("{}");
    CHECK(d.optim.mode == Mode::diffeo);
    CHECK(d.optim.lr == 0.1);
    CHECK(d.optim.sigma == 0.1);
    const auto c = parse_config(R"({"version": 1, "loss": "augment", "selection": "all", "hom_dims": [1],
      "box_lower": [-1, -1], "box_upper": [1, 1], "box_weight": 0.5, "subsample": 100,
      "generator": "uniform-box", "n": 2000, "seed": 4, "stop": "none"})");
    CHECK(c.loss.family == LossFamily::augment);
    CHECK_FALSE(c.loss.top_k);
    CHECK(c.loss.regularizer->weight == 0.5);
    CHECK(c.optim.subsample == std::optional<std::size_t>(100));
    CHECK(c.generator->n == 2000);
    CHECK(c.generator->seed == 4);
    try {
      parse_config(R"({"learning_rate": 0.1})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(R"({"lr": "fast"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"lr": -1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"version": 2})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"loss": "register"})"), ConfigError);
    CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  }

  TEST_CASE("diagram command on the unit square") {
    TempDir dir;
    write_text(dir / "sq.csv", "0,0\n1,0\n1,1\n0,1\n");
    const auto r = cli({"diagram", "--input", dir / "sq.csv", "--dims", "1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("\n1,1,1.414213562373095") != std::string::npos);
  }

  TEST_CASE("diagram command on two points in H0") {
    TempDir dir;
    write_text(dir / "two.csv", "0,0\n3,0\n");
    const auto r = cli({"diagram", "--input", dir / "two.csv", "--dims", "0", "--output", dir / "d.csv"});
    CHECK(r.code == 0);
    const auto text = read_text(dir / "d.csv");
    CHECK(text.find("\n0,0,3,-1,-1,0,1\n") != std::string::npos);
    CHECK(text.find("\n0,0,inf,") != std::string::npos);
  }

  TEST_CASE("budget overflow exits with code 2 and a hint") {
    TempDir dir;
    write_points(dir / "c.csv", generate({Shape::circle, 60, 0.05, 1, 2}));
    ::setenv("TOPOFLOW_SIMPLEX_BUDGET", "100", 1);
    const auto r = cli({"diagram", "--input", dir / "c.csv", "--dims", "1"});
    ::unsetenv("TOPOFLOW_SIMPLEX_BUDGET");
    CHECK(r.code == 2);
    CHECK(r.err.find("subsample") != std::string::npos);
  }

  TEST_CASE("usage errors exit with code 1") {
    TempDir dir;
    write_text(dir / "sq.csv", "0,0\n1,0\n1,1\n0,1\n");
    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"diagram", "--input", dir / "missing.csv"}).code == 1);
    CHECK(cli({"diagram", "--input", dir / "sq.csv", "--dims", "2", "--max-dim", "2"}).code == 1);
    CHECK(cli({"diagram", "--input", dir / "sq.csv", "--dims", "x"}).code == 1);
    write_text(dir / "bad.json", R"({"epochs": 10, "colour": "red"})");
    const auto r = cli({"optimize", "--config", dir / "bad.json", "--input", dir / "sq.csv"});
    CHECK(r.code == 1);
    CHECK(r.err.find("colour") != std::string::npos);
    CHECK(cli({"optimize", "--config", dir / "missing.json"}).code == 1);
    CHECK(cli({"diagram", "--help"}).code == 0);
  }

  TEST_CASE("optimize writes cloud, flow and trace") {
    TempDir dir;
    write_text(dir / "circle.json", R"({"version": 1, "loss": "simplify-death", "hom_dims": [1],
      "generator": "circle", "n": 200, "noise": 0.05, "seed": 1, "lr": 0.1, "sigma": 0.1,
      "epochs": 250, "stop_eps": 0.001})");
    const auto r = cli({"optimize", "--config", dir / "circle.json", "--output", dir / "out.csv", "--flow",
                        dir / "flow.json", "--trace", dir / "trace.csv", "--no-time"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("stopped: validation loss below threshold") != std::string::npos);
    std::ifstream trace_in(dir / "trace.csv");
    const auto trace = read_trace(trace_in);
    REQUIRE_FALSE(trace.records.empty());
    CHECK(trace.records.back().val_loss < 1e-3);
    CHECK(trace.records.back().val_loss < trace.initial_val_loss);
    const auto flow = read_flow(fs::path(dir / "flow.json"));
    CHECK(flow.steps.size() == trace.records.size());
    CHECK(apply_flow(flow, generate({Shape::circle, 200, 0.05, 1, 2})) == read_points(fs::path(dir / "out.csv")));

    const auto v = cli({"optimize", "--config", dir / "circle.json", "--mode", "vanilla", "--epochs", "60",
                        "--trace", dir / "vtrace.csv", "--output", dir / "vout.csv"});
    CHECK(v.code == 0);
    CHECK(v.out.find("epoch limit") != std::string::npos);
  }

  TEST_CASE("apply and invert round trip through the CLI") {
    TempDir dir;
    write_text(dir / "cfg.json", R"({"generator": "circle", "n": 100, "noise": 0.05, "selection": 1, "lr": 0.02,
      "epochs": 20, "stop": "none"})");
    REQUIRE(cli({"optimize", "--config", dir / "cfg.json", "--output", dir / "o.csv", "--flow", dir / "f.json"}).code == 0);
    REQUIRE(cli({"generate", "--shape", "circle", "--n", "50", "--noise", "0.1", "--seed", "77", "--output",
                 dir / "fresh.csv"}).code == 0);
    REQUIRE(cli({"apply", "--flow", dir / "f.json", "--input", dir / "fresh.csv", "--output", dir / "pushed.csv"}).code == 0);
    const auto inv = cli({"invert", "--flow", dir / "f.json", "--input", dir / "pushed.csv", "--output", dir / "back.csv"});
    REQUIRE(inv.code == 0);
    const auto fresh = read_points(fs::path(dir / "fresh.csv"));
    const auto back = read_points(fs::path(dir / "back.csv"));
    const auto pushed = read_points(fs::path(dir / "pushed.csv"));
    CHECK_FALSE(pushed == fresh);
    REQUIRE(oracle::max_step_contraction(read_flow(fs::path(dir / "f.json")), fresh, 3) < 0.5);
    for (std::size_t k = 0; k < fresh.data().size(); ++k) CHECK(std::abs(fresh.data()[k] - back.data()[k]) <= 1e-6);
  }

  TEST_CASE("empty flow file is the identity and dimensions must match") {
    TempDir dir;
    write_text(dir / "empty.json", R"({"format": "topoflow-flow", "version": 1, "dim": 2, "steps": []})");
    write_text(dir / "p.csv", "0.5,1\n-2,3\n");
    const auto r = cli({"apply", "--flow", dir / "empty.json", "--input", dir / "p.csv"});
    CHECK(r.code == 0);
    CHECK(r.out == "0.5,1\n-2,3\n");
    CHECK(cli({"invert", "--flow", dir / "empty.json", "--input", dir / "p.csv"}).out == "0.5,1\n-2,3\n");

    write_text(dir / "cfg.json", R"({"generator": "circle", "n": 60, "epochs": 2, "stop": "none", "noise": 0.05})");
    REQUIRE(cli({"optimize", "--config", dir / "cfg.json", "--output", dir / "o.csv", "--flow", dir / "f.json"}).code == 0);
    write_text(dir / "p3.csv", "1,2,3\n");
    CHECK(cli({"apply", "--flow", dir / "f.json", "--input", dir / "p3.csv"}).code == 1);
    CHECK(cli({"invert", "--flow", dir / "f.json", "--input", dir / "p3.csv"}).code == 1);
  }

  TEST_CASE("bench writes two labelled series and is deterministic") {
    TempDir dir;
    write_text(dir / "b.json", R"({"loss": "simplify-death", "generator": "circle", "n": 200, "noise": 0.05,
      "seed": 1, "epochs": 250, "stop_eps": 0.001})");
    const auto a = cli({"bench", "--config", dir / "b.json", "--no-time", "--output", dir / "a.csv"});
    const auto b = cli({"bench", "--config", dir / "b.json", "--no-time", "--output", dir / "b.csv"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const auto text = read_text(dir / "a.csv");
    CHECK(text == read_text(dir / "b.csv"));
    CHECK(text.rfind("series,epoch,", 0) == 0);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::size_t last_vanilla = 0, last_diffeo = 0;
    double diffeo_final = INFINITY;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      const auto series = line.substr(0, comma);
      const auto rest = line.substr(comma + 1);
      const std::size_t epoch = std::stoul(rest.substr(0, rest.find(',')));
      if (series == "vanilla") last_vanilla = epoch;
      else if (series == "diffeo") {
        last_diffeo = epoch;
        const auto f1 = rest.find(',');
        const auto f2 = rest.find(',', f1 + 1);
        const auto f3 = rest.find(',', f2 + 1);
        diffeo_final = parse_double(rest.substr(f2 + 1, f3 - f2 - 1));
      } else FAIL("unexpected series label " << series);
    }
    CHECK(diffeo_final < 1e-3);
    CHECK(last_diffeo < last_vanilla);
  }
}
