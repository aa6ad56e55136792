#include <doctest.h>

#include "test_support.hpp"
#include "tvmcf/io.hpp"
#include "tvmcf/norms.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace tvmcf;
using namespace tvmcf::testing;
namespace fs = std::filesystem;

namespace {

const char* kCircle = R"({"surface": {"kind": "circle", "params": {"center": [0.5, 0.5], "radius": 0.2}}})";

std::string error_of(const std::string& text) {
  try {
    io::parse_config(text);
  } catch (const io::ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tvmcf_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("defaults of a minimal config") {
  const io::RunConfig cfg = io::parse_config(kCircle);
  CHECK(cfg.surface.kind() == SurfaceKind::Circle);
  CHECK(cfg.surface.radius() == doctest::Approx(0.2));
  CHECK(cfg.n_per_axis == 64);
  CHECK(cfg.flow.scheme == Scheme::Imex);
  CHECK(cfg.outputs.csv_path == "timeseries.csv");
  CHECK(cfg.tolerances.cross_path == 1e-7);
  CHECK_FALSE(cfg.flow.flip_reference_curvature);
}

TEST_CASE("malformed JSON reports line and column") {
  const std::string e = error_of("{\n  \"surface\": {\"kind\": \"circle\",, }\n}");
  CHECK(e.find("line 2") != std::string::npos);
  CHECK(e.find("column") != std::string::npos);
}

TEST_CASE("config validation") {
  CHECK(error_of(R"({"grid": {"n_per_axis": 32}})").find("surface") != std::string::npos);
  CHECK(error_of(R"({"surface": {"kind": "torus"}})").find("kind") != std::string::npos);
  CHECK(error_of(R"({"surface": {"kind": "lamella", "ambient_dim": 4, "params": {"c1": 0.2, "c2": 0.7}}})")
            .find("ambient dimension 4") != std::string::npos);
  CHECK(error_of(R"({"surface": {"kind": "circle", "ambient_dim": 3, "params": {"center": [0.5, 0.5], "radius": 0.2}}})")
            .find("T^2") != std::string::npos);
  CHECK(error_of(R"({"surface": {"kind": "circle", "params": {"center": [0.5, 0.5], "radius": -1}}})") != "");
  CHECK_FALSE(error_of(R"({"surface": {"kind": "circle", "params": {"center": [0.5, 0.5], "radius": 0.2}}, "gird": 1})")
                  .empty());
  CHECK(error_of(R"({"surface": {"kind": "circle", "params": {"center": [0.5, 0.5], "radius": 0.2, "r": 1}}})")
            .find("r") != std::string::npos);
  const std::string base = R"({"surface": {"kind": "circle", "params": {"center": [0.5, 0.5], "radius": 0.2}}, )";
  CHECK(error_of(base + R"("grid": {"n_per_axis": 31}})") != "");
  CHECK(error_of(base + R"("flow": {"scheme": "rk4"}})") != "");
  CHECK(error_of(base + R"("flow": {"t_end": 0}})") != "");
  CHECK(error_of(base + R"("initial": {"modes": [{"k": 40, "amplitude": 1}]}})").find("Nyquist") != std::string::npos);
  CHECK(error_of(base + R"("initial": {"translation": [0.1, 0.2, 0.3]}})") != "");
  CHECK(error_of(base + R"("outputs": {"svg_paths": {"bogus": "x.svg"}}})") != "");
  CHECK(error_of(base + R"("test_hooks": {"flip_reference_curvature": true}})") == "");
}

TEST_CASE("surface JSON round trip") {
  for (const auto& f : all_surfaces()) {
    const ReferenceSurface g = io::surface_from_json(io::surface_to_json(f));
    CHECK(g.kind() == f.kind());
    CHECK(g.ambient_dim() == f.ambient_dim());
    if (f.curved()) {
      CHECK(g.radius() == f.radius());
    } else {
      CHECK(g.heights()[0] == f.heights()[0]);
      CHECK(g.heights()[1] == f.heights()[1]);
    }
  }
}

TEST_CASE("initial data: modes, translation and random amplitude") {
  const std::string base = R"({"surface": {"kind": "lamella", "params": {"c1": 0.25, "c2": 0.75}}, "grid": {"n_per_axis": 16}, )";
  const io::RunConfig modes = io::parse_config(
      base + R"("initial": {"modes": [{"component": 1, "k": [1, 0], "amplitude": 0.01, "phase": 0.0}]}})");
  const FieldBundle a = io::initial_data(modes);
  CHECK(max_abs(a[0].values, std::vector<double>(a[0].size(), 0.0)) == 0.0);
  CHECK(a[1][0] == doctest::Approx(0.01));

  const io::RunConfig random = io::parse_config(base + R"("initial": {"seed": 5, "amplitude": 0.003}})");
  CHECK(sobolev_norm(io::initial_data(random), 3, 2.0) == doctest::Approx(0.003).epsilon(1e-12));
  CHECK(io::initial_data(random)[0].values == io::initial_data(random)[0].values);

  const io::RunConfig moved = io::parse_config(base + R"("initial": {"translation": [0, 0, 0.02]}})");
  const FieldBundle t = io::initial_data(moved);
  CHECK(t[0][0] == doctest::Approx(-0.02));
  CHECK(t[1][0] == doctest::Approx(0.02));
}

TEST_CASE("CSV rows") {
  DiagnosticsRecord r;
  r.t = 0.5;
  r.volume = 1.0 / 3.0;
  r.p = Vec3(0.1, 0.2, 0.3);
  const std::string row2 = io::csv_row(r, 2);
  const std::string row3 = io::csv_row(r, 3);
  CHECK(row2.substr(0, 4) == "0.5,");
  CHECK(row2.find("0.33333333333333331") != std::string::npos);
  CHECK(row2.back() == ',');
  CHECK(row3.substr(row3.rfind(',') + 1) == "0.29999999999999999");
  const auto commas = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  CHECK(commas(row2) == commas(io::kCsvHeader));
  CHECK(commas(row3) == commas(io::kCsvHeader));
  CHECK(io::record_column(r, "volume") == r.volume);
  CHECK(io::record_column(r, "p2") == 0.2);
  CHECK_THROWS(io::record_column(r, "nope"));
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(io::format_double(1.0 / 7.0)) == 1.0 / 7.0);
}

TEST_CASE("SVG plot") {
  io::PlotSeries s;
  s.title = "v_l2 against t";
  s.y_label = "v_l2";
  s.t = {0.0, 0.1, 0.2};
  s.y = {1.0, 0.1, 0.0};
  s.log_scale = true;
  const std::string svg = io::svg_plot(s);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("v_l2 against t") != std::string::npos);
}

TEST_CASE("checkpoint round trip is bitwise") {
  const fs::path dir = scratch("ckpt");
  for (const auto& f : all_surfaces()) {
    std::mt19937_64 rng(9);
    FlowState s = initial_state(f, random_bundle(f, 16, 3, 0.05, rng));
    s.t = 0.123456789;
    s.step = 42;
    s.recorded = true;
    const io::json cfg = {{"surface", io::surface_to_json(f)}, {"grid", {{"n_per_axis", 16}}}};
    const fs::path p = dir / (kind_name(f.kind()) + ".ckpt");
    io::write_checkpoint(p, cfg, s);
    CHECK_FALSE(fs::exists(p.string() + ".tmp"));
    const io::Checkpoint c = io::read_checkpoint(p);
    CHECK(c.config == cfg);
    const FlowState r = io::checkpoint_state(c, f);
    CHECK(r.t == s.t);
    CHECK(r.step == 42);
    CHECK(r.v0 == s.v0);
    CHECK(r.recorded);
    REQUIRE(r.psi.size() == s.psi.size());
    for (std::size_t k = 0; k < s.psi.size(); ++k) CHECK(r.psi[k].values == s.psi[k].values);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  const fs::path dir = scratch("bad");
  CHECK_THROWS_AS(io::read_checkpoint(dir / "missing.ckpt"), io::ConfigError);
  {
    std::ofstream(dir / "garbage.ckpt") << "not json\n";
  }
  CHECK_THROWS_AS(io::read_checkpoint(dir / "garbage.ckpt"), io::ConfigError);
  const auto f = ReferenceSurface::circle(0.5, 0.5, 0.2);
  const FlowState s = initial_state(f, zero_bundle(f, 16));
  io::write_checkpoint(dir / "ok.ckpt", io::json::object(), s);
  fs::resize_file(dir / "ok.ckpt", fs::file_size(dir / "ok.ckpt") - 8);
  CHECK_THROWS_AS(io::read_checkpoint(dir / "ok.ckpt"), io::ConfigError);
}
