#include "tvmcf/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace tvmcf::io {

namespace {

/// Typed access to one JSON object; keys never asked for are reported by finish().
class Section {
 public:
  Section(const json& j, std::string where) : where_(std::move(where)) {
    if (j.is_null()) return;
    if (!j.is_object()) fail("expected an object");
    j_ = j;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key + " must be finite");
    return x;
  }

  double required_number(const std::string& key) {
    if (!has(key)) fail("missing required key " + key);
    return number(key, 0.0);
  }

  long long integer(const std::string& key, long long def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(key + " must be an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(key + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key + " must be a string");
    return v.get<std::string>();
  }

  Section child(const std::string& key) { return Section(has(key) ? j_.at(key) : json(), where_ + "." + key); }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail("unknown key " + item.key());
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }
  const std::string& where() const { return where_; }

 private:
  json j_ = json::object();
  std::string where_;
  std::set<std::string> seen_;
};

std::array<double, 2> center_of(Section& p) {
  std::array<double, 2> c{0.5, 0.5};
  if (!p.has("center")) return c;
  const json& v = p.raw("center");
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) p.fail("center must be [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

int natural_dim(const std::string& kind) { return kind == "circle" || kind == "strip" ? 2 : 3; }

void check_positive(Section& s, const std::string& key, double v) {
  if (!(v > 0.0)) s.fail(key + " must be positive");
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"t",      "volume", "perimeter", "v_l2",    "gradH_l2",
                                             "lyapunov", "d_ref", "d_fit",     "psi_h3",  "psi_c1",
                                             "phi_w25", "p1",     "p2",        "p3"};
  return cols;
}

void put_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_le(const unsigned char* b) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

ReferenceSurface surface_from_json(const json& j) {
  Section s(j, "surface");
  const std::string kind = s.string("kind", "");
  if (kind != "circle" && kind != "strip" && kind != "lamella" && kind != "cylinder")
    s.fail("kind must be one of circle, strip, lamella, cylinder");
  const long long dim = s.integer("ambient_dim", natural_dim(kind));
  if (dim != 2 && dim != 3)
    s.fail("ambient dimension " + std::to_string(dim) + " is not supported (charts are one- or two-dimensional)");
  if (dim != natural_dim(kind)) s.fail(kind + " lives in T^" + std::to_string(natural_dim(kind)));
  Section p = s.child("params");
  std::optional<ReferenceSurface> out;
  try {
    if (kind == "circle" || kind == "cylinder") {
      const auto c = center_of(p);
      const double r = p.required_number("radius");
      check_positive(p, "radius", r);
      out = kind == "circle" ? ReferenceSurface::circle(c[0], c[1], r) : ReferenceSurface::cylinder(c[0], c[1], r);
    } else {
      const double c1 = p.required_number("c1");
      const double c2 = p.required_number("c2");
      out = kind == "strip" ? ReferenceSurface::strip(c1, c2) : ReferenceSurface::lamella(c1, c2);
    }
  } catch (const std::invalid_argument& e) {
    p.fail(e.what());
  }
  p.finish();
  s.finish();
  return *out;
}

json surface_to_json(const ReferenceSurface& f) {
  json j;
  j["kind"] = kind_name(f.kind());
  j["ambient_dim"] = f.ambient_dim();
  if (f.curved()) {
    j["params"] = {{"center", {f.center()[0], f.center()[1]}}, {"radius", f.radius()}};
  } else {
    j["params"] = {{"c1", f.heights()[0]}, {"c2", f.heights()[1]}};
  }
  return j;
}

RunConfig config_from_json(const json& doc) {
  RunConfig cfg;
  cfg.document = doc;
  Section top(doc, "config");
  if (!top.has("surface")) top.fail("missing required key surface");
  cfg.surface_document = top.raw("surface");
  cfg.surface = surface_from_json(cfg.surface_document);
  const ReferenceSurface& f = cfg.surface;

  Section grid = top.child("grid");
  const long long n = grid.integer("n_per_axis", 64);
  if (n < 8 || n > 1024 || n % 2 != 0) grid.fail("n_per_axis must be even and in [8, 1024]");
  cfg.n_per_axis = static_cast<int>(n);
  grid.finish();

  Section init = top.child("initial");
  cfg.initial.seed = static_cast<std::uint64_t>(init.integer("seed", 1));
  cfg.initial.band_limit = static_cast<int>(init.integer("band_limit", 3));
  if (cfg.initial.band_limit < 1 || cfg.initial.band_limit >= cfg.n_per_axis / 2)
    init.fail("band_limit must lie in [1, n_per_axis / 2)");
  cfg.initial.amplitude = init.number("amplitude", 0.0);
  if (cfg.initial.amplitude < 0.0) init.fail("amplitude must be non-negative");
  if (init.has("translation")) {
    const json& t = init.raw("translation");
    if (!t.is_array() || static_cast<int>(t.size()) != f.ambient_dim())
      init.fail("translation must have " + std::to_string(f.ambient_dim()) + " entries");
    for (int a = 0; a < f.ambient_dim(); ++a) {
      if (!t[a].is_number()) init.fail("translation entries must be numbers");
      cfg.initial.translation[a] = t[a].get<double>();
    }
  }
  if (init.has("modes")) {
    const json& modes = init.raw("modes");
    if (!modes.is_array()) init.fail("modes must be an array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      Section m(modes[i], init.where() + ".modes[" + std::to_string(i) + "]");
      ModeSpec spec;
      spec.component = static_cast<int>(m.integer("component", 0));
      if (spec.component < 0 || spec.component >= f.num_components()) m.fail("component out of range");
      if (m.has("k")) {
        const json& k = m.raw("k");
        if (k.is_number_integer()) {
          spec.k = {k.get<int>(), 0};
        } else if (k.is_array() && static_cast<int>(k.size()) == f.chart_dim() && k[0].is_number_integer() &&
                   (k.size() == 1 || k[1].is_number_integer())) {
          spec.k = {k[0].get<int>(), k.size() == 2 ? k[1].get<int>() : 0};
        } else {
          m.fail("k must be an integer array with one entry per chart axis");
        }
      }
      for (int a = 0; a < 2; ++a)
        if (std::abs(spec.k[a]) >= cfg.n_per_axis / 2) m.fail("k must lie below the Nyquist mode");
      spec.amplitude = m.number("amplitude", 0.0);
      spec.phase = m.number("phase", 0.0);
      m.finish();
      cfg.initial.modes.push_back(spec);
    }
  }
  init.finish();

  Section stab = top.child("stability");
  cfg.stability.mode_cutoff = static_cast<int>(stab.integer("mode_cutoff", 4));
  if (cfg.stability.mode_cutoff < 1 || cfg.stability.mode_cutoff >= cfg.n_per_axis / 2)
    stab.fail("mode_cutoff must lie in [1, n_per_axis / 2)");
  cfg.stability.certify_samples = static_cast<int>(stab.integer("certify_samples", 20));
  if (stab.has("sweep")) {
    Section sw = stab.child("sweep");
    SweepSpec spec;
    spec.parameter = sw.string("parameter", f.curved() ? "radius" : "c2");
    const bool ok = f.curved() ? spec.parameter == "radius" : spec.parameter == "c1" || spec.parameter == "c2";
    if (!ok) sw.fail("parameter " + spec.parameter + " does not apply to " + kind_name(f.kind()));
    spec.from = sw.required_number("from");
    spec.to = sw.required_number("to");
    spec.steps = static_cast<int>(sw.integer("steps", 0));
    if (spec.steps < 2) sw.fail("steps must be at least 2");
    sw.finish();
    cfg.stability.sweep = spec;
  }
  stab.finish();

  Section tol = top.child("tolerances");
  Tolerances& t = cfg.tolerances;
  t.lyapunov_increase = tol.number("lyapunov_increase", t.lyapunov_increase);
  t.cross_path = tol.number("cross_path", t.cross_path);
  t.fd_rel = tol.number("fd_rel", t.fd_rel);
  t.fd_abs = tol.number("fd_abs", t.fd_abs);
  t.fd_ratio_lo = tol.number("fd_ratio_lo", t.fd_ratio_lo);
  t.fd_ratio_hi = tol.number("fd_ratio_hi", t.fd_ratio_hi);
  t.dt_fd = tol.number("dt_fd", t.dt_fd);
  t.linearization_order = tol.number("linearization_order", t.linearization_order);
  t.decay_fraction = tol.number("decay_fraction", t.decay_fraction);
  if (!(t.dt_fd > 0.0)) tol.fail("dt_fd must be positive");
  tol.finish();

  Section flow = top.child("flow");
  FlowOptions& o = cfg.flow;
  try {
    o.scheme = parse_scheme(flow.string("scheme", "imex"));
  } catch (const std::invalid_argument& e) {
    flow.fail(e.what());
  }
  o.c_dt = flow.number("c_dt", o.c_dt);
  o.t_end = flow.number("t_end", o.t_end);
  o.output_stride = static_cast<int>(flow.integer("output_stride", o.output_stride));
  o.c0 = flow.number("c0", o.c0);
  o.delta_graph = flow.number("delta_graph", o.delta_graph);
  o.a_min = flow.number("a_min", o.a_min);
  o.converge_tol = flow.number("converge_tol", o.converge_tol);
  o.stop_on_converged = flow.boolean("stop_on_converged", o.stop_on_converged);
  o.dealias = flow.boolean("dealias", o.dealias);
  o.cross_check_stride = static_cast<int>(flow.integer("cross_check_stride", o.cross_check_stride));
  o.check_resolution = flow.boolean("check_resolution", o.check_resolution);
  o.cross_check_tol = t.cross_path;
  o.stability_mode_cutoff = cfg.stability.mode_cutoff;
  if (!(o.c_dt > 0.0)) flow.fail("c_dt must be positive");
  if (!(o.t_end > 0.0)) flow.fail("t_end must be positive");
  if (o.output_stride < 1) flow.fail("output_stride must be at least 1");
  if (o.cross_check_stride < 0) flow.fail("cross_check_stride must be non-negative");
  if (!(o.a_min > 0.0 && o.a_min < 1.0)) flow.fail("a_min must lie in (0, 1)");
  flow.finish();

  Section out = top.child("outputs");
  cfg.outputs.csv_path = out.string("csv_path", cfg.outputs.csv_path);
  cfg.outputs.checkpoint_path = out.string("checkpoint_path", "");
  cfg.outputs.report_path = out.string("report_path", cfg.outputs.report_path);
  cfg.outputs.sweep_csv_path = out.string("sweep_csv_path", cfg.outputs.sweep_csv_path);
  if (out.has("svg_paths")) {
    const json& svg = out.raw("svg_paths");
    if (!svg.is_object()) out.fail("svg_paths must map column names to file names");
    for (const auto& item : svg.items()) {
      const auto& cols = csv_columns();
      if (std::find(cols.begin(), cols.end(), item.key()) == cols.end() || item.key() == "t")
        out.fail("svg_paths: unknown column " + item.key());
      if (!item.value().is_string()) out.fail("svg_paths entries must be strings");
      cfg.outputs.svg_paths.emplace_back(item.key(), item.value().get<std::string>());
    }
  }
  out.finish();

  Section ver = top.child("verify");
  if (ver.has("surfaces")) {
    const json& list = ver.raw("surfaces");
    if (!list.is_array()) ver.fail("surfaces must be an array");
    for (const json& s : list) cfg.verify.surfaces.push_back(surface_from_json(s));
  }
  cfg.verify.n_per_axis = static_cast<int>(ver.integer("n_per_axis", cfg.verify.n_per_axis));
  if (cfg.verify.n_per_axis < 16 || cfg.verify.n_per_axis % 2 != 0) ver.fail("n_per_axis must be even and >= 16");
  cfg.verify.samples = static_cast<int>(ver.integer("samples", cfg.verify.samples));
  cfg.verify.interpolation_samples = static_cast<int>(ver.integer("interpolation_samples", cfg.verify.interpolation_samples));
  cfg.verify.seed = static_cast<std::uint64_t>(ver.integer("seed", 1));
  if (cfg.verify.samples < 1 || cfg.verify.interpolation_samples < 1) ver.fail("sample counts must be positive");
  ver.finish();

  Section hooks = top.child("test_hooks");
  o.flip_reference_curvature = hooks.boolean("flip_reference_curvature", false);
  hooks.finish();

  top.finish();
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
  return config_from_json(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

FieldBundle initial_data(const RunConfig& cfg) {
  const ReferenceSurface& f = cfg.surface;
  const int n = cfg.n_per_axis;
  FieldBundle psi = cfg.initial.translation.isZero() ? zero_bundle(f, n) : translation_graph(f, cfg.initial.translation, n);
  for (const ModeSpec& m : cfg.initial.modes) {
    const ScalarField add = fourier_modes(chart_grid(f, m.component, n), {{m.k, m.amplitude, m.phase}});
    for (std::size_t i = 0; i < add.size(); ++i) psi[m.component][i] += add[i];
  }
  if (cfg.initial.amplitude > 0.0) {
    std::mt19937_64 rng(cfg.initial.seed);
    FieldBundle r;
    for (int c = 0; c < f.num_components(); ++c)
      r.push_back(random_band_limited(chart_grid(f, c, n), cfg.initial.band_limit, rng, false));
    const double s = cfg.initial.amplitude / sobolev_norm(r, 3, 2.0);
    for (int c = 0; c < f.num_components(); ++c)
      for (std::size_t i = 0; i < r[c].size(); ++i) psi[c][i] += s * r[c][i];
  }
  return psi;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* const kCsvHeader = "t,volume,perimeter,v_l2,gradH_l2,lyapunov,d_ref,d_fit,psi_h3,psi_c1,phi_w25,p1,p2,p3";

double record_column(const DiagnosticsRecord& r, const std::string& column) {
  static const std::vector<double DiagnosticsRecord::*> fields{
      &DiagnosticsRecord::t,        &DiagnosticsRecord::volume,   &DiagnosticsRecord::perimeter,
      &DiagnosticsRecord::v_l2,     &DiagnosticsRecord::grad_h_l2, &DiagnosticsRecord::lyapunov,
      &DiagnosticsRecord::d_ref,    &DiagnosticsRecord::d_fit,    &DiagnosticsRecord::psi_h3,
      &DiagnosticsRecord::psi_c1,   &DiagnosticsRecord::phi_w25};
  const auto& cols = csv_columns();
  const auto it = std::find(cols.begin(), cols.end(), column);
  if (it == cols.end()) throw std::invalid_argument("unknown column " + column);
  const std::size_t k = static_cast<std::size_t>(it - cols.begin());
  return k < fields.size() ? r.*fields[k] : r.p[static_cast<int>(k - fields.size())];
}

std::string csv_row(const DiagnosticsRecord& r, int ambient_dim) {
  std::string row;
  const auto& cols = csv_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (k > 0) row += ',';
    const bool p3 = cols[k] == "p3";
    if (p3 && ambient_dim < 3) continue;
    row += format_double(record_column(r, cols[k]));
  }
  return row;
}

std::string svg_plot(const PlotSeries& s) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < s.t.size() && i < s.y.size(); ++i) {
    if (!std::isfinite(s.t[i]) || !std::isfinite(s.y[i])) continue;
    if (s.log_scale && !(s.y[i] > 0.0)) continue;
    pts.emplace_back(s.t[i], s.log_scale ? std::log10(s.y[i]) : s.y[i]);
  }
  const double w = 640, h = 400, left = 80, right = 20, top = 40, bottom = 50;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
    << s.title << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
    << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 10
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">t</text>\n";
  o << "<text x=\"16\" y=\"" << (top + h - bottom) / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"13\" transform=\"rotate(-90 16 " << (top + h - bottom) / 2 << ")\">"
    << (s.log_scale ? s.y_label + " (log10)" : s.y_label) << "</text>\n";
  if (!pts.empty()) {
    double x0 = pts.front().first, x1 = x0, y0 = pts.front().second, y1 = y0;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) {
      y0 -= 0.5;
      y1 += 0.5;
    }
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
    auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };
    o << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      o << (i ? " " : "") << svg_number(px(pts[i].first)) << ',' << svg_number(py(pts[i].second));
    o << "\"/>\n";
    auto ylabel = [&](double y) { return s.log_scale ? "1e" + tick_label(y) : tick_label(y); };
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(y0) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << ylabel(y0) << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(y1) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << ylabel(y1) << "</text>\n";
    o << "<text x=\"" << px(x0) << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"start\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << tick_label(x0) << "</text>\n";
    o << "<text x=\"" << px(x1) << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << tick_label(x1) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_checkpoint(const std::filesystem::path& path, const json& config, const FlowState& state) {
  json header;
  header["schema_version"] = 1;
  header["config"] = config;
  header["t"] = state.t;
  header["step"] = state.step;
  header["v0"] = state.v0;
  header["recorded"] = state.recorded;
  json comps = json::array();
  for (const auto& c : state.psi) comps.push_back({{"n", {c.grid.n[0], c.grid.n[1]}}, {"length", c.size()}});
  header["components"] = comps;
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out << header.dump() << '\n';
    // v0 is stored bitwise so that the restarted projection target is exact.
    put_le(out, state.v0);
    for (const auto& c : state.psi)
      for (double v : c.values) put_le(out, v);
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error&) {
    throw ConfigError("checkpoint header is not valid JSON");
  }
  if (header.value("schema_version", 0) != 1) throw ConfigError("unsupported checkpoint schema version");
  Checkpoint cp;
  try {
    cp.config = header.at("config");
    cp.state.step = header.at("step").get<long>();
    cp.state.t = header.at("t").get<double>();
    cp.state.recorded = header.at("recorded").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint header: ") + e.what());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t total = 1;
  std::vector<std::array<int, 2>> shapes;
  for (const auto& c : header.at("components")) {
    const std::array<int, 2> n{c.at("n")[0].get<int>(), c.at("n")[1].get<int>()};
    if (c.at("length").get<std::size_t>() != static_cast<std::size_t>(n[0]) * n[1])
      throw ConfigError("checkpoint component length does not match its shape");
    shapes.push_back(n);
    total += static_cast<std::size_t>(n[0]) * n[1];
  }
  if (bytes.size() != 8 * total) throw ConfigError("checkpoint payload has the wrong size");
  cp.state.v0 = get_le(bytes.data());
  std::size_t off = 8;
  for (const auto& n : shapes) {
    std::vector<double> v(static_cast<std::size_t>(n[0]) * n[1]);
    for (double& x : v) {
      x = get_le(bytes.data() + off);
      off += 8;
    }
    cp.shapes.push_back(n);
    cp.values.push_back(std::move(v));
  }
  return cp;
}

FlowState checkpoint_state(const Checkpoint& c, const ReferenceSurface& surface) {
  FlowState s = c.state;
  if (static_cast<int>(c.shapes.size()) != surface.num_components())
    throw ConfigError("checkpoint has the wrong component count");
  s.psi.clear();
  for (int k = 0; k < surface.num_components(); ++k) {
    const PeriodicGrid g = chart_grid(surface, k, c.shapes[k][0]);
    if (g.n != c.shapes[k]) throw ConfigError("checkpoint grid does not match the surface charts");
    s.psi.emplace_back(g, c.values[k]);
  }
  return s;
}

json to_json(const DecayFit& fit) {
  return {{"t_a", fit.t_a},   {"t_b", fit.t_b}, {"rate", fit.rate}, {"amplitude", fit.amplitude},
          {"r_squared", fit.r_squared}, {"samples", fit.samples}};
}

json to_json(const DiagnosticsRecord& r, int ambient_dim) {
  json j;
  for (const std::string& col : csv_columns()) {
    if (col == "p3" && ambient_dim < 3) continue;
    j[col] = record_column(r, col);
  }
  j["lap_h_sq"] = r.lap_h_sq;
  j["dpsi_sup"] = r.dpsi_sup;
  j["fit_flagged"] = r.fit_flagged;
  return j;
}

json to_json(const StabilityReport& r) {
  return {{"sigma1", r.sigma1},
          {"admissible_dim", r.admissible_dim},
          {"basis_dim", r.basis_dim},
          {"translation_dim", r.translation_dim},
          {"residual", r.residual},
          {"certified_min", r.certified_min},
          {"mean_zero_enforced", r.mean_zero_enforced},
          {"translation_orthogonality_enforced", r.translation_orthogonality_enforced}};
}

json to_json(const CheckResult& r) {
  json j{{"name", r.name}, {"surface", r.surface}, {"value", r.value}, {"threshold", r.threshold},
         {"comparison", r.upper ? "<=" : ">="}, {"passed", r.passed}};
  if (!std::isfinite(r.value)) j["value"] = format_double(r.value);
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

json to_json(const DerivativeReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"finite_difference", c.finite_difference},
                      {"analytic", c.analytic},
                      {"abs_error", c.abs_error},
                      {"abs_error_half", c.abs_error_half},
                      {"rel_error", c.rel_error},
                      {"order_ratio", c.order_ratio},
                      {"richardson_rel_error", c.richardson_rel_error},
                      {"absolute_only", c.absolute_only},
                      {"passed", c.passed}});
  return {{"dt_fd", r.dt_fd}, {"checks", checks}, {"passed", r.passed}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace tvmcf::io
