#include "hetspde/scenario.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace hetspde {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct Value {
  std::string text;
  int line;
};

using Section = std::map<std::string, Value>;

const std::map<std::string, std::set<std::string>>& grammar() {
  static const std::map<std::string, std::set<std::string>> g{
      {"coefficients",
       {"kind", "rho", "a", "b", "rho_minus", "rho_plus", "a_minus", "a_plus", "b_minus", "b_plus", "lambda",
        "Lambda"}},
      {"grid", {"x_min", "x_max", "n"}},
      {"time", {"T", "steps"}},
      {"noise", {"drift", "sigma", "lipschitz", "semigroup_bound"}},
      {"forward", {"xi"}},
      {"bspde", {"c", "gamma", "f", "g", "probes", "probe_time"}},
      {"game", {"gamma1", "gamma2", "gamma3", "sigma0", "noise_profile", "alpha1", "alpha2", "xi", "box1", "box2"}},
      {"ensemble", {"paths", "seed"}},
      {"output", {"dir", "slices"}},
      {"verify", {"tolerance_scale", "checks", "mc_paths", "mc_steps", "deviation_paths"}},
  };
  return g;
}

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Section> sections)
      : source_(std::move(source)), sections_(std::move(sections)) {}

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  bool has(const std::string& s, const std::string& k) const { return has_section(s) && sections_.at(s).count(k); }

  void require_section(const std::string& s) const {
    if (!has_section(s)) throw ConfigError(source_, 0, "missing required block '" + s + "'");
  }

  const Value& get(const std::string& s, const std::string& k) const {
    if (!has(s, k)) throw ConfigError(source_, 0, "missing required key '" + s + "." + k + "'");
    return sections_.at(s).at(k);
  }

  double number(const std::string& s, const std::string& k) const { return to_number(get(s, k), s + "." + k); }
  double number(const std::string& s, const std::string& k, double fallback) const {
    return has(s, k) ? number(s, k) : fallback;
  }

  std::int64_t integer(const std::string& s, const std::string& k) const {
    const Value& v = get(s, k);
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    if (v.text.empty() || ec != std::errc() || ptr != v.text.data() + v.text.size())
      throw ConfigError(source_, v.line, s + "." + k + ": '" + v.text + "' is not an integer");
    return out;
  }
  std::int64_t integer(const std::string& s, const std::string& k, std::int64_t fallback) const {
    return has(s, k) ? integer(s, k) : fallback;
  }

  std::uint64_t unsigned_integer(const std::string& s, const std::string& k, std::uint64_t fallback) const {
    if (!has(s, k)) return fallback;
    const Value& v = get(s, k);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    if (v.text.empty() || ec != std::errc() || ptr != v.text.data() + v.text.size())
      throw ConfigError(source_, v.line, s + "." + k + ": '" + v.text + "' is not a nonnegative integer");
    return out;
  }

  Shape shape(const std::string& s, const std::string& k) const {
    const Value& v = get(s, k);
    try {
      return parse_shape(v.text);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source_, v.line, s + "." + k + ": " + e.what());
    }
  }

  std::vector<double> list(const std::string& s, const std::string& k) const {
    const Value& v = get(s, k);
    std::vector<double> out;
    std::stringstream ss(v.text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(to_number({trim(tok), v.line}, s + "." + k));
    return out;
  }

  std::string word(const std::string& s, const std::string& k, const std::set<std::string>& allowed) const {
    const Value& v = get(s, k);
    if (!allowed.count(v.text)) {
      std::string options;
      for (const auto& a : allowed) options += (options.empty() ? "" : ", ") + a;
      throw ConfigError(source_, v.line, s + "." + k + ": '" + v.text + "' is not one of " + options);
    }
    return v.text;
  }

  [[noreturn]] void fail(const std::string& s, const std::string& k, const std::string& message) const {
    throw ConfigError(source_, has(s, k) ? get(s, k).line : 0, s + "." + k + ": " + message);
  }

 private:
  double to_number(const Value& v, const std::string& key) const {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    if (v.text.empty() || ec != std::errc() || ptr != v.text.data() + v.text.size() || !std::isfinite(out))
      throw ConfigError(source_, v.line, key + ": '" + v.text + "' is not a finite number");
    return out;
  }

  std::string source_;
  std::map<std::string, Section> sections_;
};

std::optional<ControlBox> parse_box(const Reader& r, const std::string& key) {
  if (!r.has("game", key)) return std::nullopt;
  const std::vector<double> v = r.list("game", key);
  if (v.size() != 2 || !(v[0] <= v[1])) r.fail("game", key, "expected 'lower, upper' with lower <= upper");
  return ControlBox{v[0], v[1]};
}

CoefficientBlock parse_coefficients(const Reader& r) {
  CoefficientBlock block;
  block.kind = r.word("coefficients", "kind", {"constant", "piecewise", "smooth"});
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (r.has("coefficients", k)) r.fail("coefficients", k, "not used by kind = " + block.kind);
  };
  if (block.kind == "constant") {
    forbid({"rho_minus", "rho_plus", "a_minus", "a_plus", "b_minus", "b_plus"});
    block.field = CoefficientField::constant(r.number("coefficients", "rho", 1.0), r.number("coefficients", "a", 1.0),
                                             r.number("coefficients", "b", 0.0));
  } else if (block.kind == "piecewise") {
    forbid({"rho", "a", "b"});
    PiecewiseConstantCoefficients p;
    p.rho_minus = r.number("coefficients", "rho_minus", 1.0);
    p.rho_plus = r.number("coefficients", "rho_plus", 1.0);
    p.a_minus = r.number("coefficients", "a_minus", 1.0);
    p.a_plus = r.number("coefficients", "a_plus", 1.0);
    p.b_minus = r.number("coefficients", "b_minus", 0.0);
    p.b_plus = r.number("coefficients", "b_plus", 0.0);
    block.field = CoefficientField::piecewise(p);
  } else {
    forbid({"rho_minus", "rho_plus", "a_minus", "a_plus", "b_minus", "b_plus"});
    SmoothCoefficients s;
    s.rho = r.shape("coefficients", "rho").f;
    s.a = r.shape("coefficients", "a").f;
    s.b = r.has("coefficients", "b") ? r.shape("coefficients", "b").f : [](double) { return 0.0; };
    block.field = CoefficientField::smooth(s);
  }
  if (r.has("coefficients", "lambda")) block.lambda = r.number("coefficients", "lambda");
  if (r.has("coefficients", "Lambda")) block.Lambda = r.number("coefficients", "Lambda");
  if (block.lambda.has_value() != block.Lambda.has_value())
    r.fail("coefficients", block.lambda ? "lambda" : "Lambda", "lambda and Lambda must be given together");
  return block;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  std::map<std::string, Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'section.key = value'");
    const std::string lhs = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto dot = lhs.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size())
      throw ConfigError(source, line_no, "key '" + lhs + "' must have the form section.key");
    const std::string section = lhs.substr(0, dot);
    const std::string key = lhs.substr(dot + 1);
    const auto it = grammar().find(section);
    if (it == grammar().end()) throw ConfigError(source, line_no, "unknown block '" + section + "'");
    if (!it->second.count(key)) throw ConfigError(source, line_no, "unknown key '" + lhs + "'");
    if (value.empty()) throw ConfigError(source, line_no, "empty value for '" + lhs + "'");
    auto& sec = sections[section];
    if (sec.count(key))
      throw ConfigError(source, line_no,
                        "duplicate key '" + lhs + "' (first set on line " + std::to_string(sec[key].line) + ")");
    sec[key] = {value, line_no};
  }

  const Reader r(source, sections);
  for (const char* s : {"coefficients", "grid", "time"}) r.require_section(s);

  Scenario sc;
  sc.source = source;
  sc.text = text;
  sc.coefficients = parse_coefficients(r);

  sc.grid = {r.number("grid", "x_min"), r.number("grid", "x_max"), r.integer("grid", "n")};
  if (!(sc.grid.x_min < sc.grid.x_max)) r.fail("grid", "x_max", "must exceed grid.x_min");
  if (sc.grid.n < 5) r.fail("grid", "n", "need at least 5 nodes");

  sc.time = {r.number("time", "T"), r.integer("time", "steps")};
  if (!(sc.time.T > 0.0)) r.fail("time", "T", "must be positive");
  if (sc.time.steps < 1) r.fail("time", "steps", "must be positive");

  if (r.has_section("noise")) {
    if (r.has("noise", "drift")) sc.noise.drift = r.shape("noise", "drift");
    if (r.has("noise", "sigma")) sc.noise.sigma = r.shape("noise", "sigma");
    sc.noise.lipschitz = r.number("noise", "lipschitz", 1.0);
    sc.noise.semigroup_bound = r.number("noise", "semigroup_bound", 1.0);
  }

  if (r.has("forward", "xi")) sc.forward_xi = r.shape("forward", "xi");

  if (r.has_section("bspde")) {
    BspdeBlock b;
    b.c = r.number("bspde", "c", 0.0);
    b.gamma = r.number("bspde", "gamma", 0.0);
    if (r.has("bspde", "f")) b.f = r.shape("bspde", "f");
    b.g = r.shape("bspde", "g");
    if (r.has("bspde", "probes")) b.probes = r.list("bspde", "probes");
    b.probe_time = r.number("bspde", "probe_time", 0.0);
    if (!(b.probe_time >= 0.0 && b.probe_time < sc.time.T)) r.fail("bspde", "probe_time", "must lie in [0, T)");
    for (double x : b.probes)
      if (!(x > sc.grid.x_min && x < sc.grid.x_max)) r.fail("bspde", "probes", "probe outside the grid window");
    sc.bspde = std::move(b);
  }

  if (r.has_section("game")) {
    GameBlock g;
    g.gamma1 = r.number("game", "gamma1", 1.0);
    g.gamma2 = r.number("game", "gamma2", 1.0);
    g.gamma3 = r.number("game", "gamma3", 1.0);
    for (const char* k : {"gamma1", "gamma2", "gamma3"})
      if (!(r.number("game", k, 1.0) > 0.0)) r.fail("game", k, "must be positive");
    g.sigma0 = r.number("game", "sigma0", 0.0);
    if (!(g.sigma0 >= 0.0)) r.fail("game", "sigma0", "must be nonnegative");
    if (r.has("game", "noise_profile")) g.noise_profile = r.word("game", "noise_profile", {"constant", "sqrt_a"});
    g.alpha1 = r.shape("game", "alpha1");
    g.alpha2 = r.shape("game", "alpha2");
    g.xi = r.shape("game", "xi");
    g.box1 = parse_box(r, "box1");
    g.box2 = parse_box(r, "box2");
    sc.game = std::move(g);
  }

  if (r.has_section("ensemble")) {
    sc.ensemble.paths = r.integer("ensemble", "paths", sc.ensemble.paths);
    sc.ensemble.seed = r.unsigned_integer("ensemble", "seed", sc.ensemble.seed);
    if (sc.ensemble.paths < 1) r.fail("ensemble", "paths", "must be positive");
  }

  if (r.has_section("output")) {
    if (r.has("output", "dir")) sc.output.dir = r.get("output", "dir").text;
    sc.output.slices = static_cast<int>(r.integer("output", "slices", sc.output.slices));
    if (sc.output.slices < 1) r.fail("output", "slices", "must be positive");
  }

  if (r.has_section("verify")) {
    sc.verify.tolerance_scale = r.number("verify", "tolerance_scale", 1.0);
    if (!(sc.verify.tolerance_scale > 0.0)) r.fail("verify", "tolerance_scale", "must be positive");
    if (r.has("verify", "checks"))
      for (double c : r.list("verify", "checks")) {
        if (c != std::floor(c) || c < 1 || c > 11) r.fail("verify", "checks", "check ids are integers 1..11");
        sc.verify.checks.push_back(static_cast<int>(c));
      }
    sc.verify.mc_paths = r.integer("verify", "mc_paths", sc.verify.mc_paths);
    sc.verify.mc_steps = r.integer("verify", "mc_steps", sc.verify.mc_steps);
    sc.verify.deviation_paths = r.integer("verify", "deviation_paths", sc.verify.deviation_paths);
    if (sc.verify.mc_paths < 100) r.fail("verify", "mc_paths", "need at least 100 paths");
    if (sc.verify.mc_steps < 1) r.fail("verify", "mc_steps", "must be positive");
    if (sc.verify.deviation_paths < 2) r.fail("verify", "deviation_paths", "need at least 2 paths");
  }

  // Hypothesis check on the window, either with the declared bounds or inferred ones.
  const auto probes = uniform_probes(sc.grid.x_min, sc.grid.x_max);
  try {
    const EllipticityBounds bounds = sc.coefficients.lambda
                                         ? EllipticityBounds(*sc.coefficients.lambda, *sc.coefficients.Lambda)
                                         : infer_bounds(sc.coefficients.field, probes);
    const ValidationReport report = validate_hypothesis(sc.coefficients.field, bounds, probes);
    if (!report.accepted()) {
      const Violation& v = report.violations.front();
      std::ostringstream msg;
      msg << "coefficients violate the ellipticity bounds: " << v.quantity << "(" << v.x << ") = " << v.value << " ("
          << report.violations.size() << " violations)";
      throw ConfigError(source, 0, msg.str());
    }
    if (sc.coefficients.kind == "piecewise") make_grid(sc);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(source, 0, e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open scenario file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path);
}

WeightedGrid make_grid(const Scenario& scenario) {
  return WeightedGrid(scenario.grid.x_min, scenario.grid.x_max, scenario.grid.n, scenario.coefficients.field);
}

ForwardProblem make_forward_problem(const Scenario& scenario, const WeightedGrid& grid) {
  if (scenario.game) {
    ForwardProblem p = game_forward_problem(make_game_spec(scenario, grid), grid);
    p.lipschitz = scenario.noise.lipschitz;
    p.semigroup_bound = scenario.noise.semigroup_bound;
    return p;
  }
  ForwardProblem p;
  p.field = scenario.coefficients.field;
  p.horizon = scenario.time.T;
  p.lipschitz = scenario.noise.lipschitz;
  p.semigroup_bound = scenario.noise.semigroup_bound;
  p.xi = scenario.forward_xi ? sample_on(grid, scenario.forward_xi->f) : Eigen::VectorXd::Zero(grid.size());
  if (scenario.noise.drift.name != "zero") {
    const auto f = scenario.noise.drift.f;
    p.drift = StateCoefficient::pointwise([f](double, double, double y, double, double) { return f(y); });
  }
  if (scenario.noise.sigma.name != "zero") p.noise = StateCoefficient::profile(sample_on(grid, scenario.noise.sigma.f));
  return p;
}

LinearBspdeProblem make_bspde_problem(const Scenario& scenario) {
  if (!scenario.bspde) throw ConfigError(scenario.source, 0, "scenario has no 'bspde' block");
  const BspdeBlock& b = *scenario.bspde;
  LinearBspdeProblem p;
  p.field = scenario.coefficients.field;
  p.c = b.c;
  p.gamma = b.gamma;
  p.horizon = scenario.time.T;
  p.g = b.g.f;
  if (b.f) {
    const auto f = b.f->f;
    p.f = [f](double, double x) { return f(x); };
  }
  return p;
}

GameSpec make_game_spec(const Scenario& scenario, const WeightedGrid& grid) {
  if (!scenario.game) throw ConfigError(scenario.source, 0, "scenario has no 'game' block");
  const GameBlock& g = *scenario.game;
  GameSpec spec;
  spec.field = scenario.coefficients.field;
  spec.alpha1 = sample_on(grid, g.alpha1.f);
  spec.alpha2 = sample_on(grid, g.alpha2.f);
  spec.xi = sample_on(grid, g.xi.f);
  spec.gamma1 = g.gamma1;
  spec.gamma2 = g.gamma2;
  spec.gamma3 = g.gamma3;
  spec.sigma0 = g.sigma0;
  spec.horizon = scenario.time.T;
  spec.box1 = g.box1;
  spec.box2 = g.box2;
  if (g.noise_profile == "sqrt_a") {
    const CoefficientField& field = spec.field;
    spec.noise_shape = sample_on(grid, [&field](double x) { return std::sqrt(field.a(x)); });
  }
  validate_game_spec(spec, grid);
  return spec;
}

std::uint64_t fingerprint(const Scenario& scenario, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (unsigned char c : scenario.text) mix(c);
  for (int k = 0; k < 8; ++k) mix(static_cast<unsigned char>(seed >> (8 * k)));
  return h;
}

std::string fingerprint_hex(const Scenario& scenario, std::uint64_t seed) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fingerprint(scenario, seed)));
  return buf;
}

}  // namespace hetspde
