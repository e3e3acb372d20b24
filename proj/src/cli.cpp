#include "pcf/cli.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pcf/errors.hpp"
#include "pcf/io.hpp"
#include "pcf/spectral.hpp"

namespace pcf {

namespace fs = std::filesystem;
namespace ptree = boost::property_tree;
using Json = nlohmann::ordered_json;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"grid", {"backend", "n", "resolution", "period", "dealias"}},
      {"background", {"kind", "seed", "max_mode", "margin", "terms", "legendre"}},
      {"initial", {"kind", "seed", "max_mode", "margin", "terms", "legendre"}},
      {"flow",
       {"kind", "scheme", "dt_policy", "dt", "safety", "t_end", "normalization", "eps_pos", "solver_tol",
        "calabi_threshold", "stop_on_convergence"}},
      {"analyses", {"lichnerowicz", "decay_fit", "krf_compare", "futaki"}},
      {"output", {"sample_every", "snapshot_every"}},
  };
  return s;
}

const std::set<std::string> kTopLevelKeys = {"name", "description"};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Shortest text that reads back to the same double.
std::string shortest(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw, const char* what) {
  const std::string v = trim(raw);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(key, "expected " + std::string(what) + ", got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& raw) {
  const double x = parse_number<double>(key, raw, "a number");
  if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
  return x;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

template <typename Enum, typename Fn>
Enum parse_enum(const std::string& key, const std::string& raw, Fn from_string) {
  try {
    return from_string(trim(raw));
  } catch (const SpecError& e) {
    throw ConfigError(key, e.what());
  }
}

/// Flat view of one section with lookups by key.
class Section {
 public:
  Section(std::string name, const ptree::ptree* node) : name_(std::move(name)), node_(node) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (!node_) return std::nullopt;
    const auto child = node_->get_child_optional(ptree::ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    return child->data();
  }
  bool has(const std::string& key) const { return raw(key).has_value(); }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  std::string required(const std::string& key) const {
    auto v = raw(key);
    if (!v) throw ConfigError(path(key), "missing required key");
    return *v;
  }
  double number(const std::string& key, double fallback) const {
    auto v = raw(key);
    return v ? parse_double(path(key), *v) : fallback;
  }
  int integer(const std::string& key, int fallback) const {
    auto v = raw(key);
    return v ? parse_number<int>(path(key), *v, "an integer") : fallback;
  }
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
    auto v = raw(key);
    return v ? parse_number<std::uint64_t>(path(key), *v, "an unsigned integer") : fallback;
  }
  bool flag(const std::string& key, bool fallback) const {
    auto v = raw(key);
    return v ? parse_bool(path(key), *v) : fallback;
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    auto v = raw(key);
    return v ? trim(*v) : fallback;
  }
  void reject(const std::string& key, const std::string& reason) const {
    if (has(key)) throw ConfigError(path(key), reason);
  }

 private:
  std::string name_;
  const ptree::ptree* node_;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

PotentialSpec parse_potential(const Section& sec, int n) {
  PotentialSpec p;
  p.kind = parse_enum<PotentialSpec::Kind>(sec.path("kind"), sec.text("kind", "zero"), potential_kind_from_string);
  const std::string kind = to_string(p.kind);
  auto unused = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) sec.reject(k, std::string("not used by kind ") + kind);
  };
  switch (p.kind) {
    case PotentialSpec::Kind::Zero:
      unused({"seed", "max_mode", "margin", "terms", "legendre"});
      break;
    case PotentialSpec::Kind::Random:
      unused({"terms", "legendre"});
      p.seed = sec.u64("seed", 0);
      p.max_mode = sec.integer("max_mode", p.max_mode);
      p.target_margin = sec.number("margin", p.target_margin);
      break;
    case PotentialSpec::Kind::Fourier:
      unused({"seed", "max_mode", "margin", "legendre"});
      for (const auto& term : split(sec.required("terms"), ';')) {
        const auto w = words(term);
        if (w.size() != static_cast<std::size_t>(2 * n + 2))
          throw ConfigError(sec.path("terms"), "term '" + term + "' needs " + std::to_string(2 * n) +
                                                   " mode indices and two amplitudes");
        FourierTerm t;
        for (int a = 0; a < 2 * n; ++a) t.mode[a] = parse_number<int>(sec.path("terms"), w[a], "an integer");
        t.cos_amp = parse_double(sec.path("terms"), w[2 * n]);
        t.sin_amp = parse_double(sec.path("terms"), w[2 * n + 1]);
        p.terms.push_back(t);
      }
      break;
    case PotentialSpec::Kind::Legendre:
      unused({"seed", "max_mode", "margin", "terms"});
      for (const auto& w : words(sec.required("legendre"))) p.legendre.push_back(parse_double(sec.path("legendre"), w));
      break;
  }
  return p;
}

void validate_potential(const std::string& sec, const PotentialSpec& p, const GridSpec& grid) {
  const bool torus = grid.backend == Backend::TorusPeriodic;
  if (p.kind == PotentialSpec::Kind::Fourier && !torus)
    throw ConfigError(sec + ".kind", "fourier potentials need the torus backend");
  if (p.kind == PotentialSpec::Kind::Legendre && torus)
    throw ConfigError(sec + ".kind", "legendre potentials need the sphere backend");
  if (p.kind == PotentialSpec::Kind::Random) {
    if (!(p.target_margin > 0.0 && p.target_margin < 1.0)) throw ConfigError(sec + ".margin", "must lie in (0, 1)");
    const int limit = torus ? grid.resolution / 2 - 1 : grid.resolution - 1;
    if (p.max_mode < 1 || p.max_mode > limit)
      throw ConfigError(sec + ".max_mode", "must lie in [1, " + std::to_string(limit) + "]");
  }
  if (p.kind == PotentialSpec::Kind::Fourier) {
    if (p.terms.empty()) throw ConfigError(sec + ".terms", "needs at least one term");
    for (const auto& t : p.terms)
      for (int a = 0; a < 2 * grid.complex_dim; ++a)
        if (std::abs(t.mode[a]) >= grid.resolution / 2)
          throw ConfigError(sec + ".terms", "mode index beyond the resolved band");
  }
  if (p.kind == PotentialSpec::Kind::Legendre &&
      (p.legendre.empty() || p.legendre.size() > static_cast<std::size_t>(grid.resolution)))
    throw ConfigError(sec + ".legendre", "needs between 1 and N coefficients");
}

void write_potential(std::ostream& out, const char* sec, const PotentialSpec& p, int n) {
  out << "\n[" << sec << "]\n";
  out << "kind = " << to_string(p.kind) << "\n";
  switch (p.kind) {
    case PotentialSpec::Kind::Zero: break;
    case PotentialSpec::Kind::Random:
      out << "seed = " << p.seed << "\nmax_mode = " << p.max_mode << "\nmargin = " << shortest(p.target_margin)
          << "\n";
      break;
    case PotentialSpec::Kind::Fourier: {
      out << "terms = ";
      for (std::size_t k = 0; k < p.terms.size(); ++k) {
        if (k) out << "; ";
        for (int a = 0; a < 2 * n; ++a) out << p.terms[k].mode[a] << ' ';
        out << shortest(p.terms[k].cos_amp) << ' ' << shortest(p.terms[k].sin_amp);
      }
      out << "\n";
      break;
    }
    case PotentialSpec::Kind::Legendre:
      out << "legendre =";
      for (double c : p.legendre) out << ' ' << shortest(c);
      out << "\n";
      break;
  }
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

Json record_json(const DiagnosticsRecord& r) {
  Json j = Json::object();
  const auto values = diagnostics_values(r);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double v = values[k];
    if (std::isfinite(v))
      j[std::string(kDiagnosticsColumns[k])] = v;
    else
      j[std::string(kDiagnosticsColumns[k])] = nullptr;
  }
  return j;
}

Json error_object(const std::exception& e) {
  Json j;
  const auto* pe = dynamic_cast<const Error*>(&e);
  j["error"] = pe ? pe->kind() : "Exception";
  j["message"] = e.what();
  return j;
}

// Runs `fn` and stores its JSON, or the error it raised.
template <typename Fn>
Json guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return error_object(e);
  }
}

ScalarField probe_direction(const GridPtr& grid) {
  std::vector<double> v(grid->size());
  const double L = grid->spec().period;
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (grid->is_torus()) {
      const double k = 2 * std::numbers::pi / L;
      v[p] = std::cos(k * grid->coordinate(p, 0)) + 0.5 * std::sin(k * grid->coordinate(p, 1));
    } else {
      const double x = grid->coordinate(p);
      v[p] = x * x + 0.3 * x;
    }
  }
  return ScalarField(grid, std::move(v));
}

Json lichnerowicz_analysis(const MetricState& fin) {
  Json j;
  const auto rep = lambda_min(fin);
  j["lambda_min"] = rep.lambda_min;
  j["dimension"] = rep.dimension;
  j["method"] = rep.method;
  j["constraint_residuals"] = rep.constraint_residuals;
  const std::array<double, 3> eps = {1e-3, 1e-4, 1e-5};
  const auto err = jacobian_probe(fin, probe_direction(fin.grid()), eps);
  Json probe;
  probe["eps"] = eps;
  probe["error"] = err;
  std::vector<double> order;
  for (std::size_t k = 1; k < err.size(); ++k) order.push_back(std::log10(err[k - 1] / err[k]));
  probe["order"] = order;
  j["jacobian_probe"] = probe;
  return j;
}

Json decay_analysis(const Trajectory& tr, const MetricState& fin) {
  std::vector<double> t, cal, m0, m1;
  for (const auto& d : tr.diagnostics) {
    t.push_back(d.t);
    cal.push_back(d.calabi_energy);
    m0.push_back(d.mu0);
    m1.push_back(d.mu1);
  }
  Json j;
  const double gap = laplacian_gap(fin);
  j["laplacian_gap"] = gap;
  j["two_lambda1"] = 2.0 * gap;
  auto fit_one = [&](const std::vector<double>& series) {
    return guarded([&] {
      const auto [a, b] = default_decay_window(t, cal, series);
      const auto fit = fit_decay(t, series, a, b);
      Json f;
      f["theta"] = fit.theta;
      f["r_squared"] = fit.r_squared;
      f["t_start"] = fit.t_start;
      f["t_end"] = fit.t_end;
      f["samples"] = fit.samples;
      f["relative_error"] = std::abs(fit.theta - 2.0 * gap) / (2.0 * gap);
      return f;
    });
  };
  j["mu0"] = fit_one(m0);
  j["mu1"] = fit_one(m1);
  return j;
}

Json futaki_analysis(const Trajectory& tr, const MetricState& fin) {
  double worst = 0.0;
  for (const auto& d : tr.diagnostics) worst = std::max(worst, std::abs(d.futaki));
  const double scale = std::abs(tr.bg->sbar) * tr.bg->volume;
  Json j;
  j["max_abs"] = worst;
  j["relative_max"] = worst / scale;
  j["pairing_final"] = futaki_invariant(fin, FutakiForm::Pairing);
  j["curvature_final"] = futaki_invariant(fin, FutakiForm::Curvature);
  return j;
}

const char* scenario_texts[][3] = {
    {"torus-fixed-point", "the flat metric is a fixed point: the Calabi energy stays at zero and the potential does not move",
     R"(name = torus-fixed-point
description = Flat torus started at its cscK metric

[grid]
backend = torus
resolution = 32

[flow]
t_end = 0.1
stop_on_convergence = false

[output]
sample_every = 20
)"},
    {"torus-converge",
     "convergence to the flat metric: the Calabi energy falls below 1e-10 before t = 2 and the final metric is "
     "within 1e-5 of the flat one",
     R"(name = torus-converge
description = Curved torus background and random initial potential flowing to the flat metric

[grid]
backend = torus
resolution = 64

[background]
kind = random
seed = 1
margin = 0.5

[initial]
kind = random
seed = 2
margin = 0.5

[flow]
t_end = 2

[output]
sample_every = 50
)"},
    {"torus-decay",
     "exponential decay: rates fitted to mu0 and mu1 after the transient agree with twice the first Laplacian "
     "eigenvalue of the limit metric within 10%",
     R"(name = torus-decay
description = The torus-converge run with decay fits and the Laplacian gap at the limit metric

[grid]
backend = torus
resolution = 64

[background]
kind = random
seed = 1
margin = 0.5

[initial]
kind = random
seed = 2
margin = 0.5

[flow]
t_end = 2

[analyses]
decay_fit = true

[output]
sample_every = 50
)"},
    {"sphere-krf-compare",
     "on a canonical class the flow reproduces the Kähler-Ricci flow: the metrics agree to 1e-6 over t in [0, 1]",
     R"(name = sphere-krf-compare
description = Round sphere with an axisymmetric perturbation, run alongside the Kähler-Ricci flow

[grid]
backend = sphere
resolution = 64

[initial]
kind = random
seed = 3
max_mode = 4
margin = 0.5

[flow]
dt_policy = fixed
dt = 0.00025
t_end = 1
stop_on_convergence = false

[analyses]
krf_compare = true

[output]
sample_every = 40
)"},
    {"sphere-futaki",
     "the Futaki invariant of the axial field vanishes along the flow and its two integral forms agree",
     R"(name = sphere-futaki
description = Non-round axisymmetric sphere background with a random initial potential

[grid]
backend = sphere
resolution = 64

[background]
kind = random
seed = 5
max_mode = 4
margin = 0.5

[initial]
kind = random
seed = 6
max_mode = 4
margin = 0.5

[flow]
t_end = 0.5

[analyses]
futaki = true

[output]
sample_every = 40
)"},
    {"linearized-probe",
     "linearized operator: the finite-difference Jacobian matches to first order and the smallest constrained "
     "eigenvalue is positive",
     R"(name = linearized-probe
description = Short torus run followed by the Jacobian probe and the Lichnerowicz eigenvalue

[grid]
backend = torus
resolution = 32

[background]
kind = random
seed = 7
margin = 0.4

[initial]
kind = random
seed = 8
margin = 0.3

[flow]
t_end = 0.01

[analyses]
lichnerowicz = true

[output]
sample_every = 20
)"},
};

}  // namespace

void Scenario::validate() const {
  if (name.empty()) throw ConfigError("name", "must not be empty");
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
      throw ConfigError("name", "may only hold letters, digits, '-', '_' and '.'");
  const auto& g = config.background.grid;
  if (g.complex_dim != 1 && g.complex_dim != 2) throw ConfigError("grid.n", "must be 1 or 2");
  if (g.backend == Backend::SphereAxisymmetric && g.complex_dim != 1)
    throw ConfigError("grid.n", "the sphere backend has n = 1");
  if (g.resolution < 8) throw ConfigError("grid.resolution", "must be at least 8");
  if (g.backend == Backend::TorusPeriodic && g.resolution % 2 != 0)
    throw ConfigError("grid.resolution", "must be even on the torus");
  if (!(g.period > 0.0)) throw ConfigError("grid.period", "must be positive");
  validate_potential("background", config.background.rho, g);
  validate_potential("initial", config.initial, g);
  config.validate();
  const bool dense_ok = test_space_dimension(g) + 1 <= kMaxDenseDimension;
  if (analyses.lichnerowicz && !dense_ok)
    throw ConfigError("analyses.lichnerowicz", "test space too large for the dense eigensolve");
  if (analyses.decay_fit && !dense_ok)
    throw ConfigError("analyses.decay_fit", "test space too large for the dense eigensolve");
  if (analyses.futaki && g.backend != Backend::SphereAxisymmetric)
    throw ConfigError("analyses.futaki", "needs the sphere backend");
  if (analyses.krf_compare && config.flow != FlowKind::PseudoCalabi)
    throw ConfigError("analyses.krf_compare", "compares a pseudo-Calabi run with the Kähler-Ricci flow");
  if (snapshot_every < 0) throw ConfigError("output.snapshot_every", "must not be negative");
}

Scenario parse_config(const std::string& text) {
  ptree::ptree root;
  std::istringstream in(text);
  try {
    ptree::ini_parser::read_ini(in, root);
  } catch (const ptree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  std::map<std::string, const ptree::ptree*> sections;
  for (const auto& [key, node] : root) {
    if (schema().count(key)) {
      if (!node.data().empty()) throw ConfigError(key, "is a section name");
      sections[key] = &node;
      for (const auto& [sub, leaf] : node) {
        (void)leaf;
        if (!schema().at(key).count(sub)) throw ConfigError(key + "." + sub, "unknown key");
      }
    } else if (!kTopLevelKeys.count(key)) {
      throw ConfigError(key, node.empty() ? "unknown key" : "unknown section");
    }
  }
  auto section = [&](const std::string& name) {
    auto it = sections.find(name);
    return Section(name, it == sections.end() ? nullptr : it->second);
  };

  Scenario s;
  const auto name = root.get_child_optional(ptree::ptree::path_type("name", '\0'));
  if (!name) throw ConfigError("name", "missing required key");
  s.name = trim(name->data());
  if (auto d = root.get_child_optional(ptree::ptree::path_type("description", '\0'))) s.description = trim(d->data());

  const auto grid = section("grid");
  auto& g = s.config.background.grid;
  g.backend = parse_enum<Backend>(grid.path("backend"), grid.required("backend"), backend_from_string);
  g.complex_dim = grid.integer("n", 1);
  g.resolution = parse_number<int>(grid.path("resolution"), grid.required("resolution"), "an integer");
  g.period = grid.number("period", 1.0);
  g.dealias = grid.flag("dealias", false);

  s.config.background.rho = parse_potential(section("background"), g.complex_dim);
  s.config.initial = parse_potential(section("initial"), g.complex_dim);

  const auto flow = section("flow");
  auto& c = s.config;
  c.flow = parse_enum<FlowKind>(flow.path("kind"), flow.text("kind", to_string(c.flow)), flow_kind_from_string);
  c.scheme = parse_enum<Scheme>(flow.path("scheme"), flow.text("scheme", to_string(c.scheme)), scheme_from_string);
  const std::string policy = flow.text("dt_policy", "adaptive");
  if (policy == "adaptive") {
    flow.reject("dt", "only used with dt_policy = fixed");
    c.dt = {DtPolicy::Kind::Adaptive, flow.number("safety", 0.4)};
  } else if (policy == "fixed") {
    flow.reject("safety", "only used with dt_policy = adaptive");
    c.dt = {DtPolicy::Kind::Fixed, parse_double(flow.path("dt"), flow.required("dt"))};
  } else {
    throw ConfigError(flow.path("dt_policy"), "expected adaptive or fixed, got '" + policy + "'");
  }
  c.t_end = parse_double(flow.path("t_end"), flow.required("t_end"));
  c.normalization = parse_enum<Normalization>(flow.path("normalization"),
                                              flow.text("normalization", to_string(c.normalization)),
                                              normalization_from_string);
  c.eps_pos = flow.number("eps_pos", c.eps_pos);
  c.background.eps_pos = c.eps_pos;
  c.solver_tol = flow.number("solver_tol", c.solver_tol);
  c.calabi_threshold = flow.number("calabi_threshold", 0.0);
  c.stop_on_convergence = flow.flag("stop_on_convergence", true);

  const auto an = section("analyses");
  s.analyses.lichnerowicz = an.flag("lichnerowicz", false);
  s.analyses.decay_fit = an.flag("decay_fit", false);
  s.analyses.krf_compare = an.flag("krf_compare", false);
  s.analyses.futaki = an.flag("futaki", false);

  const auto out = section("output");
  c.sample_every = out.integer("sample_every", 1);
  s.snapshot_every = out.integer("snapshot_every", 0);

  s.validate();
  return s;
}

Scenario load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const Scenario& s) {
  std::ostringstream out;
  const auto& c = s.config;
  const auto& g = c.background.grid;
  out << "name = " << s.name << "\n";
  if (!s.description.empty()) out << "description = " << s.description << "\n";
  out << "\n[grid]\nbackend = " << to_string(g.backend) << "\nn = " << g.complex_dim
      << "\nresolution = " << g.resolution << "\nperiod = " << shortest(g.period)
      << "\ndealias = " << yes_no(g.dealias) << "\n";
  write_potential(out, "background", c.background.rho, g.complex_dim);
  write_potential(out, "initial", c.initial, g.complex_dim);
  out << "\n[flow]\nkind = " << to_string(c.flow) << "\nscheme = " << to_string(c.scheme) << "\n";
  if (c.dt.kind == DtPolicy::Kind::Adaptive)
    out << "dt_policy = adaptive\nsafety = " << shortest(c.dt.value) << "\n";
  else
    out << "dt_policy = fixed\ndt = " << shortest(c.dt.value) << "\n";
  out << "t_end = " << shortest(c.t_end) << "\nnormalization = " << to_string(c.normalization)
      << "\neps_pos = " << shortest(c.eps_pos) << "\nsolver_tol = " << shortest(c.solver_tol) << "\n";
  if (c.calabi_threshold > 0.0) out << "calabi_threshold = " << shortest(c.calabi_threshold) << "\n";
  out << "stop_on_convergence = " << yes_no(c.stop_on_convergence) << "\n";
  out << "\n[analyses]\nlichnerowicz = " << yes_no(s.analyses.lichnerowicz)
      << "\ndecay_fit = " << yes_no(s.analyses.decay_fit) << "\nkrf_compare = " << yes_no(s.analyses.krf_compare)
      << "\nfutaki = " << yes_no(s.analyses.futaki) << "\n";
  out << "\n[output]\nsample_every = " << c.sample_every << "\nsnapshot_every = " << s.snapshot_every << "\n";
  return out.str();
}

void apply_seed(Scenario& s, std::uint64_t seed) {
  if (s.config.initial.kind != PotentialSpec::Kind::Random)
    throw ConfigError("initial.seed", "--seed needs a random initial potential");
  s.config.initial.seed = seed;
}

const std::vector<BundledScenario>& bundled_scenarios() {
  static const std::vector<BundledScenario> all = [] {
    std::vector<BundledScenario> v;
    for (const auto& t : scenario_texts) v.push_back({t[0], t[1], t[2]});
    return v;
  }();
  return all;
}

Scenario bundled_scenario(const std::string& name) {
  for (const auto& b : bundled_scenarios())
    if (b.name == name) return parse_config(b.text);
  throw UnknownScenario("unknown scenario '" + name + "'");
}

std::string list_scenarios() {
  std::ostringstream out;
  for (const auto& b : bundled_scenarios()) out << b.name << "\n";
  return out.str();
}

std::string describe(const std::string& name) {
  const auto s = bundled_scenario(name);
  for (const auto& b : bundled_scenarios())
    if (b.name == name) {
      std::ostringstream out;
      out << b.name << ": " << s.description << "\n";
      out << "checks: " << b.exercises << "\n\n";
      out << serialize_config(s);
      return out.str();
    }
  throw UnknownScenario("unknown scenario '" + name + "'");
}

ScenarioResult execute_scenario(const Scenario& s) {
  s.validate();
  ScenarioResult r;
  r.trajectory = run(s.config);
  const auto& tr = r.trajectory;
  const auto& bg = *tr.bg;
  const auto& g = s.config.background.grid;
  auto& j = r.summary;
  j["schema"] = kSummarySchema;
  j["csv_schema"] = kDiagnosticsSchema;
  j["name"] = s.name;
  j["termination"] = to_string(tr.termination);
  j["message"] = tr.message;
  j["steps"] = tr.steps;
  j["samples"] = tr.times.size();
  j["t_final"] = tr.times.empty() ? 0.0 : tr.times.back();
  j["background"] = {{"backend", to_string(g.backend)}, {"n", g.complex_dim},         {"resolution", g.resolution},
                     {"sbar", bg.sbar},                 {"volume", bg.volume},        {"lambda_class", bg.lambda_class}};
  j["calabi_threshold"] = tr.calabi_threshold;
  j["initial"] = tr.diagnostics.empty() ? Json() : record_json(tr.diagnostics.front());
  j["final"] = tr.diagnostics.empty() ? Json() : record_json(tr.diagnostics.back());

  const bool normal = tr.termination == Termination::ReachedTEnd || tr.termination == Termination::ConvergedToCscK;
  const Json skipped = {{"skipped", "the flow did not terminate normally"}};
  std::optional<MetricState> fin;
  if (normal && !tr.phis.empty()) fin = assemble_state(tr.bg, tr.phis.back(), s.config.eps_pos);

  if (s.analyses.lichnerowicz) j["lichnerowicz"] = fin ? guarded([&] { return lichnerowicz_analysis(*fin); }) : skipped;
  if (s.analyses.decay_fit) {
    j["decay_fit"] = fin ? guarded([&] { return decay_analysis(tr, *fin); }) : skipped;
    const auto& mu0 = j["decay_fit"];
    j["theta"] = mu0.contains("mu0") && mu0["mu0"].contains("theta") ? mu0["mu0"]["theta"] : Json();
  }
  if (s.analyses.futaki) j["futaki"] = fin ? guarded([&] { return futaki_analysis(tr, *fin); }) : skipped;
  if (s.analyses.krf_compare) {
    j["krf_compare"] = guarded([&] {
      auto kc = s.config;
      kc.flow = FlowKind::KahlerRicci;
      kc.normalization = Normalization::CZero;
      const auto kt = run(kc);
      const double tol = 1e-9 * std::max(1.0, s.config.t_end);
      double sup = 0.0;
      const std::size_t m = std::min(tr.times.size(), kt.times.size());
      for (std::size_t k = 0; k < m; ++k) {
        if (std::abs(tr.times[k] - kt.times[k]) > tol) break;
        const auto a = assemble_state(tr.bg, tr.phis[k], 0.0);
        const auto b = assemble_state(kt.bg, kt.phis[k], 0.0);
        const double d = metric_distance(a, b);
        r.krf_distance.emplace_back(tr.times[k], d);
        sup = std::max(sup, d);
      }
      Json k;
      k["sup_metric_distance"] = sup;
      k["compared_samples"] = r.krf_distance.size();
      k["krf_termination"] = to_string(kt.termination);
      if (!kt.message.empty()) k["krf_message"] = kt.message;
      return k;
    });
  }
  return r;
}

void write_artifacts(const Scenario& s, const ScenarioResult& r, const fs::path& out) {
  try {
    fs::create_directories(out / "snapshots");
    {
      std::ofstream csv(out / "diagnostics.csv");
      if (!csv) throw IoError("cannot write " + (out / "diagnostics.csv").string());
      write_diagnostics_csv(csv, r.trajectory.diagnostics);
      if (!csv) throw IoError("failed writing " + (out / "diagnostics.csv").string());
    }
    {
      std::ofstream js(out / "summary.json");
      if (!js) throw IoError("cannot write " + (out / "summary.json").string());
      js << r.summary.dump(2) << "\n";
    }
    const auto& tr = r.trajectory;
    for (std::size_t k = 0; k < tr.phis.size(); ++k) {
      const bool keep = k + 1 == tr.phis.size() || (s.snapshot_every > 0 ? k % s.snapshot_every == 0 : k == 0);
      if (!keep) continue;
      char name[32];
      std::snprintf(name, sizeof(name), "phi_%06zu.pcf1", k);
      write_snapshot(out / "snapshots" / name, make_snapshot(tr.phis[k], tr.times[k]));
    }
    if (!r.krf_distance.empty()) {
      std::ofstream csv(out / "krf_compare.csv");
      if (!csv) throw IoError("cannot write " + (out / "krf_compare.csv").string());
      csv << "t,krf_metric_distance\n";
      for (const auto& [t, d] : r.krf_distance) csv << format_double(t) << ',' << format_double(d) << '\n';
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
}

std::string error_json(const std::exception& e) {
  Json j = error_object(e);
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["key"] = ce->key();
  return j.dump();
}

int run_scenario(const Scenario& s, const fs::path& out, std::ostream& err) {
  try {
    const auto r = execute_scenario(s);
    write_artifacts(s, r, out);
    const auto term = r.trajectory.termination;
    if (term == Termination::ReachedTEnd || term == Termination::ConvergedToCscK) return kExitOk;
    Json j;
    j["error"] = to_string(term);
    j["termination"] = to_string(term);
    j["message"] = r.trajectory.message;
    j["scenario"] = s.name;
    err << j.dump() << "\n";
    return kExitRuntime;
  } catch (const ConfigError& e) {
    err << error_json(e) << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << error_json(e) << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << error_json(e) << "\n";
    return kExitRuntime;
  }
}

std::vector<Scenario> load_batch(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<Scenario> out;
  std::set<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const fs::path candidate = path.parent_path() / line;
    auto s = fs::exists(candidate) ? load_config(candidate) : bundled_scenario(line);
    if (!names.insert(s.name).second) throw ConfigError("name", "duplicate scenario '" + s.name + "' in batch");
    out.push_back(std::move(s));
  }
  return out;
}

int run_batch(const std::vector<Scenario>& scenarios, const fs::path& out, int threads, std::ostream& err) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{kExitOk};
  std::mutex err_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < scenarios.size(); k = next++) {
      std::ostringstream local;
      const int code = run_scenario(scenarios[k], out / scenarios[k].name, local);
      int prev = worst.load();
      while (code > prev && !worst.compare_exchange_weak(prev, code)) {
      }
      std::lock_guard<std::mutex> lock(err_mutex);
      err << local.str();
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(scenarios.size())));
  std::vector<std::thread> pool;
  for (int k = 0; k + 1 < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return worst.load();
}

}  // namespace pcf
