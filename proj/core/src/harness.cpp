#include "mixbec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "csv.hpp"
#include "json.hpp"
#include "mixbec/error.hpp"
#include "mixbec/indicators.hpp"

namespace mixbec {

const char* const kVersion = "mixbec 0.1.0";

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Value parsing

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  if (used != t.size() || !std::isfinite(v)) throw ConfigError(key, "expected a finite number, got '" + text + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  if (used != t.size()) throw ConfigError(key, "expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + text + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ", \t")) out.push_back(to_double(key, p));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& p : split(text, ", \t")) {
    const long long v = to_integer(key, p);
    if (v < 1 || v > 1000000) throw ConfigError(key, "particle numbers must be >= 1 (got " + p + ")");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

PotentialShape to_potential(const std::string& key, const std::string& text) {
  const auto parts = split(text, " \t");
  static const std::set<std::string> kinds{"zero", "gaussian", "lorentzian", "barrier"};
  if (parts.empty() || !kinds.count(parts[0])) {
    throw ConfigError(key, "expected 'zero' or '<gaussian|lorentzian|barrier> amplitude width', got '" + text + "'");
  }
  PotentialShape p;
  p.kind = parts[0];
  if (p.kind == "zero") {
    if (parts.size() != 1) throw ConfigError(key, "'zero' takes no parameters");
    return p;
  }
  if (parts.size() != 3) throw ConfigError(key, "expected '" + p.kind + " amplitude width'");
  p.amplitude = to_double(key, parts[1]);
  p.width = to_double(key, parts[2]);
  if (!(p.width > 0.0)) throw ConfigError(key, "width must be positive");
  return p;
}

OrbitalShape to_orbital(const std::string& key, const std::string& text) {
  const auto parts = split(text, " \t");
  if (parts.size() != 3) throw ConfigError(key, "expected 'center width momentum', got '" + text + "'");
  OrbitalShape o{to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
  if (!(o.width > 0.0)) throw ConfigError(key, "width must be positive");
  return o;
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

std::string fmt(double x) { return detail::format_g17(x); }

}  // namespace

// ---------------------------------------------------------------------------
// Shapes

double PotentialShape::operator()(double r) const {
  const double s = r / width;
  if (kind == "gaussian") return amplitude * std::exp(-s * s);
  if (kind == "lorentzian") return amplitude / (1.0 + s * s);
  if (kind == "barrier") return r < width ? amplitude : 0.0;
  return 0.0;
}

std::function<double(double)> PotentialShape::function() const {
  if (kind == "zero") return [](double) { return 0.0; };
  const PotentialShape copy = *this;
  return [copy](double r) { return copy(r); };
}

std::string PotentialShape::describe() const {
  if (kind == "zero") return "zero";
  return kind + " " + fmt(amplitude) + " " + fmt(width);
}

Field OrbitalShape::sample(const Grid& grid) const {
  const OrbitalShape o = *this;
  const int dim = grid.dim();
  Field f = sample_field(grid, [o, dim](const std::array<double, 3>& x) {
    double r2 = (x[0] - o.center) * (x[0] - o.center);
    for (int d = 1; d < dim; ++d) r2 += x[d] * x[d];
    return std::exp(-r2 / (2.0 * o.width * o.width)) * std::exp(complex(0.0, o.momentum * x[0]));
  });
  normalize(f);
  return f;
}

std::string OrbitalShape::describe() const { return fmt(center) + " " + fmt(width) + " " + fmt(momentum); }

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  {
    std::istringstream in(text);
    try {
      pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("document", "line " + std::to_string(e.line()) + ": " + e.message());
    }
  }

  ExperimentConfig c;
  c.source = text;
  std::vector<int> n1s, n2s;

  using Handler = std::function<void(const std::string& key, const std::string& value)>;
  const std::map<std::string, std::map<std::string, Handler>> sections{
      {"grid",
       {
           {"dim", [&](auto& k, auto& v) { c.dim = static_cast<int>(to_integer(k, v)); }},
           {"points", [&](auto& k, auto& v) { c.points = static_cast<int>(to_integer(k, v)); }},
           {"length", [&](auto& k, auto& v) { c.length = to_double(k, v); }},
       }},
      {"system",
       {
           {"scaling",
            [&](auto& k, auto& v) {
              if (v == "mean_field") {
                c.scaling = Scaling::mean_field;
              } else if (v == "beta_family") {
                c.scaling = Scaling::beta_family;
              } else {
                throw ConfigError(k, "expected mean_field or beta_family, got '" + v + "'");
              }
            }},
           {"beta", [&](auto& k, auto& v) { c.beta = to_double(k, v); }},
           {"V1", [&](auto& k, auto& v) { c.V1 = to_potential(k, v); }},
           {"V2", [&](auto& k, auto& v) { c.V2 = to_potential(k, v); }},
           {"V12", [&](auto& k, auto& v) { c.V12 = to_potential(k, v); }},
           {"u0", [&](auto& k, auto& v) { c.u0 = to_orbital(k, v); }},
           {"v0", [&](auto& k, auto& v) { c.v0 = to_orbital(k, v); }},
           {"w0", [&](auto& k, auto& v) { c.w0 = to_orbital(k, v); }},
           {"effective",
            [&](auto& k, auto& v) {
              static const std::map<std::string, CouplingMode> modes{{"hartree", CouplingMode::hartree},
                                                                     {"gp", CouplingMode::gross_pitaevskii},
                                                                     {"rabi", CouplingMode::rabi},
                                                                     {"spin1", CouplingMode::spin1}};
              const auto it = modes.find(v);
              if (it == modes.end()) throw ConfigError(k, "expected hartree, gp, rabi or spin1, got '" + v + "'");
              c.effective = it->second;
            }},
           {"kinetic",
            [&](auto& k, auto& v) {
              if (v == "spectral") {
                c.kinetic = KineticMode::spectral;
              } else if (v == "stencil") {
                c.kinetic = KineticMode::stencil;
              } else {
                throw ConfigError(k, "expected spectral or stencil, got '" + v + "'");
              }
            }},
           {"c1", [&](auto& k, auto& v) { c.c1 = to_double(k, v); }},
           {"a1", [&](auto& k, auto& v) { c.a1 = to_double(k, v); }},
           {"a2", [&](auto& k, auto& v) { c.a2 = to_double(k, v); }},
           {"a12", [&](auto& k, auto& v) { c.a12 = to_double(k, v); }},
           {"a", [&](auto& k, auto& v) { c.a = to_double(k, v); }},
           {"rabi_B", [&](auto& k, auto& v) { c.rabi_B = to_double(k, v); }},
           {"spin_fractions", [&](auto& k, auto& v) { c.spin_fractions = to_doubles(k, v); }},
           {"seed",
            [&](auto& k, auto& v) {
              const long long s = to_integer(k, v);
              require(s >= 0, k, "seed must be nonnegative");
              c.seed = static_cast<std::uint64_t>(s);
            }},
       }},
      {"ladder",
       {
           {"N1", [&](auto& k, auto& v) { n1s = to_ints(k, v); }},
           {"N2", [&](auto& k, auto& v) { n2s = to_ints(k, v); }},
           {"ratio_fixed", [&](auto& k, auto& v) { c.ratio_fixed = to_bool(k, v); }},
           {"dimension_cap",
            [&](auto& k, auto& v) {
              const long long cap = to_integer(k, v);
              require(cap >= 1, k, "cap must be positive");
              c.dimension_cap = static_cast<std::size_t>(cap);
            }},
       }},
      {"time",
       {
           {"T", [&](auto& k, auto& v) { c.T = to_double(k, v); }},
           {"dt", [&](auto& k, auto& v) { c.dt = to_double(k, v); }},
           {"sample_every", [&](auto& k, auto& v) { c.sample_every = static_cast<int>(to_integer(k, v)); }},
           {"krylov_dimension", [&](auto& k, auto& v) { c.krylov_dimension = static_cast<int>(to_integer(k, v)); }},
           {"krylov_tolerance", [&](auto& k, auto& v) { c.krylov_tolerance = to_double(k, v); }},
       }},
      {"indicators",
       {
           {"xi", [&](auto& k, auto& v) { c.xi = to_double(k, v); }},
           {"probe_time", [&](auto& k, auto& v) { c.probe_time = to_double(k, v); }},
           {"derivative", [&](auto& k, auto& v) { c.derivative = to_bool(k, v); }},
       }},
      {"output",
       {
           {"dir", [&](auto&, auto& v) { c.out_dir = v; }},
           {"prefix", [&](auto&, auto& v) { c.prefix = v; }},
       }},
      {"scattering",
       {
           {"potential", [&](auto& k, auto& v) { c.scattering.potential = to_potential(k, v); }},
           {"beta", [&](auto& k, auto& v) { c.scattering.beta = to_double(k, v); }},
           {"N", [&](auto& k, auto& v) { c.scattering.particles = to_doubles(k, v); }},
           {"r_max", [&](auto& k, auto& v) { c.scattering.r_max = to_double(k, v); }},
           {"samples", [&](auto& k, auto& v) { c.scattering.samples = static_cast<int>(to_integer(k, v)); }},
           {"calibrate", [&](auto& k, auto& v) { c.scattering.calibrate = to_bool(k, v); }},
           {"max_shell_ratio", [&](auto& k, auto& v) { c.scattering.max_shell_ratio = to_double(k, v); }},
       }},
  };

  for (const auto& [section, body] : tree) {
    const auto s = sections.find(section);
    if (s == sections.end()) {
      if (body.empty()) throw ConfigError(section, "key outside of any known section");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body) {
      const std::string path = section + "." + key;
      const auto h = s->second.find(key);
      if (h == s->second.end()) throw ConfigError(path, "unknown key");
      h->second(path, trim(value.data()));
    }
  }

  // Validation.
  require(c.dim >= 1 && c.dim <= 3, "grid.dim", "must be 1, 2 or 3");
  require(c.points >= 4, "grid.points", "need at least 4 points per axis");
  require(c.length > 0.0, "grid.length", "must be positive");
  require(c.beta > 0.0 && c.beta <= 1.0, "system.beta", "must lie in (0, 1]");
  require(c.c1 >= 0.0 && c.c1 <= 1.0, "system.c1", "must lie in [0, 1]");
  require(c.spin_fractions.size() == 3, "system.spin_fractions", "expected three fractions");
  double total = 0.0;
  for (double f : c.spin_fractions) {
    require(f >= 0.0, "system.spin_fractions", "fractions must be nonnegative");
    total += f;
  }
  require(total > 0.0, "system.spin_fractions", "fractions must not all vanish");

  require(n1s.size() == n2s.size(), n1s.size() < n2s.size() ? "ladder.N1" : "ladder.N2",
          "N1 and N2 lists must have the same length");
  for (std::size_t i = 0; i < n1s.size(); ++i) c.ladder.push_back({n1s[i], n2s[i]});
  if (!c.ladder.empty()) require(c.dim == 1, "grid.dim", "many-body sweeps run on 1D grids");
  for (const auto& e : c.ladder) {
    const double d = basis_dimension(c.points, e.n1, e.n2);
    if (d > static_cast<double>(c.dimension_cap)) {
      std::ostringstream msg;
      msg << "entry (" << e.n1 << "," << e.n2 << ") has basis dimension " << std::llround(d) << " on " << c.points
          << " sites, exceeding the cap " << c.dimension_cap;
      throw ConfigError("ladder.N1", msg.str());
    }
    if (c.ratio_fixed) {
      const auto& f = c.ladder.front();
      require(static_cast<long long>(e.n1) * f.n2 == static_cast<long long>(f.n1) * e.n2, "ladder.ratio_fixed",
              "N1 / (N1 + N2) differs across the ladder");
    }
  }

  require(c.T > 0.0, "time.T", "must be positive");
  require(c.dt > 0.0 && c.dt <= c.T, "time.dt", "must lie in (0, T]");
  require(c.sample_every >= 1, "time.sample_every", "must be >= 1");
  require(c.krylov_dimension >= 2, "time.krylov_dimension", "must be >= 2");
  require(c.krylov_tolerance > 0.0, "time.krylov_tolerance", "must be positive");
  require(c.xi > 0.0 && c.xi < 0.5, "indicators.xi", "must lie in (0, 1/2)");
  require(c.probe_time >= 0.0 && c.probe_time <= c.T, "indicators.probe_time", "must lie in [0, T]");
  require(!c.out_dir.empty(), "output.dir", "must not be empty");
  require(!c.prefix.empty() && c.prefix.find('/') == std::string::npos, "output.prefix",
          "must be a nonempty file-name stem");

  auto& s = c.scattering;
  require(s.beta > 0.0 && s.beta <= 1.0, "scattering.beta", "must lie in (0, 1]");
  require(!s.particles.empty(), "scattering.N", "need at least one particle number");
  for (double n : s.particles) require(n >= 1.0, "scattering.N", "particle numbers must be >= 1");
  require(s.r_max > 2.0, "scattering.r_max", "must exceed 2 (units of the support radius)");
  require(s.samples >= 1000, "scattering.samples", "must be >= 1000");
  require(s.max_shell_ratio > 1.0, "scattering.max_shell_ratio", "must exceed 1");
  require(s.potential.kind != "gaussian" && s.potential.kind != "lorentzian", "scattering.potential",
          "needs a compactly supported profile (zero or barrier)");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// ---------------------------------------------------------------------------
// Sweeps

HamiltonianSpec manybody_spec(const ExperimentConfig& config, const LadderEntry& entry) {
  HamiltonianSpec spec;
  spec.scaling = config.scaling;
  spec.beta = config.beta;
  spec.n1 = entry.n1;
  spec.n2 = entry.n2;
  if (config.V1.kind != "zero") spec.V1 = config.V1.function();
  if (config.V2.kind != "zero") spec.V2 = config.V2.function();
  if (config.V12.kind != "zero") spec.V12 = config.V12.function();
  return spec;
}

CouplingSpec sweep_coupling(const ExperimentConfig& config, const Grid& grid, const LadderEntry& entry) {
  auto sample = [&](const PotentialShape& V, double N) {
    if (config.scaling == Scaling::mean_field) return sample_displacement(grid, V.function());
    // N w(d) with w the beta-family pair amplitude, so that the Hartree flow
    // carries the same per-pair strength as the many-body Hamiltonian.
    const double amp = std::pow(N, 2.0 * config.beta);
    const double len = std::pow(N, config.beta);
    const auto f = V.function();
    return sample_displacement(grid, [=](double r) { return amp * f(len * r); });
  };
  auto spec = hartree_spec(sample(config.V1, entry.n1), sample(config.V2, entry.n2),
                           sample(config.V12, entry.n1 + entry.n2),
                           static_cast<double>(entry.n1) / (entry.n1 + entry.n2));
  spec.kinetic = KineticMode::stencil;
  return spec;
}

EntryReport run_entry(const ExperimentConfig& config, const LadderEntry& entry) {
  EntryReport rep;
  rep.entry = entry;
  rep.alpha_probe = kNaN;
  rep.manybody_energy = kNaN;
  rep.effective_energy = kNaN;
  try {
    const Grid grid = make_grid(1, config.points, config.length);
    const auto basis = build_basis(grid, entry.n1, entry.n2, config.dimension_cap);
    rep.dimension = basis->size();
    const auto spec = manybody_spec(config, entry);
    const Hamiltonian H(spec, basis);
    const SplitStepIntegrator integrator(grid, sweep_coupling(config, grid, entry));

    OrbitalState orb{{config.u0.sample(grid), config.v0.sample(grid)}, 0.0};
    ManyBodyState psi = product_state(orb.components[0], orb.components[1], basis);
    rep.manybody_energy = manybody_energy(H, psi);
    rep.effective_energy = hartree_energy(orb, integrator.spec());

    KrylovOptions kopt;
    kopt.dimension = config.krylov_dimension;
    kopt.tolerance = config.krylov_tolerance;

    const long long steps = std::llround(config.T / config.dt);
    const long long probe_step = std::llround(config.probe_time / config.dt);
    const bool derivative = config.derivative && config.scaling == Scaling::mean_field;
    const auto wm = weight_m(entry.n1, config.xi);
    const auto ws = weight_s(entry.n1);
    const auto wn = weight_n(entry.n1);

    long long psi_step = 0;
    for (long long k = 0; k <= steps; ++k) {
      if (k > 0) orb = integrator.step(orb, config.dt);
      const bool sample = k % config.sample_every == 0 || k == steps || k == probe_step;
      if (!sample) continue;
      if (k > psi_step) {
        psi = propagate(H, psi, static_cast<double>(k - psi_step) * config.dt, kopt);
        psi_step = k;
      }
      const Field& u = orb.components[0];
      const Field& v = orb.components[1];
      // The split-step flow preserves the norm only up to rounding.
      Field un = u, vn = v;
      normalize(un);
      normalize(vn);

      IndicatorSample row;
      row.t = static_cast<double>(k) * config.dt;
      row.alpha_11 = alpha_11(psi, un, vn);
      row.trace_dist = trace_distance(reduce(psi, MarginalKind::pair), un, vn);
      row.alpha_10 = alpha_10(psi, un);
      row.alpha_01 = alpha_01(psi, vn);
      if (derivative) {
        const auto d = derivative_decomposition(psi, un, vn, spec);
        row.c_v1_im = d.v1.imag();
        row.c_v2_im = d.v2.imag();
        row.c_v12_im = d.v12.imag();
      } else {
        row.c_v1_im = row.c_v2_im = row.c_v12_im = kNaN;
      }
      const auto P = counting_projectors(basis, un, Species::a);
      row.weight_s = weight_expectation(psi, ws, P);
      row.weight_n = weight_expectation(psi, wn, P);
      row.weight_m = weight_expectation(psi, wm, P);
      rep.samples.push_back(row);
      if (k == probe_step) {
        rep.alpha_probe = row.alpha_11;
        rep.probe_time = row.t;
      }
    }
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.message = e.what();
  }
  return rep;
}

SweepReport run_convergence_sweep(const ExperimentConfig& config, int threads) {
  SweepReport report;
  report.seed = config.seed;
  report.entries.resize(config.ladder.size());
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(config.ladder.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < config.ladder.size(); i = next++) {
      report.entries[i] = run_entry(config, config.ladder[i]);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<double> xs, ys;
  for (const auto& e : report.entries) {
    if (e.ok && e.alpha_probe > 0.0 && std::isfinite(e.alpha_probe)) {
      xs.push_back(std::log(static_cast<double>(e.entry.n1 + e.entry.n2)));
      ys.push_back(std::log(e.alpha_probe));
    }
  }
  report.fit_exponent = kNaN;
  if (xs.size() >= 3) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double den = n * sxx - sx * sx;
    if (den > 0.0) report.fit_exponent = (n * sxy - sx * sy) / den;
  }
  return report;
}

std::vector<std::string> emit_report(const SweepReport& report, const ExperimentConfig& config,
                                     const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());

  std::vector<std::string> written;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& e : report.entries) {
    const std::string name = config.prefix + "_" + std::to_string(e.entry.n1) + "_" + std::to_string(e.entry.n2) + ".csv";
    const std::string path = (fs::path(dir) / name).string();
    detail::CsvWriter csv(path);
    csv.header({"t", "alpha_11", "trace_dist", "alpha_10", "alpha_01", "C_V1_im", "C_V2_im", "C_V12_im", "weight_s",
                "weight_n", "weight_m"});
    for (const auto& s : e.samples) {
      csv.row(std::vector<double>{s.t, s.alpha_11, s.trace_dist, s.alpha_10, s.alpha_01, s.c_v1_im, s.c_v2_im,
                                  s.c_v12_im, s.weight_s, s.weight_n, s.weight_m});
    }
    written.push_back(path);
    files.push_back({{"N1", e.entry.n1}, {"N2", e.entry.n2}, {"file", name}, {"status", e.ok ? "ok" : "error"}});
  }

  const std::string summary = (fs::path(dir) / "summary.csv").string();
  {
    detail::CsvWriter csv(summary);
    csv.header({"N1", "N2", "dimension", "status", "probe_time", "alpha_probe", "energy_manybody", "energy_effective",
                "energy_gap", "fit_exponent", "message"});
    for (const auto& e : report.entries) {
      csv.row({std::to_string(e.entry.n1), std::to_string(e.entry.n2), std::to_string(e.dimension),
               e.ok ? "ok" : "error", fmt(e.probe_time), fmt(e.alpha_probe), fmt(e.manybody_energy),
               fmt(e.effective_energy), fmt(e.energy_gap()), fmt(report.fit_exponent), e.message});
    }
  }
  written.push_back(summary);

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::json manifest{
      {"version", kVersion},
      {"seed", report.seed},
      {"generated", stamp},
      {"config", config.source},
      {"scaling", to_string(config.scaling)},
      {"grid", {{"dim", config.dim}, {"points", config.points}, {"length", config.length}}},
      {"potentials", {{"V1", config.V1.describe()}, {"V2", config.V2.describe()}, {"V12", config.V12.describe()}}},
      {"time", {{"T", config.T}, {"dt", config.dt}, {"probe_time", config.probe_time}}},
      {"fit_exponent", std::isfinite(report.fit_exponent) ? nlohmann::json(report.fit_exponent) : nlohmann::json()},
      {"entries", files},
      {"summary", "summary.csv"},
  };
  const std::string mpath = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(mpath, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + mpath + "' for writing");
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + mpath + "'");
  written.push_back(mpath);
  return written;
}

// ---------------------------------------------------------------------------
// Effective and scattering runs

Trajectory run_effective(const ExperimentConfig& config) {
  const Grid grid = make_grid(config.dim, config.points, config.length);
  const Field u = config.u0.sample(grid);
  const Field v = config.v0.sample(grid);
  CouplingSpec spec;
  OrbitalState s;
  switch (config.effective) {
    case CouplingMode::hartree:
      spec = hartree_spec(sample_displacement(grid, config.V1.function()),
                          sample_displacement(grid, config.V2.function()),
                          sample_displacement(grid, config.V12.function()), config.c1);
      s = {{u, v}, 0.0};
      break;
    case CouplingMode::gross_pitaevskii:
      spec = gp_spec(config.a1, config.a2, config.a12, config.c1);
      s = {{u, v}, 0.0};
      break;
    case CouplingMode::rabi: {
      const double B = config.rabi_B;
      spec = rabi_spec(config.a, [B](double) { return B; });
      s = {{u, Field(grid)}, 0.0};
      break;
    }
    case CouplingMode::spin1: {
      spec = spin1_spec(config.a);
      double total = 0.0;
      for (double f : config.spin_fractions) total += f;
      std::vector<Field> comps{u, v, config.w0.sample(grid)};
      for (int c = 0; c < 3; ++c) {
        const double scale = std::sqrt(config.spin_fractions[c] / total);
        for (auto& z : comps[c].values) z *= scale;
      }
      s = {comps, 0.0};
      break;
    }
  }
  spec.kinetic = config.kinetic;
  return evolve(s, spec, config.T, config.dt, config.sample_every);
}

std::vector<ScatteringRow> run_scattering(const ExperimentConfig& config, ScatteringResult* unscaled) {
  const auto& sc = config.scattering;
  const RadialPotential V = sc.potential.kind == "zero"
                                ? RadialPotential::zero()
                                : RadialPotential::square_barrier(sc.potential.amplitude, sc.potential.width);
  ScatteringOptions opts;
  opts.samples_per_support = sc.samples;
  const auto base = scattering_length(V, sc.r_max * V.support_radius, opts);
  if (unscaled) *unscaled = base;

  std::vector<ScatteringRow> rows;
  for (double N : sc.particles) {
    ScatteringRow row;
    row.particles = N;
    row.shell_ratio = kNaN;
    row.residual = kNaN;
    try {
      const auto scaled = scale_potential(V, N, sc.beta);
      const auto res = scattering_length(scaled, sc.r_max * scaled.support_radius, opts);
      row.scattering_length = res.scattering_length;
      row.norms = g_norms(res);
      if (sc.calibrate) {
        CalibrationOptions copt;
        copt.max_shell_ratio = sc.max_shell_ratio;
        const auto cal = calibrate_W(scaled, box_template(base.scattering_length, sc.beta, N, PairSpecies::one), copt);
        row.shell_ratio = cal.shell.shell_ratio();
        row.residual = cal.residual;
        row.monotone_bracket = cal.monotone_bracket;
      }
    } catch (const std::exception& e) {
      row.message = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_scattering_csv(const std::string& path, const std::vector<ScatteringRow>& rows) {
  detail::CsvWriter csv(path);
  csv.header({"N", "scattering_length", "shell_ratio", "residual", "monotone_bracket", "g_l1", "g_l2", "g_linf",
              "message"});
  for (const auto& r : rows) {
    csv.row({fmt(r.particles), fmt(r.scattering_length), fmt(r.shell_ratio), fmt(r.residual),
             r.monotone_bracket ? "true" : "false", fmt(r.norms.l1), fmt(r.norms.l2), fmt(r.norms.linf), r.message});
  }
}

void write_profile_csv(const std::string& path, const ScatteringResult& result) {
  detail::CsvWriter csv(path);
  csv.header({"r", "f", "g"});
  for (std::size_t i = 0; i < result.radii.size(); ++i) {
    csv.row(std::vector<double>{result.radii[i], result.f[i], result.g[i]});
  }
}

// ---------------------------------------------------------------------------
// Invariant suite

namespace {

using Vec = std::vector<complex>;

Vec random_coefficients(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Vec v(n);
  double s = 0.0;
  for (auto& z : v) {
    z = {d(rng), d(rng)};
    s += std::norm(z);
  }
  for (auto& z : v) z /= std::sqrt(s);
  return v;
}

Field random_field(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Field f(g);
  for (auto& z : f.values) z = {d(rng), d(rng)};
  normalize(f);
  return f;
}

CheckResult check(const std::string& name, double deviation, double tolerance) {
  std::ostringstream s;
  s << "max deviation " << fmt(deviation) << " (tolerance " << tolerance << ")";
  return {name, deviation <= tolerance, s.str()};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  auto guarded = [&](const std::string& name, const std::function<CheckResult()>& body) {
    try {
      out.push_back(body());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("error: ") + e.what()});
    }
  };

  guarded("scattering.scaling_law", [&] {
    const auto V = RadialPotential::square_barrier(2.0, 1.0);
    const double a = scattering_length(V, 4.0).scattering_length;
    double dev = 0.0;
    for (double N : {2.0, 4.0, 8.0}) {
      const double aN = scattering_length(scale_potential(V, N, 1.0), 4.0 / N).scattering_length;
      dev = std::max(dev, std::abs(aN * N / a - 1.0));
    }
    return check("scattering.scaling_law", dev, 1e-8);
  });

  guarded("effective.hartree_conservation", [&] {
    const Grid g = make_grid(1, 64, 12.0);
    auto spec = hartree_spec(sample_displacement(g, [](double r) { return 2.0 * std::exp(-r * r); }),
                             sample_displacement(g, [](double r) { return 1.0 / (1.0 + r * r); }),
                             sample_displacement(g, [](double r) { return std::exp(-0.5 * r * r); }), 0.4);
    const auto traj = evolve({{random_field(g, rng), random_field(g, rng)}, 0.0}, spec, 0.2, 1e-3, 50);
    double dev = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      dev = std::max({dev, std::abs(traj.masses[i][0] - traj.masses[0][0]),
                      std::abs(traj.masses[i][1] - traj.masses[0][1])});
    }
    return check("effective.hartree_mass", dev, 1e-10);
  });

  guarded("effective.spin1_conservation", [&] {
    const Grid g = make_grid(1, 64, 12.0);
    std::vector<Field> comps{random_field(g, rng), random_field(g, rng), random_field(g, rng)};
    for (auto& c : comps) {
      for (auto& z : c.values) z /= std::sqrt(3.0);
    }
    const auto traj = evolve({comps, 0.0}, spin1_spec(0.5), 0.2, 1e-3, 50);
    double dev = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const auto& m = traj.masses[i];
      const auto& m0 = traj.masses[0];
      dev = std::max({dev, std::abs(m[0] + m[1] + m[2] - m0[0] - m0[1] - m0[2]),
                      std::abs(traj.magnetization[i] - traj.magnetization[0])});
    }
    return check("effective.spin1_mass_magnetization", dev, 1e-8);
  });

  const Grid g4 = make_grid(1, 4, 2.0);
  const auto basis22 = build_basis(g4, 2, 2);

  guarded("indicators.marginal_bounds", [&] {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const ManyBodyState psi{basis22, random_coefficients(basis22->size(), rng), 0.0};
      const Field u = random_field(g4, rng), v = random_field(g4, rng);
      const double a11 = alpha_11(psi, u, v), a10 = alpha_10(psi, u), a01 = alpha_01(psi, v);
      const double td = trace_distance(reduce(psi, MarginalKind::pair), u, v);
      worst = std::max({worst, std::max(a10, a01) - a11, a11 - a10 - a01, a11 - td, td - 2.0 * std::sqrt(a11)});
    }
    return check("indicators.marginal_bounds", std::max(worst, 0.0), 1e-10);
  });

  guarded("indicators.counting_algebra", [&] {
    const Grid g = make_grid(1, 6, 3.0);
    const auto basis = build_basis(g, 3, 1);
    const ManyBodyState psi{basis, random_coefficients(basis->size(), rng), 0.0};
    const auto P = counting_projectors(basis, random_field(g, rng), Species::a);
    Vec sum(psi.coefficients.size(), 0.0);
    double dev = 0.0;
    std::vector<Vec> parts;
    for (int k = 0; k <= 3; ++k) parts.push_back(P.project(k, psi.coefficients));
    for (int k = 0; k <= 3; ++k) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += parts[k][i];
      for (int l = k + 1; l <= 3; ++l) {
        complex s = 0.0;
        for (std::size_t i = 0; i < sum.size(); ++i) s += std::conj(parts[k][i]) * parts[l][i];
        dev = std::max(dev, std::abs(s));
      }
    }
    for (std::size_t i = 0; i < sum.size(); ++i) dev = std::max(dev, std::abs(sum[i] - psi.coefficients[i]));
    const auto q = P.apply_q(psi.coefficients);
    complex qe = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) qe += std::conj(psi.coefficients[i]) * q[i];
    dev = std::max(dev, std::abs(weight_expectation(psi, weight_s(3), P) - qe.real() / 3.0));
    return check("indicators.counting_algebra", dev, 1e-12);
  });

  guarded("indicators.cancellations", [&] {
    double dev = 0.0;
    const auto V12 = [](double r) { return 1.0 + 0.5 * std::cos(r); };
    for (int t = 0; t < 10; ++t) {
      const ManyBodyState psi{basis22, random_coefficients(basis22->size(), rng), 0.0};
      const auto T = lambda_omega_terms(psi, random_field(g4, rng), random_field(g4, rng), V12);
      dev = std::max({dev, std::abs(T.at("pp", "pp")), std::abs(T.at("qq", "qq")),
                      std::abs(T.at("pq", "pq") + T.at("qp", "qp")),
                      std::abs(T.at("pp", "qp") + std::conj(T.at("pp", "qp"))), std::abs(T.sum() - T.commutator)});
    }
    return check("indicators.cancellations", dev, 1e-10);
  });

  guarded("manybody.unitarity", [&] {
    HamiltonianSpec spec;
    spec.n1 = 2;
    spec.n2 = 2;
    spec.V1 = [](double r) { return std::exp(-r * r); };
    spec.V2 = spec.V1;
    spec.V12 = [](double r) { return 1.0 / (1.0 + r * r); };
    const Hamiltonian H(spec, basis22);
    const ManyBodyState psi{basis22, random_coefficients(basis22->size(), rng), 0.0};
    const auto fwd = propagate(H, psi, 0.3);
    const auto back = propagate(H, fwd, -0.3);
    double dev = std::abs(fwd.norm() - 1.0);
    for (std::size_t i = 0; i < psi.coefficients.size(); ++i) {
      dev = std::max(dev, std::abs(back.coefficients[i] - psi.coefficients[i]));
    }
    dev = std::max(dev, std::abs(manybody_energy(H, fwd) - manybody_energy(H, psi)));
    return check("manybody.unitarity", dev, 1e-10);
  });

  guarded("harness.product_state_alpha", [&] {
    const Field u = random_field(g4, rng), v = random_field(g4, rng);
    const auto psi = product_state(u, v, basis22);
    return check("harness.product_state_alpha", std::abs(alpha_11(psi, u, v)), 1e-10);
  });
  return out;
}

}  // namespace mixbec
