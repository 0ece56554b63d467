#include "vlab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vlab/decay.hpp"
#include "vlab/efimov.hpp"
#include "vlab/errors.hpp"
#include "vlab/hardy.hpp"
#include "vlab/localization.hpp"
#include "vlab/virtual_level.hpp"

namespace vlab {

namespace {

constexpr const char* kArtifactVersion = "vlab-csv-1";

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string num_list(const std::vector<double>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ' ';
    os << num(xs[i]);
  }
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// ---- INI reader -----------------------------------------------------------

struct IniData {
  std::map<std::string, std::string> kv;  // "section.key" -> value
  std::vector<std::string> order;
};

IniData read_ini(const std::string& text, std::vector<std::string>& violations) {
  IniData ini;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        violations.push_back("line " + std::to_string(line_no) + ": unterminated section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      violations.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    if (section.empty()) {
      violations.push_back("line " + std::to_string(line_no) + ": key outside any section");
      continue;
    }
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (ini.kv.count(key)) {
      violations.push_back(key + ": duplicate key");
      continue;
    }
    ini.kv[key] = val;
    ini.order.push_back(key);
  }
  return ini;
}

// typed accessors; failures land in `violations` and leave the default
struct Reader {
  const IniData& ini;
  std::vector<std::string>& violations;
  std::set<std::string> used;

  bool has(const std::string& key) const { return ini.kv.count(key) != 0; }

  std::string raw(const std::string& key, const std::string& dflt) {
    used.insert(key);
    auto it = ini.kv.find(key);
    return it == ini.kv.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) {
    used.insert(key);
    auto it = ini.kv.find(key);
    if (it == ini.kv.end()) return dflt;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      violations.push_back(key + ": not a number (" + it->second + ")");
      return dflt;
    }
  }

  int get_int(const std::string& key, int dflt) {
    used.insert(key);
    auto it = ini.kv.find(key);
    if (it == ini.kv.end()) return dflt;
    try {
      std::size_t pos = 0;
      const long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return static_cast<int>(v);
    } catch (const std::exception&) {
      violations.push_back(key + ": not an integer (" + it->second + ")");
      return dflt;
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) {
    used.insert(key);
    auto it = ini.kv.find(key);
    if (it == ini.kv.end()) return dflt;
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      violations.push_back(key + ": not an unsigned integer (" + it->second + ")");
      return dflt;
    }
  }

  bool get_bool(const std::string& key, bool dflt) {
    used.insert(key);
    auto it = ini.kv.find(key);
    if (it == ini.kv.end()) return dflt;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    violations.push_back(key + ": expected true/false (" + it->second + ")");
    return dflt;
  }

  std::vector<double> get_list(const std::string& key, std::vector<double> dflt) {
    used.insert(key);
    auto it = ini.kv.find(key);
    if (it == ini.kv.end()) return dflt;
    std::vector<double> out;
    std::istringstream is(it->second);
    std::string tok;
    while (is >> tok) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        violations.push_back(key + ": bad list entry (" + tok + ")");
        return dflt;
      }
    }
    if (out.empty()) {
      violations.push_back(key + ": empty list");
      return dflt;
    }
    return out;
  }
};

const std::set<std::string>& known_tasks() {
  static const std::set<std::string> t = {"hardy",  "detect", "threshold", "decay",
                                          "count",  "verify", "geometry"};
  return t;
}

// certificate for the built-in shapes: measured envelope with 5% headroom
DecayCertificate auto_cert(const PairPotential& v) {
  DecayCertificate cert;
  cert.nu = 2.0;
  cert.A = 1.0;
  double m = 0.0;
  for (int i = 0; i <= 99900; ++i) {
    const double r = cert.A + 0.01 * i;
    m = std::max(m, std::abs(v(r)) * std::pow(1.0 + r, 2.0 + cert.nu));
  }
  cert.C = std::max(1.05 * m, 1e-300);
  return cert;
}

std::vector<PotentialPiece> parse_pieces(const std::string& text,
                                         std::vector<std::string>& violations) {
  std::vector<PotentialPiece> pieces;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    std::vector<std::string> f;
    std::istringstream tin(tok);
    std::string part;
    while (std::getline(tin, part, ':')) f.push_back(trim(part));
    PotentialPiece p;
    try {
      if (f.size() == 4 && f[0] == "step") {
        p.kind = PotentialPiece::Kind::step;
        p.value = std::stod(f[1]);
        p.r0 = std::stod(f[2]);
        p.r1 = std::stod(f[3]);
      } else if (f.size() == 3 && f[0] == "gaussian") {
        p.kind = PotentialPiece::Kind::gaussian;
        p.value = std::stod(f[1]);
        p.r0 = std::stod(f[2]);
      } else if (f.size() == 3 && f[0] == "bump") {
        p.kind = PotentialPiece::Kind::bump;
        p.value = std::stod(f[1]);
        p.r0 = std::stod(f[2]);
      } else {
        violations.push_back("potential.pieces: unrecognized entry (" + tok + ")");
        continue;
      }
    } catch (const std::exception&) {
      violations.push_back("potential.pieces: bad number in (" + tok + ")");
      continue;
    }
    pieces.push_back(p);
  }
  if (pieces.empty()) violations.push_back("potential.pieces: no pieces given");
  return pieces;
}

}  // namespace

PotentialSpec Scenario::potential() const {
  PairPotential v;
  if (pot_shape == "none") {
    PotentialSpec p = PotentialSpec::zero(sys.n_particles);
    return p;
  }
  if (pot_shape == "well") {
    v.pieces.push_back({PotentialPiece::Kind::step, -depth, 0.0, radius});
  } else if (pot_shape == "well_barrier") {
    v.pieces.push_back({PotentialPiece::Kind::step, -depth, 0.0, radius});
    v.pieces.push_back({PotentialPiece::Kind::step, height, radius, r_out});
  } else if (pot_shape == "gaussian") {
    v.pieces.push_back({PotentialPiece::Kind::gaussian, -depth, radius, 0.0});
  } else if (pot_shape == "custom") {
    std::vector<std::string> errs;
    v.pieces = parse_pieces(custom_pieces, errs);
    if (!errs.empty()) throw ValidationError("scenario potential: " + errs.front());
  } else {
    throw ValidationError("scenario potential: unknown shape " + pot_shape);
  }
  const DecayCertificate c = have_cert ? cert : auto_cert(v);
  PotentialSpec p = PotentialSpec::uniform(sys.n_particles, v, c);
  return p.scaled(lambda);
}

std::string Scenario::serialize() const {
  std::ostringstream os;
  os << "[system]\n";
  os << "n = " << sys.n_particles << "\n";
  os << "dim = " << sys.dim << "\n";
  os << "masses = " << num_list(sys.masses) << "\n";
  os << "\n[potential]\n";
  os << "shape = " << pot_shape << "\n";
  os << "depth = " << num(depth) << "\n";
  os << "radius = " << num(radius) << "\n";
  os << "height = " << num(height) << "\n";
  os << "r_out = " << num(r_out) << "\n";
  os << "lambda = " << num(lambda) << "\n";
  if (!custom_pieces.empty()) os << "pieces = " << custom_pieces << "\n";
  if (have_cert) {
    os << "cert_C = " << num(cert.C) << "\n";
    os << "cert_nu = " << num(cert.nu) << "\n";
    os << "cert_A = " << num(cert.A) << "\n";
  }
  os << "\n[grid]\n";
  os << "L = " << num(grid.L) << "\n";
  os << "points = " << grid.points_per_axis << "\n";
  os << "\n[run]\n";
  os << "task = " << task << "\n";
  os << "seed = " << seed << "\n";
  os << "out = " << out_dir << "\n";
  os << "numeric = " << (numeric_hardy ? "true" : "false") << "\n";
  os << "eps_grid = " << (eps_grid.empty() ? num_list(default_eps_grid()) : num_list(eps_grid))
     << "\n";
  os << "route = " << detect_route << "\n";
  os << "bracket_lo = " << num(bracket_lo) << "\n";
  os << "bracket_hi = " << num(bracket_hi) << "\n";
  os << "rtol = " << num(rtol) << "\n";
  os << "alphas = " << (alphas.empty() ? "2.5 3.5" : num_list(alphas)) << "\n";
  os << "weight = " << decay_weight << "\n";
  os << "boxes = " << num_list(boxes) << "\n";
  os << "z = " << (z_auto ? std::string("auto") : num(z)) << "\n";
  os << "what = " << verify_what << "\n";
  os << "cut_eps = " << num(cut_eps) << "\n";
  os << "cut_beta = " << num(cut_beta) << "\n";
  os << "samples = " << samples << "\n";
  return os.str();
}

Scenario parse_scenario(const std::string& text, bool strict,
                        std::vector<std::string>* warnings,
                        const std::string& task_override) {
  std::vector<std::string> violations;
  const IniData ini = read_ini(text, violations);
  Reader rd{ini, violations, {}};
  Scenario sc;

  sc.sys.n_particles = rd.get_int("system.n", 0);
  sc.sys.dim = rd.get_int("system.dim", 1);
  {
    auto masses = rd.get_list("system.masses", {});
    sc.sys.masses = masses;
  }
  if (sc.sys.n_particles < 2) violations.push_back("system.n: need at least 2 particles");
  if (sc.sys.dim != 1 && sc.sys.dim != 2) violations.push_back("system.dim: must be 1 or 2");
  if (static_cast<int>(sc.sys.masses.size()) != sc.sys.n_particles)
    violations.push_back("system.masses: need exactly n entries");
  for (double m : sc.sys.masses)
    if (!(m > 0.0)) {
      violations.push_back("system.masses: must be positive");
      break;
    }

  sc.pot_shape = rd.raw("potential.shape", "well");
  static const std::set<std::string> shapes = {"well", "well_barrier", "gaussian", "custom",
                                               "none"};
  if (!shapes.count(sc.pot_shape))
    violations.push_back("potential.shape: unknown shape (" + sc.pot_shape + ")");
  sc.depth = rd.get_double("potential.depth", sc.depth);
  sc.radius = rd.get_double("potential.radius", sc.radius);
  sc.height = rd.get_double("potential.height", sc.height);
  sc.r_out = rd.get_double("potential.r_out", sc.r_out);
  sc.lambda = rd.get_double("potential.lambda", sc.lambda);
  sc.custom_pieces = rd.raw("potential.pieces", "");
  const bool has_C = rd.has("potential.cert_C"), has_nu = rd.has("potential.cert_nu"),
             has_A = rd.has("potential.cert_A");
  sc.cert.C = rd.get_double("potential.cert_C", 1.0);
  sc.cert.nu = rd.get_double("potential.cert_nu", 1.0);
  sc.cert.A = rd.get_double("potential.cert_A", 1.0);
  sc.have_cert = has_C && has_nu && has_A;
  if (sc.pot_shape == "custom") {
    if (sc.custom_pieces.empty()) violations.push_back("potential.pieces: required for custom");
    if (!sc.have_cert)
      violations.push_back(
          "potential.cert_C/cert_nu/cert_A: decay certificate required for custom shapes");
  } else if ((has_C || has_nu || has_A) && !sc.have_cert) {
    violations.push_back("potential.cert_*: give all of cert_C, cert_nu, cert_A or none");
  }
  if (!(sc.depth >= 0.0)) violations.push_back("potential.depth: must be >= 0");
  if (!(sc.radius > 0.0)) violations.push_back("potential.radius: must be positive");
  if (sc.pot_shape == "well_barrier" && !(sc.r_out > sc.radius))
    violations.push_back("potential.r_out: must exceed radius");

  sc.grid.L = rd.get_double("grid.L", 10.0);
  sc.grid.points_per_axis = rd.get_int("grid.points", 101);
  if (!(sc.grid.L > 0.0)) violations.push_back("grid.L: must be positive");
  if (sc.grid.points_per_axis < 3) violations.push_back("grid.points: need at least 3");

  sc.task = rd.raw("run.task", task_override);
  if (!task_override.empty() && rd.has("run.task") && sc.task != task_override)
    violations.push_back("run.task: conflicts with the requested subcommand (" + sc.task +
                         " vs " + task_override + ")");
  if (!known_tasks().count(sc.task))
    violations.push_back("run.task: unknown task (" + sc.task + ")");
  sc.seed = rd.get_u64("run.seed", sc.seed);
  sc.out_dir = rd.raw("run.out", sc.out_dir);
  sc.numeric_hardy = rd.get_bool("run.numeric", sc.numeric_hardy);
  sc.eps_grid = rd.get_list("run.eps_grid", {});
  for (double e : sc.eps_grid)
    if (!(e > 0.0 && e < 1.0)) {
      violations.push_back("run.eps_grid: entries must lie in (0,1)");
      break;
    }
  sc.detect_route = rd.raw("run.route", sc.detect_route);
  static const std::set<std::string> routes = {"kinetic", "inv_sq_1d", "log_2d",
                                               "multiparticle_log"};
  if (!routes.count(sc.detect_route))
    violations.push_back("run.route: unknown route (" + sc.detect_route + ")");
  sc.bracket_lo = rd.get_double("run.bracket_lo", sc.bracket_lo);
  sc.bracket_hi = rd.get_double("run.bracket_hi", sc.bracket_hi);
  sc.rtol = rd.get_double("run.rtol", sc.rtol);
  if (!(sc.bracket_lo < sc.bracket_hi))
    violations.push_back("run.bracket_lo: must be below bracket_hi");
  if (!(sc.rtol > 0.0)) violations.push_back("run.rtol: must be positive");
  sc.alphas = rd.get_list("run.alphas", {});
  sc.decay_weight = rd.raw("run.weight", sc.decay_weight);
  if (sc.decay_weight != "power" && sc.decay_weight != "log_power")
    violations.push_back("run.weight: power or log_power");
  sc.boxes = rd.get_list("run.boxes", {20.0, 40.0, 80.0});
  if (rd.has("count.boxes")) sc.boxes = rd.get_list("count.boxes", sc.boxes);
  {
    rd.used.insert("run.z");
    auto it = ini.kv.find("run.z");
    if (it != ini.kv.end()) {
      if (it->second == "auto") {
        sc.z_auto = true;
      } else {
        try {
          sc.z = std::stod(it->second);
          sc.z_auto = false;
          if (!(sc.z < 0.0)) violations.push_back("run.z: must be negative or auto");
        } catch (const std::exception&) {
          violations.push_back("run.z: not a number or auto (" + it->second + ")");
        }
      }
    }
  }
  sc.verify_what = rd.raw("run.what", sc.verify_what);
  static const std::set<std::string> whats = {"localization", "hardy", "lemmas"};
  if (!whats.count(sc.verify_what))
    violations.push_back("run.what: localization, hardy, or lemmas");
  sc.cut_eps = rd.get_double("run.cut_eps", sc.cut_eps);
  sc.cut_beta = rd.get_double("run.cut_beta", sc.cut_beta);
  if (!(sc.cut_eps > 0.0 && sc.cut_eps < 1.0))
    violations.push_back("run.cut_eps: must lie in (0,1)");
  if (!(sc.cut_beta > 0.0 && sc.cut_beta < 1.0))
    violations.push_back("run.cut_beta: must lie in (0,1)");
  sc.samples = rd.get_int("run.samples", sc.samples);
  if (sc.samples < 1) violations.push_back("run.samples: need at least 1");

  // unknown keys: fatal when strict, demoted to warnings otherwise
  for (const auto& key : ini.order)
    if (!rd.used.count(key)) {
      if (strict)
        violations.push_back(key + ": unknown key");
      else if (warnings)
        warnings->push_back(key + ": unknown key (ignored)");
    }

  if (!violations.empty()) {
    std::ostringstream os;
    os << "scenario invalid (" << violations.size() << " problem"
       << (violations.size() == 1 ? "" : "s") << "): ";
    for (std::size_t i = 0; i < violations.size(); ++i) {
      if (i) os << "; ";
      os << violations[i];
    }
    throw ValidationError(os.str());
  }
  return sc;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

WeightKind weight_kind_from(const std::string& name) {
  if (name == "inv_sq_1d") return WeightKind::inv_sq_1d;
  if (name == "log_2d") return WeightKind::log_2d;
  if (name == "multiparticle_log") return WeightKind::multiparticle_log;
  throw ValidationError("unknown weight kind " + name);
}

void run_hardy(const Scenario& sc, RunRecord& rec) {
  const HardyReport hr = hardy_constant(sc.sys);
  std::ostringstream os;
  os << "quantity,value,exact,method,note\n";
  std::string note = hr.method;
  if (hr.lower_bound_only) note += "; lower_bound_only";
  if (hr.resonance_possible) note += "; resonance_possible";
  os << "hardy_constant," << num(hr.value) << "," << (hr.exact ? 1 : 0) << ","
     << (hr.exact ? "closed_form" : "lower_bound") << "," << csv_field(note) << "\n";
  if (sc.numeric_hardy) {
    const HardyNumericReport nr = rayleigh_estimate_CH(sc.sys);
    os << "hardy_numeric," << num(nr.value) << ",0,annulus_rayleigh,"
       << csv_field("free_nodes=" + std::to_string(nr.free_nodes)) << "\n";
  }
  if (hr.resonance_possible)
    rec.warnings.push_back("hardy constant <= 1 regime: resonance possible");
  rec.payloads.emplace_back("hardy.csv", os.str());
}

void run_geometry(const Scenario& sc, RunRecord& rec) {
  std::ostringstream os;
  os << "partition,order\n";
  for (const Partition& Z : two_cluster_partitions(sc.sys.n_particles))
    os << csv_field(Z.descriptor()) << "," << Z.order() << "\n";
  rec.payloads.emplace_back("geometry_partitions.csv", os.str());
  if (sc.sys.n_particles == 3) {
    const SectorDecomposition sd = sector_angles(sc.sys);
    std::ostringstream as;
    as << "angle,radians\n";
    for (int i = 0; i < 3; ++i)
      as << "theta_" << i << "," << num(sd.theta[i]) << "\n";
    as << "theta_max," << num(sd.theta_max) << "\n";
    rec.payloads.emplace_back("geometry_angles.csv", as.str());
  }
}

void run_detect(const Scenario& sc, RunRecord& rec) {
  const PotentialSpec pot = sc.potential();
  const std::vector<double> grid_eps =
      sc.eps_grid.empty() ? default_eps_grid() : sc.eps_grid;
  VirtualLevelReport rep;
  if (sc.detect_route == "kinetic") {
    rep = detect_virtual_level(sc.sys, pot, sc.grid, grid_eps);
  } else {
    WeightSpec w;
    w.kind = weight_kind_from(sc.detect_route);
    rep = detect_via_perturbation(sc.sys, pot, sc.grid, w, grid_eps);
  }
  std::ostringstream os;
  os << "key,value\n";
  os << "ground_energy," << num(rep.ground_energy) << "\n";
  os << "tau," << num(rep.tau) << "\n";
  os << "tau_neg," << num(rep.tau_neg) << "\n";
  os << "verdict," << to_string(rep.verdict) << "\n";
  os << "box_checked," << (rep.box_checked ? 1 : 0) << "\n";
  os << "ess_floor_is_proxy," << (rep.ess_floor_is_proxy ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < rep.eps_grid.size(); ++i) {
    os << "eps[" << num(rep.eps_grid[i]) << "].ground,";
    os << (i < rep.eps_grounds.size() ? num(rep.eps_grounds[i]) : std::string("nan")) << "\n";
    if (i < rep.ess_floors.size())
      os << "eps[" << num(rep.eps_grid[i]) << "].ess_floor," << num(rep.ess_floors[i]) << "\n";
  }
  os << "notes," << csv_field(rep.notes) << "\n";
  if (rep.verdict == Verdict::inconclusive)
    rec.warnings.push_back("detect verdict inconclusive: " + rep.notes);
  rec.payloads.emplace_back("detect.csv", os.str());
}

void run_threshold(const Scenario& sc, RunRecord& rec) {
  const PotentialSpec family = sc.potential();
  const ThresholdResult tr =
      coupling_threshold(sc.sys, family, sc.grid, sc.bracket_lo, sc.bracket_hi, sc.rtol);
  std::ostringstream os;
  os << "key,value\n";
  os << "lambda_star," << num(tr.lambda_star) << "\n";
  os << "bracket_lo," << num(tr.bracket_lo) << "\n";
  os << "bracket_hi," << num(tr.bracket_hi) << "\n";
  os << "ground_at_star [energy]," << num(tr.ground_at_star) << "\n";
  os << "iterations," << tr.iterations << "\n";
  rec.payloads.emplace_back("threshold.csv", os.str());
}

void run_decay(const Scenario& sc, RunRecord& rec) {
  const PotentialSpec pot = sc.potential();
  const std::vector<double> alphas = sc.alphas.empty() ? std::vector<double>{2.5, 3.5}
                                                       : sc.alphas;
  const DecayWeight kind =
      sc.decay_weight == "log_power" ? DecayWeight::log_power : DecayWeight::power;
  const DecayFitReport rep = decay_report(sc.sys, pot, sc.grid, alphas, kind);
  std::ostringstream os;
  os << "alpha,weighted_norm_L,weighted_norm_2L,ratio\n";
  for (std::size_t i = 0; i < rep.alphas.size(); ++i)
    os << num(rep.alphas[i]) << "," << num(rep.norms[i]) << "," << num(rep.norms_doubled[i])
       << "," << num(rep.ratios[i]) << "\n";
  rec.payloads.emplace_back("decay_norms.csv", os.str());
  std::ostringstream ss;
  ss << "shell_radius [length],shell_rms\n";
  for (std::size_t i = 0; i < rep.fit.radii.size(); ++i)
    ss << num(rep.fit.radii[i]) << "," << num(rep.fit.rms[i]) << "\n";
  rec.payloads.emplace_back("decay_shells.csv", ss.str());
  std::ostringstream fs;
  fs << "slope,band\n" << num(rep.fit.slope) << "," << num(rep.fit.band) << "\n";
  rec.payloads.emplace_back("decay_fit.csv", fs.str());
}

void run_count(const Scenario& sc, RunRecord& rec) {
  const PotentialSpec pot = sc.potential();
  const std::optional<double> z = sc.z_auto ? std::nullopt : std::optional<double>(sc.z);
  const CountingCurve curve = counting_curve(sc.sys, pot, sc.grid, sc.boxes, z);
  std::ostringstream os;
  os << "L [length],h [length],z_or_lambda [energy],count,stable\n";
  for (std::size_t i = 0; i < curve.boxes.size(); ++i)
    os << num(curve.boxes[i]) << "," << num(curve.hs[i]) << "," << num(curve.zs[i]) << ","
       << curve.counts[i] << "," << (curve.stable ? 1 : 0) << "\n";
  if (!curve.stable) rec.warnings.push_back("counting curve did not stabilize");
  rec.payloads.emplace_back("count.csv", os.str());
}

void run_verify(const Scenario& sc, RunRecord& rec) {
  if (sc.verify_what == "localization") {
    const ScalarCutoff c = build_scalar_cutoff(sc.cut_eps, sc.cut_beta);
    const auto samples = sample_scalar_bound(c, sc.samples);
    std::ostringstream os;
    // |t u'(t) ln t| against sqrt(eps): the bound in overflow-safe form
    os << "ln_t,t,u,t_uprime_lnt,bound_sqrt_eps,margin_ratio\n";
    for (const auto& s : samples)
      os << num(s.ln_t) << "," << num(s.t) << "," << num(s.u) << ","
         << num(std::sqrt(s.deriv_sq)) << "," << num(std::sqrt(c.eps)) << ","
         << num(s.margin) << "\n";
    rec.payloads.emplace_back("verify_localization.csv", os.str());
    return;
  }
  if (sc.verify_what == "hardy") {
    std::ostringstream os;
    os << "kind,quotient,reference,nodes,note\n";
    for (ScalarHardyKind k : {ScalarHardyKind::halfline_1d, ScalarHardyKind::exterior_d3,
                              ScalarHardyKind::log_2d}) {
      const ScalarHardyReport r = verify_scalar_hardy(k);
      os << to_string(k) << "," << num(r.quotient) << "," << num(r.reference) << "," << r.nodes
         << "," << csv_field(r.note) << "\n";
    }
    rec.payloads.emplace_back("verify_hardy.csv", os.str());
    return;
  }
  // lemmas
  std::ostringstream os;
  os << "kind,admissible_constant,min_margin,mean_margin,samples,all_nonnegative,premises_hold,"
        "formula\n";
  for (BoundaryLemma k :
       {BoundaryLemma::J_1d, BoundaryLemma::J_2d_radial, BoundaryLemma::trace_1d,
        BoundaryLemma::xi_tail_1d, BoundaryLemma::xi_tail_2d}) {
    LemmaParams p;
    p.n_samples = sc.samples;
    p.seed = sc.seed;
    const LemmaReport r = boundary_lemma_check(k, p);
    os << to_string(k) << "," << num(r.admissible_constant) << "," << num(r.min_margin) << ","
       << num(r.mean_margin) << "," << r.samples << "," << (r.all_nonnegative ? 1 : 0) << ","
       << (r.premises_hold ? 1 : 0) << "," << csv_field(r.constant_formula) << "\n";
    if (!r.all_nonnegative)
      rec.warnings.push_back("negative margin in " + to_string(k));
  }
  rec.payloads.emplace_back("verify_lemmas.csv", os.str());
}

}  // namespace

RunRecord run_scenario(const Scenario& sc) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.artifact_version = kArtifactVersion;
  rec.scenario_echo = sc.serialize();
  rec.scenario_hash = hex64(fnv1a64(rec.scenario_echo));

  if (sc.task == "hardy")
    run_hardy(sc, rec);
  else if (sc.task == "geometry")
    run_geometry(sc, rec);
  else if (sc.task == "detect")
    run_detect(sc, rec);
  else if (sc.task == "threshold")
    run_threshold(sc, rec);
  else if (sc.task == "decay")
    run_decay(sc, rec);
  else if (sc.task == "count")
    run_count(sc, rec);
  else if (sc.task == "verify")
    run_verify(sc, rec);
  else
    throw ValidationError("run_scenario: unknown task " + sc.task);

  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

void emit_csv(const RunRecord& rec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ResourceError("emit_csv: cannot create directory " + out_dir);
  for (const auto& [name, text] : rec.payloads) {
    const fs::path p = fs::path(out_dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ResourceError("emit_csv: cannot open " + p.string());
    f << text;
    if (!f) throw ResourceError("emit_csv: write failed for " + p.string());
  }
  // sidecar: everything needed to reproduce, nothing that varies across reruns
  std::string stem = rec.payloads.empty() ? std::string("run") : rec.payloads.front().first;
  const auto dot = stem.find('.');
  if (dot != std::string::npos) stem = stem.substr(0, dot);
  const fs::path meta = fs::path(out_dir) / (stem + ".meta");
  std::ofstream f(meta, std::ios::binary);
  if (!f) throw ResourceError("emit_csv: cannot open " + meta.string());
  f << "artifact = " << rec.artifact_version << "\n";
  f << "scenario_hash = " << rec.scenario_hash << "\n";
  for (const auto& [name, text] : rec.payloads) {
    f << "payload = " << name << " fnv1a=" << hex64(fnv1a64(text)) << "\n";
  }
  for (const auto& w : rec.warnings) f << "warning = " << w << "\n";
  f << "\n" << rec.scenario_echo;
  if (!f) throw ResourceError("emit_csv: write failed for " + meta.string());
}

}  // namespace vlab
