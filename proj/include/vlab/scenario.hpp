#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vlab/discretize.hpp"
#include "vlab/geometry.hpp"

namespace vlab {

// A fully resolved run description. Parsing fills every field, so the
// serialized echo written next to each output names all tolerances and seeds
// in effect rather than relying on compiled-in defaults.
struct Scenario {
  std::string task;  // hardy | detect | threshold | decay | count | verify | geometry

  ParticleSystem sys;

  // potential family; all pairs share the same shape, scaled by lambda.
  // custom shapes list pieces explicitly and must carry a decay certificate.
  std::string pot_shape = "well";  // well | well_barrier | gaussian | custom | none
  double depth = 1.0;
  double radius = 1.0;     // well / gaussian width parameter
  double height = 4.0;     // well_barrier outer step
  double r_out = 2.0;      // well_barrier barrier edge
  double lambda = 1.0;
  std::string custom_pieces;  // "step:v:r0:r1, gaussian:v:w, bump:v:r" list
  bool have_cert = false;
  DecayCertificate cert;

  GridSpec grid;

  // run parameters; unused ones keep their defaults and are still echoed
  std::uint64_t seed = 0x5EEDBA5EULL;
  std::string out_dir = ".";
  bool numeric_hardy = false;                 // hardy: add the annulus Rayleigh estimate
  std::vector<double> eps_grid;               // detect: empty = library default
  std::string detect_route = "kinetic";       // kinetic | inv_sq_1d | log_2d | multiparticle_log
  double bracket_lo = 0.5;                    // threshold
  double bracket_hi = 2.0;
  double rtol = 1e-4;
  std::vector<double> alphas;                 // decay: empty = {2.5, 3.5}
  std::string decay_weight = "power";         // power | log_power
  std::vector<double> boxes;                  // count
  bool z_auto = true;                         // count: z = -tau_zero per box
  double z = -1e-3;
  std::string verify_what = "localization";   // localization | hardy | lemmas
  double cut_eps = 0.1;                       // verify localization
  double cut_beta = 0.5;
  int samples = 200;                          // verify localization / lemmas sample count

  PotentialSpec potential() const;  // materialize the pair potential
  std::string serialize() const;    // canonical echo, deterministic ordering
};

// Strict parse: unknown keys, malformed values, and contract violations are
// collected and reported together in one ValidationError. With strict=false
// unknown keys become warnings instead. task_override supplies the task when
// the file omits it and must agree with the file when both are present.
Scenario parse_scenario(const std::string& text, bool strict = true,
                        std::vector<std::string>* warnings = nullptr,
                        const std::string& task_override = "");

struct RunRecord {
  std::string scenario_hash;      // FNV-1a of the canonical echo
  std::string artifact_version;   // bumped when any payload schema changes
  double wall_seconds = 0.0;      // console information only, never persisted
  std::vector<std::pair<std::string, std::string>> payloads;  // (filename, csv text)
  std::vector<std::string> warnings;
  std::string scenario_echo;
};

RunRecord run_scenario(const Scenario& sc);

// writes every payload plus one <task>.meta sidecar (echo, hash, version,
// warnings; no timings, so reruns are byte-identical)
void emit_csv(const RunRecord& rec, const std::string& out_dir);

std::uint64_t fnv1a64(const std::string& s);

}  // namespace vlab
