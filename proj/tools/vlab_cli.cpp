#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vlab/errors.hpp"
#include "vlab/scenario.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw vlab::ResourceError("cannot read config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct CommonOpts {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  bool strict = true;
  std::string what;  // verify only
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for virtual levels of few-body Schrodinger operators"};
  app.require_subcommand(1);

  CommonOpts opts;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"hardy", "collision-set Hardy constants (closed form, optional annulus estimate)"},
      {"detect", "virtual-level verdict for a configured system"},
      {"threshold", "critical coupling by ground-energy bisection"},
      {"decay", "threshold-function weighted norms and tail fit"},
      {"count", "negative-eigenvalue counts across growing boxes"},
      {"verify", "self-checks: localization | hardy | lemmas"},
      {"geometry", "cluster partitions and collision sector angles"},
  };
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opts.config, "scenario file (INI)")->required();
    sub->add_option("--out", opts.out, "output directory (overrides [run] out)");
    sub->add_option("--seed", opts.seed, "seed override")->each([&](const std::string&) {
      opts.seed_given = true;
    });
    sub->add_option("--threads", opts.threads, "Eigen thread count");
    sub->add_flag("--strict,!--no-strict", opts.strict,
                  "treat unknown config keys as errors (default on)");
    if (name == "verify")
      sub->add_option("what", opts.what, "localization | hardy | lemmas");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string task = app.get_subcommands().front()->get_name();
  try {
    if (opts.threads > 0) Eigen::setNbThreads(opts.threads);
    std::vector<std::string> parse_warnings;
    vlab::Scenario sc =
        vlab::parse_scenario(slurp(opts.config), opts.strict, &parse_warnings, task);
    if (opts.seed_given) sc.seed = opts.seed;
    if (!opts.out.empty()) sc.out_dir = opts.out;
    if (task == "verify" && !opts.what.empty()) sc.verify_what = opts.what;

    vlab::RunRecord rec = vlab::run_scenario(sc);
    rec.warnings.insert(rec.warnings.begin(), parse_warnings.begin(), parse_warnings.end());
    vlab::emit_csv(rec, sc.out_dir);

    std::cout << "task " << task << " scenario " << rec.scenario_hash << "\n";
    for (const auto& [name, text] : rec.payloads)
      std::cout << "  wrote " << sc.out_dir << "/" << name << " (" << text.size()
                << " bytes)\n";
    for (const auto& w : rec.warnings) std::cout << "  warning: " << w << "\n";
    std::cout << "  wall " << rec.wall_seconds << " s\n";
    return 0;
  } catch (const vlab::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const vlab::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const vlab::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
