#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sifem/errors.hpp"
#include "sifem/harness.hpp"

namespace {

sifem::CaseSpec resolve_spec(const std::string& case_name, const std::string& config,
                             int n, sifem::EnforcementMode mode) {
  if (!case_name.empty() && !config.empty()) {
    throw sifem::ConfigError("--case and --config are mutually exclusive");
  }
  if (!case_name.empty()) return sifem::builtin_case(case_name, n, mode);
  if (!config.empty()) {
    sifem::CaseSpec spec = sifem::load_case_file(config);
    if (n > 0) spec.n = n;
    spec.mode = mode;
    return spec;
  }
  throw sifem::ConfigError("one of --case or --config is required");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane-strain poroelastic simulator with embedded cracks"};
  app.require_subcommand(1);

  std::string case_name, config_path, out_dir = "out";
  std::string enforcement = "weak";
  std::string snapshots = "final";
  std::vector<int> ns;
  std::vector<double> trims{0.0};
  double t_end = -1.0;
  bool with_hessian = false;
  bool debug_dumps = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--case", case_name, "built-in case name");
    cmd->add_option("--config", config_path, "JSON case configuration file");
    cmd->add_option("--n", ns, "elements per side (one or more)")->delimiter(',');
    cmd->add_option("--enforcement", enforcement, "weak|strong|both");
    cmd->add_option("--t-end", t_end, "final time (hr)");
    cmd->add_option("--trim", trims, "tip trim fractions")->delimiter(',');
    cmd->add_flag("--with-hessian-blocks", with_hessian,
                  "assemble the second-derivative transfer blocks");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--snapshots", snapshots, "final|stride:K|all");
    cmd->add_flag("--debug-dumps", debug_dumps,
                  "write element classification and matrix triplet dumps");
  };

  CLI::App* run = app.add_subcommand("run", "run a single case");
  add_common(run);
  CLI::App* study = app.add_subcommand("study", "mesh convergence study");
  add_common(study);

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<sifem::EnforcementMode> modes;
    if (enforcement == "weak") {
      modes = {sifem::EnforcementMode::Weak};
    } else if (enforcement == "strong") {
      modes = {sifem::EnforcementMode::Strong};
    } else if (enforcement == "both") {
      modes = {sifem::EnforcementMode::Weak, sifem::EnforcementMode::Strong};
    } else {
      throw sifem::ConfigError("unknown enforcement: " + enforcement);
    }

    if (run->parsed()) {
      if (ns.size() > 1) throw sifem::ConfigError("run takes a single --n");
      const int n = ns.empty() ? 0 : ns.front();
      for (sifem::EnforcementMode mode : modes) {
        sifem::CaseSpec spec = resolve_spec(case_name, config_path, n > 0 ? n : 20, mode);
        if (t_end > 0.0) spec.t_end = t_end;
        spec.trim_fractions = trims;
        spec.with_hessian = with_hessian;
        if (snapshots == "final") {
          spec.snapshots = sifem::SnapshotCadence::Final;
        } else if (snapshots == "all") {
          spec.snapshots = sifem::SnapshotCadence::All;
        } else if (snapshots.rfind("stride:", 0) == 0) {
          spec.snapshots = sifem::SnapshotCadence::Stride;
          spec.snapshot_stride = std::stoi(snapshots.substr(7));
        } else {
          throw sifem::ConfigError("unknown snapshot cadence: " + snapshots);
        }
        const std::string dir =
            (modes.size() == 1)
                ? out_dir
                : out_dir + "/" + (mode == sifem::EnforcementMode::Weak ? "weak" : "strong");
        const sifem::RunResult res = sifem::run_case(spec, dir, debug_dumps);
        std::cout << "case " << spec.name << " n=" << spec.n << " ("
                  << (mode == sifem::EnforcementMode::Weak ? "weak" : "strong")
                  << "): " << res.accepted_steps << " steps, "
                  << res.wall_seconds << " s -> " << dir << "\n";
      }
    } else {
      if (ns.empty()) throw sifem::ConfigError("study requires --n with 2+ levels");
      sifem::CaseSpec spec =
          resolve_spec(case_name, config_path, ns.front(), modes.front());
      if (t_end > 0.0) spec.t_end = t_end;
      spec.with_hessian = with_hessian;
      const sifem::StudyReport report =
          sifem::convergence_study(spec, ns, trims, modes, out_dir);
      std::cout << "study " << spec.name << " complete; levels:";
      for (int n : report.ns) std::cout << " " << n;
      std::cout << "\nresults in " << out_dir << "/norms.csv\n";
    }
  } catch (const sifem::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const sifem::GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << "\n";
    return 2;
  } catch (const sifem::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
