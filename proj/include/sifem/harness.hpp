#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sifem/postproc.hpp"
#include "sifem/solver.hpp"

namespace sifem {

/// Crack descriptor: one generator plus its interface law.
struct CrackSpec {
  std::string kind;  // segment | arc | sine | parabola | polyline
  Vec2 center{0.0, 0.0};
  double length = 0.0, angle = 0.0;              // segment
  double radius = 0.0, start_deg = 0.0, span_deg = 0.0;  // arc
  double extent = 0.0, amplitude = 0.0;          // sine
  double half_width = 0.0, height = 0.0;         // parabola
  int n_seg = 0;                                 // sampled generators
  std::vector<Vec2> points;                      // polyline
  InterfaceLaw law;
};

CrackCurve make_crack(const CrackSpec& spec);

enum class SnapshotCadence { Final, Stride, All };

struct CaseSpec {
  std::string name = "custom";
  int n = 20;
  Box domain{};
  MaterialParams material{};
  std::vector<CrackSpec> cracks;
  std::vector<SourceTerm> sources;
  double t_end = 354.0;
  EnforcementMode mode = EnforcementMode::Weak;
  SnapshotCadence snapshots = SnapshotCadence::Final;
  int snapshot_stride = 1;
  std::vector<double> trim_fractions{0.0};
  bool with_hessian = false;
  TimeControls time{};
};

std::string case_spec_to_json(const CaseSpec& spec);
CaseSpec case_spec_from_json(const std::string& json_text);
CaseSpec load_case_file(const std::string& path);

/// The built-in benchmark catalog.
CaseSpec builtin_case(const std::string& name, int n, EnforcementMode mode);

/// Everything a finished run hands to diagnostics and studies.
struct RunResult {
  CaseSpec spec;
  std::shared_ptr<SplitMesh> mesh;
  std::shared_ptr<DofMap> dofs;
  std::vector<ShiftData> shifts;
  std::vector<InterfaceLaw> laws;
  State final_state;
  RecoveredGradients gradients;
  std::vector<ResidualProfile> profiles;
  double lambda_residual_max = 0.0;  // strong mode, max over accepted steps
  int accepted_steps = 0;
  std::size_t factorizations = 0;
  double wall_seconds = 0.0;
};

/// Max norm of the interface-law residuals evaluated directly at the
/// lambda degrees of freedom (strong mode).
double lambda_residual_max(const SplitMesh& mesh, const DofMap& dofs,
                           const std::vector<ShiftData>& shifts,
                           const std::vector<InterfaceLaw>& laws,
                           const MaterialParams& mat, const State& state);

/// Runs the full pipeline. When `out_dir` is non-empty, writes config.json,
/// manifest.json, fields VTK files, profiles.csv, norms.csv and summary.txt
/// into it. `debug_dumps` additionally writes the element classification of
/// each crack and the assembled blocks as text triplets.
RunResult run_case(const CaseSpec& spec, const std::string& out_dir = "",
                   bool debug_dumps = false);

struct StudyReport {
  std::vector<int> ns;
  std::vector<double> hs;
  struct Series {
    EnforcementMode mode;
    ResidualKind kind;
    double eps;
    std::vector<double> norms;     // one per level
    std::vector<double> pair_slopes;
    double fitted_slope = 0.0;
  };
  std::vector<Series> series;
  struct SelfConvergence {
    EnforcementMode mode;
    FieldTag field;
    std::vector<double> errors;  // one per adjacent level pair
  };
  std::vector<SelfConvergence> self_errors;
  std::vector<double> level_seconds;

  const Series* find(EnforcementMode mode, ResidualKind kind, double eps) const;
  const SelfConvergence* find_self(EnforcementMode mode, FieldTag field) const;
};

/// Runs the spec template at every level of `ns` (each level in the modes
/// implied by `modes`), computes trimmed residual norms, pairwise and
/// least-squares slopes, and adjacent-pair self-convergence errors.
StudyReport convergence_study(const CaseSpec& spec_template,
                              const std::vector<int>& ns,
                              const std::vector<double>& trim_fractions,
                              const std::vector<EnforcementMode>& modes,
                              const std::string& out_dir = "");

/// Least-squares slope of log(norm) against log(h).
double fitted_slope(const std::vector<double>& hs, const std::vector<double>& norms);

}  // namespace sifem
