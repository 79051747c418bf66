#include "sifem/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sifem/errors.hpp"

namespace sifem {

namespace {

constexpr const char* kVersion = "1.0.0";

using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json vec2_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a 2-vector");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

const char* mode_name(EnforcementMode mode) {
  return mode == EnforcementMode::Weak ? "weak" : "strong";
}

EnforcementMode mode_from_name(const std::string& s) {
  if (s == "weak") return EnforcementMode::Weak;
  if (s == "strong") return EnforcementMode::Strong;
  throw ConfigError("unknown enforcement mode: " + s);
}

json law_to_json(const InterfaceLaw& law) {
  return json{{"transmissivity", law.transmissivity}, {"k_n", law.k_n},
              {"k_t", law.k_t},                       {"h_n", law.h_n},
              {"h_t", law.h_t}};
}

InterfaceLaw law_from_json(const json& j) {
  InterfaceLaw law;
  law.transmissivity = j.value("transmissivity", 0.0);
  law.k_n = j.value("k_n", 0.0);
  law.k_t = j.value("k_t", 0.0);
  law.h_n = j.value("h_n", 0.0);
  law.h_t = j.value("h_t", 0.0);
  law.k_nt = j.value("k_nt", 0.0);
  law.h_nt = j.value("h_nt", 0.0);
  law.validate();
  return law;
}

json crack_to_json(const CrackSpec& c) {
  json j{{"kind", c.kind}, {"law", law_to_json(c.law)}};
  j["center"] = vec2_to_json(c.center);
  if (c.kind == "segment") {
    j["length"] = c.length;
    j["angle"] = c.angle;
  } else if (c.kind == "arc") {
    j["radius"] = c.radius;
    j["start_deg"] = c.start_deg;
    j["span_deg"] = c.span_deg;
    j["n_seg"] = c.n_seg;
  } else if (c.kind == "sine") {
    j["extent"] = c.extent;
    j["amplitude"] = c.amplitude;
    j["n_seg"] = c.n_seg;
  } else if (c.kind == "parabola") {
    j["half_width"] = c.half_width;
    j["height"] = c.height;
    j["n_seg"] = c.n_seg;
  } else if (c.kind == "polyline") {
    json pts = json::array();
    for (const auto& p : c.points) pts.push_back(vec2_to_json(p));
    j["points"] = pts;
  }
  return j;
}

CrackSpec crack_from_json(const json& j) {
  CrackSpec c;
  c.kind = j.at("kind").get<std::string>();
  if (j.contains("center")) c.center = vec2_from_json(j["center"]);
  c.length = j.value("length", 0.0);
  c.angle = j.value("angle", 0.0);
  c.radius = j.value("radius", 0.0);
  c.start_deg = j.value("start_deg", 0.0);
  c.span_deg = j.value("span_deg", 0.0);
  c.extent = j.value("extent", 0.0);
  c.amplitude = j.value("amplitude", 0.0);
  c.half_width = j.value("half_width", 0.0);
  c.height = j.value("height", 0.0);
  c.n_seg = j.value("n_seg", 0);
  if (j.contains("points")) {
    for (const auto& p : j["points"]) c.points.push_back(vec2_from_json(p));
  }
  if (j.contains("law")) c.law = law_from_json(j["law"]);
  return c;
}

json spec_to_json_obj(const CaseSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["n"] = spec.n;
  j["domain"] = {{"lo", vec2_to_json(spec.domain.lo)},
                 {"hi", vec2_to_json(spec.domain.hi)}};
  j["material"] = {{"shear_modulus", spec.material.shear_modulus},
                   {"poisson", spec.material.poisson},
                   {"biot_alpha", spec.material.biot_alpha},
                   {"compressibility", spec.material.compressibility},
                   {"mobility", spec.material.mobility}};
  json cracks = json::array();
  for (const auto& c : spec.cracks) cracks.push_back(crack_to_json(c));
  j["cracks"] = cracks;
  json sources = json::array();
  for (const auto& s : spec.sources) {
    sources.push_back({{"center", vec2_to_json(s.center)},
                       {"radius", s.radius},
                       {"rate", s.rate}});
  }
  j["sources"] = sources;
  j["t_end"] = spec.t_end;
  j["enforcement"] = mode_name(spec.mode);
  switch (spec.snapshots) {
    case SnapshotCadence::Final: j["snapshots"] = "final"; break;
    case SnapshotCadence::All: j["snapshots"] = "all"; break;
    case SnapshotCadence::Stride:
      j["snapshots"] = "stride:" + std::to_string(spec.snapshot_stride);
      break;
  }
  j["trim_fractions"] = spec.trim_fractions;
  j["with_hessian_blocks"] = spec.with_hessian;
  j["time"] = {{"atol", spec.time.atol},
               {"rtol", spec.time.rtol},
               {"dt_init", spec.time.dt_init}};
  return j;
}

void parse_snapshots(const std::string& text, CaseSpec& spec) {
  if (text == "final") {
    spec.snapshots = SnapshotCadence::Final;
  } else if (text == "all") {
    spec.snapshots = SnapshotCadence::All;
  } else if (text.rfind("stride:", 0) == 0) {
    spec.snapshots = SnapshotCadence::Stride;
    spec.snapshot_stride = std::stoi(text.substr(7));
    if (spec.snapshot_stride < 1) throw ConfigError("snapshot stride must be >= 1");
  } else {
    throw ConfigError("unknown snapshot cadence: " + text);
  }
}

CaseSpec spec_from_json_obj(const json& j) {
  CaseSpec spec;
  spec.name = j.value("name", "custom");
  spec.n = j.value("n", 20);
  if (j.contains("domain")) {
    spec.domain.lo = vec2_from_json(j["domain"]["lo"]);
    spec.domain.hi = vec2_from_json(j["domain"]["hi"]);
  }
  if (j.contains("material")) {
    const json& m = j["material"];
    spec.material.shear_modulus = m.value("shear_modulus", spec.material.shear_modulus);
    spec.material.poisson = m.value("poisson", spec.material.poisson);
    spec.material.biot_alpha = m.value("biot_alpha", spec.material.biot_alpha);
    spec.material.compressibility =
        m.value("compressibility", spec.material.compressibility);
    spec.material.mobility = m.value("mobility", spec.material.mobility);
  }
  if (j.contains("cracks")) {
    for (const auto& c : j["cracks"]) spec.cracks.push_back(crack_from_json(c));
  }
  if (j.contains("sources")) {
    for (const auto& s : j["sources"]) {
      SourceTerm src;
      src.center = vec2_from_json(s.at("center"));
      src.radius = s.value("radius", 0.1);
      src.rate = s.value("rate", 0.0);
      if (src.radius <= 0.0) throw ConfigError("source radius must be positive");
      spec.sources.push_back(src);
    }
  }
  spec.t_end = j.value("t_end", 354.0);
  spec.mode = mode_from_name(j.value("enforcement", "weak"));
  parse_snapshots(j.value("snapshots", "final"), spec);
  if (j.contains("trim_fractions")) {
    spec.trim_fractions = j["trim_fractions"].get<std::vector<double>>();
  }
  spec.with_hessian = j.value("with_hessian_blocks", false);
  if (j.contains("time")) {
    spec.time.atol = j["time"].value("atol", spec.time.atol);
    spec.time.rtol = j["time"].value("rtol", spec.time.rtol);
    spec.time.dt_init = j["time"].value("dt_init", spec.time.dt_init);
  }
  spec.material.validate();
  return spec;
}

}  // namespace

CrackCurve make_crack(const CrackSpec& spec) {
  if (spec.kind == "segment") {
    return make_segment(spec.center, spec.length, spec.angle);
  }
  if (spec.kind == "arc") {
    return make_arc_polyline(spec.center, spec.radius,
                             spec.start_deg * M_PI / 180.0,
                             spec.span_deg * M_PI / 180.0, spec.n_seg);
  }
  if (spec.kind == "sine") {
    return make_sine_curve(spec.center, spec.extent, spec.amplitude,
                           spec.n_seg > 0 ? spec.n_seg : 64);
  }
  if (spec.kind == "parabola") {
    return make_parabola_polyline(spec.center, spec.half_width, spec.height,
                                  spec.n_seg);
  }
  if (spec.kind == "polyline") {
    return CrackCurve(spec.points);
  }
  throw ConfigError("unknown crack kind: " + spec.kind);
}

std::string case_spec_to_json(const CaseSpec& spec) {
  return spec_to_json_obj(spec).dump(2);
}

CaseSpec case_spec_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON configuration: ") + e.what());
  }
  return spec_from_json_obj(j);
}

CaseSpec load_case_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return case_spec_from_json(ss.str());
}

CaseSpec builtin_case(const std::string& name, int n, EnforcementMode mode) {
  CaseSpec spec;
  spec.name = name;
  spec.n = n;
  spec.mode = mode;

  InterfaceLaw welded;
  welded.transmissivity = 0.0;
  welded.k_n = welded.k_t = 1.0e8;

  SourceTerm injection;
  injection.center = Vec2(-0.25, -0.25);
  injection.radius = 0.1;
  injection.rate = 1.0e-5;

  if (name == "offset") {
    // Vertical crack through the whole domain, laterally offset from the
    // nearest face column by roughly half an element width at n = 20 and
    // never landing on a mesh line of the refinement family.
    CrackSpec c;
    c.kind = "segment";
    c.center = Vec2(1.0 / 42.0, 0.0);
    c.length = 1.0;
    c.angle = M_PI / 2.0;
    c.law = welded;
    spec.cracks.push_back(c);
    spec.sources.push_back(injection);
    spec.t_end = 354.0;
    return spec;
  }
  if (name == "angled_boundary") {
    CrackSpec c;
    c.kind = "segment";
    c.center = Vec2(0.0, 0.0);
    c.length = std::sqrt(1.0 + 0.36);
    c.angle = std::atan(0.6);
    c.law = welded;
    spec.cracks.push_back(c);
    spec.sources.push_back(injection);
    spec.t_end = 354.0;
    return spec;
  }
  if (name == "angled_embedded") {
    CrackSpec c;
    c.kind = "segment";
    c.center = Vec2(0.0, 0.0);
    c.length = 0.5 * std::sqrt(1.0 + 0.36);
    c.angle = std::atan(0.6);
    c.law = welded;
    spec.cracks.push_back(c);
    spec.sources.push_back(injection);
    spec.t_end = 354.0;
    return spec;
  }
  if (name == "multicrack") {
    // C-shaped polyline on a circular arc. The opening faces the upper-left
    // sector so the arc keeps clear of the oblique segment and the S-curve
    // endpoint at every benchmark resolution.
    CrackSpec c0;
    c0.kind = "arc";
    c0.center = Vec2(0.0, -0.15);
    c0.radius = 0.15;
    c0.start_deg = -115.0;
    c0.span_deg = 200.0;
    c0.n_seg = 8;
    c0.law = welded;

    // Compliant oblique segment, sloping down-right so its surrogate stays
    // clear of the S-curve endpoint on every benchmark mesh.
    CrackSpec c1;
    c1.kind = "segment";
    c1.center = Vec2(-0.10, -0.05);
    c1.length = 0.25;
    c1.angle = -0.7;
    c1.law.transmissivity = 0.0;
    c1.law.k_n = c1.law.k_t = 1.0e4;

    CrackSpec c2;  // semi-permeable S-curve
    c2.kind = "sine";
    c2.center = Vec2(-0.30, -0.10);
    c2.extent = 0.30;
    c2.amplitude = 0.03;
    c2.n_seg = 64;
    c2.law.transmissivity = 5.0;
    c2.law.k_n = c2.law.k_t = 1.0e8;

    CrackSpec c3;  // parabolic arc, eight segments
    c3.kind = "parabola";
    c3.center = Vec2(0.18, 0.20);
    c3.half_width = 0.14;
    c3.height = 0.10;
    c3.n_seg = 8;
    c3.law = welded;

    spec.cracks = {c0, c1, c2, c3};

    SourceTerm extraction;
    extraction.center = Vec2(-0.25, -0.25);
    extraction.radius = 0.1;
    extraction.rate = -1.0e-5;
    SourceTerm inj2;
    inj2.center = Vec2(-0.30, 0.25);
    inj2.radius = 0.1;
    inj2.rate = 1.0e-5;
    spec.sources = {extraction, inj2};
    spec.t_end = 3000.0;
    return spec;
  }
  throw ConfigError("unknown case name: " + name);
}

double lambda_residual_max(const SplitMesh& mesh, const DofMap& dofs,
                           const std::vector<ShiftData>& shifts,
                           const std::vector<InterfaceLaw>& laws,
                           const MaterialParams& mat, const State& state) {
  (void)mat;
  if (dofs.mode() != EnforcementMode::Strong) return 0.0;
  double worst = 0.0;
  for (const auto& prof : lambda_residual_profiles(mesh, dofs, shifts, laws, state)) {
    for (double v : prof.value) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

RunResult run_case(const CaseSpec& spec, const std::string& out_dir,
                   bool debug_dumps) {
  const auto t_start = std::chrono::steady_clock::now();
  spec.material.validate();
  if (spec.n < 2) throw ConfigError("mesh resolution n must be at least 2");

  RunResult result;
  result.spec = spec;

  std::vector<CrackCurve> curves;
  for (const auto& c : spec.cracks) {
    c.law.validate();
    curves.push_back(make_crack(c));
    result.laws.push_back(c.law);
  }

  const StructuredQuadMesh grid = build_grid(spec.n, spec.domain);
  std::vector<SurrogateInterface> surrogates;
  for (const auto& curve : curves) surrogates.push_back(select_surrogate(grid, curve));
  if (debug_dumps && !out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (std::size_t c = 0; c < surrogates.size(); ++c) {
      std::ofstream os(out_dir + "/classification_" + std::to_string(c) + ".csv");
      dump_classification(grid, surrogates[c], os);
    }
  }
  result.mesh = std::make_shared<SplitMesh>(split_along(grid, surrogates));
  for (std::size_t c = 0; c < curves.size(); ++c) {
    result.shifts.push_back(shift_data(*result.mesh, static_cast<int>(c), curves[c]));
    if (result.shifts.back().any_flagged) {
      std::cerr << "warning: surrogate facet nearly tangent to crack " << c
                << " (cos phi <= 0)\n";
    }
  }

  result.dofs = std::make_shared<DofMap>(*result.mesh, spec.mode);
  SystemBlocks blocks;
  assemble_bulk(*result.mesh, *result.dofs, spec.material, blocks);
  assemble_interface_weak(*result.mesh, result.shifts, result.laws, spec.material,
                          *result.dofs, spec.with_hessian, blocks);
  if (spec.mode == EnforcementMode::Strong) {
    assemble_coupling(*result.mesh, result.shifts, *result.dofs, blocks);
  }
  assemble_rhs(*result.mesh, *result.dofs, spec.sources, 0.0, blocks);
  if (debug_dumps && !out_dir.empty()) {
    const std::vector<std::pair<const char*, const SpMat*>> mats{
        {"M_p", &blocks.M_p},   {"C", &blocks.C},       {"K_p", &blocks.K_p},
        {"K_u", &blocks.K_u},   {"Kc_p", &blocks.Kc_p}, {"Kc_u", &blocks.Kc_u},
        {"Dc_u", &blocks.Dc_u}, {"Rc_p", &blocks.Rc_p}, {"Rc_uu", &blocks.Rc_uu},
        {"Rc_up", &blocks.Rc_up}};
    for (const auto& [name, mat_ptr] : mats) {
      std::ofstream os(out_dir + "/matrix_" + name + ".txt");
      dump_triplets(*mat_ptr, os);
    }
  }
  ConstraintSet constraints = benchmark_constraints(*result.mesh, *result.dofs);

  DAESystem system(*result.mesh, *result.dofs, std::move(blocks),
                   std::move(constraints), result.shifts, result.laws);

  const Eigen::VectorXd p0 = Eigen::VectorXd::Zero(result.dofs->n_pressure());
  State state = system.solve_initial(p0);

  int accepted = 0;
  double lam_max = 0.0;
  std::vector<std::pair<int, State>> snapshots;
  auto on_accept = [&](const State& s) {
    ++accepted;
    if (spec.mode == EnforcementMode::Strong) {
      lam_max = std::max(lam_max, lambda_residual_max(*result.mesh, *result.dofs,
                                                      result.shifts, result.laws,
                                                      spec.material, s));
    }
    const bool want =
        (spec.snapshots == SnapshotCadence::All) ||
        (spec.snapshots == SnapshotCadence::Stride &&
         accepted % spec.snapshot_stride == 0);
    if (want && !out_dir.empty()) snapshots.emplace_back(accepted, s);
  };

  result.final_state = system.run_transient(state, spec.t_end, spec.time, on_accept);
  result.accepted_steps = accepted;
  result.factorizations = system.factorization_count();
  result.lambda_residual_max = lam_max;

  result.gradients = recover_gradients(*result.mesh, *result.dofs, result.final_state.z);
  result.profiles = residual_profiles(*result.mesh, *result.dofs, result.shifts,
                                      result.laws, spec.material, result.final_state,
                                      result.gradients);

  const auto t_stop = std::chrono::steady_clock::now();
  result.wall_seconds = std::chrono::duration<double>(t_stop - t_start).count();

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
      std::ofstream os(out_dir + "/config.json");
      os << case_spec_to_json(spec) << "\n";
    }
    for (const auto& [step, snap] : snapshots) {
      char name[64];
      std::snprintf(name, sizeof(name), "/fields_%05d.vtk", step);
      const RecoveredGradients g = recover_gradients(*result.mesh, *result.dofs, snap.z);
      write_vtk(out_dir + name, *result.mesh, *result.dofs, snap, g, spec.material,
                result.shifts, true);
    }
    write_vtk(out_dir + "/fields_final.vtk", *result.mesh, *result.dofs,
              result.final_state, result.gradients, spec.material, result.shifts, true);
    write_profiles_csv(out_dir + "/profiles.csv", result.profiles);
    {
      std::ofstream os(out_dir + "/norms.csv");
      os << "n,h,kind,eps,norm\n";
      const double h = spec.domain.width() / spec.n;
      for (const auto& prof : result.profiles) {
        for (double eps : spec.trim_fractions) {
          os << spec.n << "," << fmt17(h) << "," << mode_name(spec.mode) << "/"
             << residual_kind_name(prof.kind) << "," << fmt17(eps) << ","
             << fmt17(trimmed_norm(prof, eps)) << "\n";
        }
      }
    }
    {
      json manifest;
      manifest["version"] = kVersion;
      manifest["spec"] = json::parse(case_spec_to_json(spec));
      manifest["dofs"] = {{"pressure", result.dofs->n_pressure()},
                          {"displacement", result.dofs->n_displacement()},
                          {"interface", result.dofs->n_interface()}};
      manifest["accepted_steps"] = result.accepted_steps;
      manifest["factorizations"] = result.factorizations;
      manifest["wall_seconds"] = result.wall_seconds;
      if (spec.mode == EnforcementMode::Strong) {
        manifest["lambda_residual_max"] = result.lambda_residual_max;
      }
      std::ofstream os(out_dir + "/manifest.json");
      os << manifest.dump(2) << "\n";
    }
    {
      std::ofstream os(out_dir + "/summary.txt");
      os << "case " << spec.name << " n=" << spec.n << " mode=" << mode_name(spec.mode)
         << "\n";
      os << "accepted steps: " << result.accepted_steps << "\n";
      os << "wall seconds: " << result.wall_seconds << "\n";
      for (const auto& prof : result.profiles) {
        os << residual_kind_name(prof.kind) << " L2 = "
           << fmt17(trimmed_norm(prof, 0.0)) << "\n";
      }
    }
  }
  return result;
}

const StudyReport::Series* StudyReport::find(EnforcementMode mode, ResidualKind kind,
                                             double eps) const {
  for (const auto& s : series) {
    if (s.mode == mode && s.kind == kind && std::abs(s.eps - eps) < 1e-12) return &s;
  }
  return nullptr;
}

const StudyReport::SelfConvergence* StudyReport::find_self(EnforcementMode mode,
                                                           FieldTag field) const {
  for (const auto& s : self_errors) {
    if (s.mode == mode && s.field == field) return &s;
  }
  return nullptr;
}

double fitted_slope(const std::vector<double>& hs, const std::vector<double>& norms) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (norms[i] <= 0.0) continue;
    const double x = std::log(hs[i]);
    const double y = std::log(norms[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

StudyReport convergence_study(const CaseSpec& spec_template,
                              const std::vector<int>& ns,
                              const std::vector<double>& trim_fractions,
                              const std::vector<EnforcementMode>& modes,
                              const std::string& out_dir) {
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1] || ns[i] % ns[i - 1] != 0) {
      throw ConfigError("study levels must be strictly increasing, each dividing the next");
    }
  }

  StudyReport report;
  report.ns = ns;
  for (int n : ns) report.hs.push_back(spec_template.domain.width() / n);

  // Keep the per-level results alive for self-convergence pairing.
  std::map<std::pair<int, int>, RunResult> results;  // (mode, n) -> result
  for (EnforcementMode mode : modes) {
    for (int n : ns) {
      CaseSpec spec = spec_template;
      spec.n = n;
      spec.mode = mode;
      spec.trim_fractions = trim_fractions;
      const auto t0 = std::chrono::steady_clock::now();
      RunResult res = run_case(spec);
      const auto t1 = std::chrono::steady_clock::now();
      report.level_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
      results.emplace(std::make_pair(static_cast<int>(mode), n), std::move(res));
    }
  }

  const std::array<ResidualKind, 6> kinds{
      ResidualKind::FluxConstitutive,      ResidualKind::FluxBalance,
      ResidualKind::TractionBalanceN,      ResidualKind::TractionBalanceM,
      ResidualKind::TractionConstitutiveN, ResidualKind::TractionConstitutiveM};

  for (EnforcementMode mode : modes) {
    for (ResidualKind kind : kinds) {
      for (double eps : trim_fractions) {
        StudyReport::Series series;
        series.mode = mode;
        series.kind = kind;
        series.eps = eps;
        for (int n : ns) {
          const RunResult& res = results.at({static_cast<int>(mode), n});
          double acc = 0.0;
          for (const auto& prof : res.profiles) {
            if (prof.kind != kind) continue;
            const double v = trimmed_norm(prof, eps);
            acc += v * v;  // multiple cracks combine in quadrature
          }
          series.norms.push_back(std::sqrt(acc));
        }
        for (std::size_t i = 0; i + 1 < series.norms.size(); ++i) {
          const double num = std::log(series.norms[i] / series.norms[i + 1]);
          const double den = std::log(report.hs[i] / report.hs[i + 1]);
          series.pair_slopes.push_back(num / den);
        }
        series.fitted_slope = fitted_slope(report.hs, series.norms);
        report.series.push_back(std::move(series));
      }
    }

    for (FieldTag field : {FieldTag::Pressure, FieldTag::Displacement}) {
      StudyReport::SelfConvergence sc;
      sc.mode = mode;
      sc.field = field;
      for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
        const RunResult& coarse = results.at({static_cast<int>(mode), ns[i]});
        const RunResult& fine = results.at({static_cast<int>(mode), ns[i + 1]});
        sc.errors.push_back(self_convergence_error(
            *coarse.mesh, *coarse.dofs, coarse.final_state.z, *fine.mesh, *fine.dofs,
            fine.final_state.z, field));
      }
      report.self_errors.push_back(std::move(sc));
    }
  }

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
      std::ofstream os(out_dir + "/norms.csv");
      os << "n,h,kind,eps,norm\n";
      for (const auto& series : report.series) {
        for (std::size_t i = 0; i < report.ns.size(); ++i) {
          os << report.ns[i] << "," << fmt17(report.hs[i]) << ","
             << mode_name(series.mode) << "/" << residual_kind_name(series.kind) << ","
             << fmt17(series.eps) << "," << fmt17(series.norms[i]) << "\n";
        }
      }
      for (const auto& sc : report.self_errors) {
        const char* tag = (sc.field == FieldTag::Pressure) ? "self_p" : "self_u";
        for (std::size_t i = 0; i < sc.errors.size(); ++i) {
          os << report.ns[i] << "," << fmt17(report.hs[i]) << ","
             << mode_name(sc.mode) << "/" << tag << ",0," << fmt17(sc.errors[i])
             << "\n";
        }
      }
    }
    {
      std::ofstream os(out_dir + "/summary.txt");
      os << "convergence study: " << spec_template.name << "\nlevels:";
      for (int n : report.ns) os << " " << n;
      os << "\n\n";
      for (const auto& series : report.series) {
        os << mode_name(series.mode) << "/" << residual_kind_name(series.kind)
           << " eps=" << series.eps << "  norms:";
        for (double v : series.norms) os << " " << fmt17(v);
        os << "  fitted slope: " << series.fitted_slope << "\n";
      }
      os << "\n";
      for (const auto& sc : report.self_errors) {
        os << mode_name(sc.mode)
           << ((sc.field == FieldTag::Pressure) ? "/self_p:" : "/self_u:");
        for (double e : sc.errors) os << " " << fmt17(e);
        os << "\n";
      }
    }
  }
  return report;
}

}  // namespace sifem
