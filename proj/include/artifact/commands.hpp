#pragma once

#include <fmt/format.h>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "artifact/config.hpp"
#include "artifact/hmap.hpp"
#include "artifact/m5.hpp"
#include "artifact/report.hpp"
#include "artifact/s3.hpp"
#include "artifact/verification.hpp"
#include "artifact/verification_m5.hpp"
#include "artifact/verification_plug.hpp"

namespace artifact {

inline constexpr const char* kSchemaVersion = "artifact-report/1";

// Zero in a numeric option means "command default".
struct RunConfig {
  std::string command, target;
  std::string field;
  std::string params_path;
  std::map<std::string, double> overrides;  // applied on top of the parameter file
  double t_max = 0.0, dt = 0.0, delta = 0.0, epsilon = 0.0, horizon = 0.0;
  int grid = 0, samples = 0;
  uint64_t seed = 1;
  std::string out, format = "json";
  bool negative_control = false;

  double or_default(double v, double d) const { return v > 0.0 ? v : d; }
  int or_default(int v, int d) const { return v > 0 ? v : d; }

  // Thread count is not part of the config: output must not depend on it.
  json to_json() const {
    json j;
    j["field"] = field;
    j["params"] = params_path;
    j["overrides"] = overrides;
    j["t_max"] = t_max;
    j["dt"] = dt;
    j["delta"] = delta;
    j["epsilon"] = epsilon;
    j["horizon"] = horizon;
    j["grid"] = grid;
    j["samples"] = samples;
    j["seed"] = seed;
    j["format"] = format;
    j["negative_control"] = negative_control;
    return j;
  }

  ParamFile params() const {
    ParamFile pf;
    if (!params_path.empty()) pf = load_params(params_path);
    for (auto& [k, v] : overrides) pf.values[k] = v;
    return pf;
  }
};

struct Verdict {
  json results = json::object();
  json margins = json::object();
  bool pass = false;
};

inline json make_report(const RunConfig& cfg, const Verdict& v) {
  json j;
  j["schema"] = kSchemaVersion;
  j["command"] = cfg.target.empty() ? cfg.command : cfg.command + " " + cfg.target;
  j["config"] = cfg.to_json();
  j["results"] = v.results;
  j["margins"] = v.margins;
  j["pass"] = v.pass;
  return j;
}

inline void add_margins(Verdict& v, const BuildReport& r) {
  for (auto& c : r.checks) v.margins[r.name + ": " + c.name] = c.margin;
}

// ---------- parameter sets ----------

inline M5Params m5_params_from(const ParamFile& pf) {
  M5Params P;
  P.lorenz = LorenzParams::from(pf);
  P.rp2 = RP2Params::from(pf);
  P.h = HParams::from(pf);
  return P;
}

// Designed violations used by the negative-control flag, one per target.
inline void apply_negative_control(const std::string& target, ParamFile& pf) {
  if (target == "lorenz" || target == "s3" || target == "msh") pf.values["lambda3"] = -1.8;
  else if (target == "plug") pf.values["mu"] = 1.5;
  else if (target == "rp2") pf.values["lambda_uuu"] = 5.0;
  else if (target == "h") pf.values["p_x"] = 0.1;
}

// ---------- field build ----------

inline Verdict cmd_field_build(const RunConfig& cfg) {
  ParamFile pf = cfg.params();
  const std::string& name = cfg.target;
  if (cfg.negative_control) {
    if (name == "lorenz" || name == "s3") pf.values["lambda1"] = 2.5;
    else if (name == "m5") pf.values["p_x"] = 0.1;
    else apply_negative_control(name, pf);
  }
  Verdict v;
  std::vector<BuildReport> reps;
  if (name == "lorenz") {
    reps.push_back(LorenzParams::from(pf).checks());
  } else if (name == "plug") {
    reps.push_back(PlugParams::from(pf).checks());
  } else if (name == "rp2") {
    reps.push_back(RP2Params::from(pf).checks());
  } else if (name == "h") {
    reps.push_back(HParams::from(pf).checks());
  } else if (name == "s3") {
    LorenzParams L = LorenzParams::from(pf);
    PlugParams P = PlugParams::from(pf);
    reps.push_back(L.checks());
    reps.push_back(P.checks());
    if (reps[0].pass() && reps[1].pass()) reps.push_back(glue_S3(P, L, false).report);
  } else if (name == "m5") {
    M5Params P = m5_params_from(pf);
    reps.push_back(P.lorenz.checks());
    reps.push_back(P.rp2.checks());
    reps.push_back(P.h.checks());
  } else {
    throw Error(ErrorKind::ConfigError, "unknown field '" + name + "' (lorenz, plug, rp2, h, s3, m5)");
  }
  v.pass = true;
  json arr = json::array();
  for (auto& r : reps) {
    arr.push_back(r.to_json());
    add_margins(v, r);
    if (!r.pass()) {
      v.pass = false;
      if (!v.results.contains("violated")) v.results["violated"] = r.name + ": " + r.first_failure()->name;
    }
  }
  v.results["reports"] = arr;
  return v;
}

// ---------- verify ----------

inline Verdict verify_lorenz(const RunConfig& cfg, const ParamFile& pf) {
  LorenzParams L = LorenzParams::from(pf);
  auto F = build_lorenz(L, false);
  auto Fr = build_lorenz_reversed(L, false);
  Verdict v;
  const SingularityData& sa = F->singularity("sigma_a");
  const SingularityData& sr = Fr->singularity("sigma_r");
  bool sll_a = strong_lorenz_like(sa), sll_r = strong_lorenz_like(sr);
  auto rates = sigma_center_line_rates(*F, "sigma_a", cfg.or_default(cfg.horizon, 1.0));
  json jr = json::array();
  bool rates_ok = true;
  for (auto& r : rates) {
    jr.push_back(to_json(r));
    rates_ok = rates_ok && r.max_error <= 1e-6 && r.sign_pattern;
  }
  v.results["strong_lorenz_like"] = {{"sigma_a", sll_a}, {"sigma_r", sll_r}};
  v.results["exponents"] = {L.l1, L.l3, L.l2};
  v.results["center_line_rates"] = jr;
  v.margins["lambda1 + lambda3"] = L.l1 + L.l3;
  v.margins["-lambda3"] = -L.l3;
  v.margins["lambda1 + lambda2 (negative)"] = -(L.l1 + L.l2);
  v.pass = sll_a && sll_r && rates_ok;
  return v;
}

inline Verdict verify_plug(const RunConfig& cfg, const ParamFile& pf) {
  PlugParams P = PlugParams::from(pf);
  const double delta = cfg.or_default(cfg.delta, 0.02), eps = cfg.or_default(cfg.epsilon, 0.01);
  Verdict v;
  PlugClasses inside = plug_chain_classes(P, false, delta, eps);
  PlugClasses comp = plug_chain_classes(P, true, delta, eps);
  v.results["classes"] = inside.to_json();
  v.results["classes_completion"] = comp.to_json();
  bool ok = inside.pass && comp.pass;
  if (ok) {
    PlugCrossing pc = build_plug_crossing(P);
    auto tr = crossing_transversality(pc, cfg.or_default(cfg.grid, 32));
    auto ac = annulus_crossing(pc, cfg.or_default(cfg.samples, 1000), cfg.or_default(cfg.t_max, 400.0));
    auto fn = plug_filtrating_neighborhood(P);
    v.results["transversality"] = tr.to_json();
    v.results["annulus_crossing"] = ac.to_json();
    v.results["filtrating_neighborhood"] = {
        {"y_range", {fn.region.parts.front().lo(1), fn.region.parts.front().hi(1)}},
        {"attracting_margin", fn.attracting.margin},
        {"repelling_margin", fn.repelling.margin}};
    v.margins["min |dP_theta/dr|"] = tr.min_slope;
    v.margins["refinement change (<= 0.2)"] = 0.2 - tr.refinement_change;
    v.margins["annulus crossed"] = ac.annulus_crossed - ac.annulus_samples;
    v.margins["disc denied"] = ac.disc_denied - ac.disc_samples;
    ok = tr.pass && ac.pass;
  }
  v.margins["class count"] = double(inside.classes.size()) - inside.expected;
  v.margins["class count (completion)"] = double(comp.classes.size()) - comp.expected;
  v.pass = ok;
  return v;
}

inline Verdict verify_rp2(const RunConfig& cfg, const ParamFile& pf) {
  RP2Params P = RP2Params::from(pf);
  auto Y = build_rp2_field(P, !cfg.negative_control);
  // the negative control runs the time-reversed field against the same lemma
  if (cfg.negative_control) Y = Y->negated();
  Verdict v;
  auto rep = rp2_crossings(*Y, P, cfg.or_default(cfg.samples, 100), cfg.or_default(cfg.t_max, 100.0));
  v.results["crossings"] = rep.to_json();
  v.margins["misclassified"] = -double(rep.mismatches);
  v.pass = rep.pass;
  return v;
}

inline Verdict verify_h(const RunConfig&, const ParamFile& pf) {
  HParams H = HParams::from(pf);
  Verdict v;
  BuildReport r = H.checks();
  double iso = isotopy_endpoint_error(H, false);
  v.results["checks"] = r.to_json();
  v.results["isotopy_endpoint_error"] = iso;
  add_margins(v, r);
  v.margins["isotopy endpoint (<= 1e-6)"] = 1e-6 - iso;
  v.pass = r.pass() && iso <= 1e-6;
  return v;
}

inline Verdict verify_s3(const RunConfig& cfg, const ParamFile& pf) {
  LorenzParams L = LorenzParams::from(pf);
  auto X = build_S3_field(L, nullptr, false);
  Verdict v;
  const SingularityData& sa = X->singularity("sigma_a");
  const SingularityData& sr = X->singularity("sigma_r");
  const int n = cfg.or_default(cfg.samples, 200);
  const double T = cfg.or_default(cfg.t_max, kEscapeTmax);
  bool sll = strong_lorenz_like(sa) && strong_lorenz_like(sr);
  v.results["strong_lorenz_like"] = sll;
  bool ok = sll;
  if (sll) {
    auto ea = escaping_check(*X, sa, true, 1, kEscapeRadius, T, n);
    auto er = escaping_check(*X, sr, false, 1, kEscapeRadius, T, n);
    v.results["escaping"] = {ea.to_json(), er.to_json()};
    v.margins["sigma_a escaped"] = ea.escaped - ea.samples;
    v.margins["sigma_r escaped"] = er.escaped - er.samples;
    ok = ea.pass && er.pass;
  }
  auto rates = sigma_center_line_rates(*X, "sigma_a");
  json jr = json::array();
  for (auto& r : rates) {
    jr.push_back(to_json(r));
    ok = ok && r.sign_pattern;
  }
  v.results["center_line_rates"] = jr;
  v.pass = ok;
  return v;
}

inline std::vector<CenterSpace> s3_centers(const VectorFieldSpec& X) {
  return {center_space(X, X.singularity("sigma_a")), center_space(X, X.singularity("sigma_r"))};
}

inline Verdict verify_msh(const RunConfig& cfg, const ParamFile& pf) {
  const std::string field = cfg.field.empty() ? "s3" : cfg.field;
  const double T = cfg.or_default(cfg.horizon, 5.0);
  Verdict v;
  if (field == "s3") {
    LorenzParams L = LorenzParams::from(pf);
    auto X = build_S3_field(L, nullptr, false);
    std::vector<PeriodicOrbit> po;
    if (L.checks().pass()) po = lorenz_periodic_orbits(*X, L, 6, 16);
    std::vector<CenterSpace> centers;
    // center grids at the singularities; for parameters where the center
    // space is not certified the eigenplane of the two weakest directions is used
    for (const char* nm : {"sigma_a", "sigma_r"}) {
      const SingularityData& s = X->singularity(nm);
      try {
        centers.push_back(center_space(*X, s));
      } catch (const Error&) {
        CenterSpace c;
        c.singularity = nm;
        c.basis = s.eigenvectors.rightCols(2);
        if (std::string(nm) == "sigma_r") c.basis = s.eigenvectors.leftCols(2);
        centers.push_back(c);
      }
    }
    auto B = sample_B(*X, po, {}, centers, T, 1e9);
    MSHCertificate C = msh_certificate(*X, B, T, 1);
    v.results["periodic_orbits"] = po.size();
    v.results["elements"] = B.elements.size();
    v.results["certificate"] = C.to_json();
    v.margins["domination"] = C.domination_margin;
    v.margins["contraction"] = C.contraction_margin;
    v.margins["expansion"] = C.expansion_margin;
    v.pass = C.pass && po.size() >= 10;
  } else if (field == "m5") {
    M5Params P = m5_params_from(pf);
    auto S = build_ZH(P, !cfg.negative_control);
    auto po = lorenz_periodic_orbits(*S->X, P.lorenz, 6, 16);
    auto M = m5_certificate(*S, po, s3_centers(*S->X), T);
    v.results["certificate"] = M.to_json();
    v.margins["domination"] = M.rates.domination_margin;
    v.margins["contraction"] = M.rates.contraction_margin;
    v.margins["expansion"] = M.rates.expansion_margin;
    v.margins["cone angle - 1e-3"] = M.cone.report.min_angle - kConeAngleThreshold;
    v.pass = M.pass;
  } else {
    throw Error(ErrorKind::ConfigError, "msh certificate is defined for --field s3 or m5");
  }
  return v;
}

inline Verdict verify_m5(const RunConfig& cfg, const ParamFile& pf) {
  M5Params P = m5_params_from(pf);
  if (cfg.negative_control) {
    // screw without tilt and a half turn: the connecting cones line up
    P.h.turn = kPi;
    P.h.tilt = 0.0;
  }
  auto S = build_ZH(P, !cfg.negative_control);
  Verdict v;
  auto C = m5_orbit_classification(*S, cfg.or_default(cfg.samples, 1000), cfg.or_default(cfg.t_max, 100.0),
                                   cfg.seed);
  bool stays = m5_p_orbit_stays(*S, 50.0);
  auto cone = m5_cone_transversality(*S);
  v.results["classification"] = C.to_json();
  v.results["p_orbit_stays"] = stays;
  v.results["cone"] = cone.to_json();
  v.margins["escaping fraction - 0.99"] = C.escaping_fraction - 0.99;
  v.margins["stayer distance (spacings) below 2"] = 2.0 - C.worst_stayer_ratio;
  v.margins["cone angle - 1e-3"] = cone.report.min_angle - kConeAngleThreshold;
  v.pass = C.escaping_fraction >= 0.99 && stays && C.stayers_concentrate && cone.report.pass;
  return v;
}

inline Verdict cmd_verify(const RunConfig& cfg) {
  ParamFile pf = cfg.params();
  const std::string& t = cfg.target;
  if (cfg.negative_control && t != "rp2" && t != "m5") apply_negative_control(t, pf);
  if (t == "lorenz") return verify_lorenz(cfg, pf);
  if (t == "plug") return verify_plug(cfg, pf);
  if (t == "rp2") return verify_rp2(cfg, pf);
  if (t == "h") return verify_h(cfg, pf);
  if (t == "s3") return verify_s3(cfg, pf);
  if (t == "msh") return verify_msh(cfg, pf);
  if (t == "m5") return verify_m5(cfg, pf);
  throw Error(ErrorKind::ConfigError, "unknown verify target '" + t + "'");
}

// ---------- export ----------

struct FieldChoice {
  std::shared_ptr<VectorFieldSpec> field;
  ChartPoint start;
};

// Fields with a bundled starting point for trajectory and spectrum exports.
inline FieldChoice export_field(const std::string& name, const ParamFile& pf) {
  if (name.empty() || name == "lorenz") {
    return {build_lorenz(LorenzParams::from(pf)), cube_point("a_", 0.3, 0.5, 0.1)};
  }
  if (name == "s3") {
    return {build_S3_field(LorenzParams::from(pf)), cube_point("a_", 0.3, 0.5, 0.1)};
  }
  if (name == "rp2") {
    RP2Params P = RP2Params::from(pf);
    return {build_rp2_field(P), rp2_T_point(P, 0.3)};
  }
  if (name == "plug") {
    Vec x(2);
    x << 1.0, -1.0;
    return {build_plug_quotient(PlugParams::from(pf)), {"quot", x}};
  }
  throw Error(ErrorKind::ConfigError, "no export field '" + name + "' (lorenz, s3, rp2, plug)");
}

inline void csv_only_or_json(const RunConfig& cfg) {
  if (cfg.format != "json" && cfg.format != "csv")
    throw Error(ErrorKind::ConfigError, "format must be json or csv");
}

inline void export_trajectory(const RunConfig& cfg, std::ostream& os) {
  FieldChoice fc = export_field(cfg.field, cfg.params());
  FlowOptions o;
  o.dt = cfg.or_default(cfg.dt, 1e-2);
  o.record = true;
  FlowResult r = Integrator(*fc.field).run(fc.start, cfg.or_default(cfg.t_max, 10.0), o);
  if (cfg.format == "csv") {
    write_trajectory_csv(os, r.traj);
    return;
  }
  json pts = json::array();
  for (size_t i = 0; i < r.traj.pts.size(); ++i) {
    const Vec& x = r.traj.pts[i].x;
    pts.push_back({{"t", r.traj.t[i]}, {"chart", r.traj.pts[i].chart},
                   {"x", std::vector<double>(x.data(), x.data() + x.size())}});
  }
  json ev = json::array();
  for (auto& e : r.traj.events) ev.push_back({{"t", e.t}, {"kind", e.kind}, {"from", e.pre.chart}, {"to", e.post.chart}});
  os << json{{"schema", kSchemaVersion}, {"field", fc.field->name()}, {"points", pts}, {"events", ev}}.dump(1)
     << "\n";
}

inline void export_crossing_map(const RunConfig& cfg, std::ostream& os) {
  if (!cfg.field.empty() && cfg.field != "plug")
    throw Error(ErrorKind::ConfigError, "the crossing map exists only for --field plug");
  PlugCrossing pc = build_plug_crossing(PlugParams::from(cfg.params()));
  auto rows = crossing_map_grid(pc, cfg.or_default(cfg.grid, 64));
  if (cfg.format == "csv") {
    os << "theta,r,theta_prime,r_prime,tau\n";
    for (auto& r : rows) os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.theta, r.r, r.theta1, r.r1, r.tau);
    return;
  }
  json arr = json::array();
  for (auto& r : rows) arr.push_back({r.theta, r.r, r.theta1, r.r1, r.tau});
  os << json{{"schema", kSchemaVersion}, {"c0", pc.c0}, {"columns", {"theta", "r", "theta_prime", "r_prime", "tau"}},
             {"rows", arr}}.dump(1)
     << "\n";
}

inline void export_spectrum(const RunConfig& cfg, std::ostream& os) {
  FieldChoice fc = export_field(cfg.field, cfg.params());
  Spectrum sp = lyapunov_spectrum(*fc.field, fc.start, cfg.or_default(cfg.t_max, 50.0), kRenormInterval,
                                  cfg.or_default(cfg.dt, kDefaultDt));
  const size_t n = sp.exponents.size();
  if (cfg.format == "csv") {
    os << "t";
    for (size_t i = 0; i < n; ++i) os << ",l" << i;
    os << "\n";
    for (size_t k = 0; k < sp.times.size(); ++k) {
      os << fmt::format("{:.17g}", sp.times[k]);
      for (double v : sp.running[k]) os << fmt::format(",{:.17g}", v);
      os << "\n";
    }
    return;
  }
  os << json{{"schema", kSchemaVersion}, {"field", fc.field->name()}, {"exponents", sp.exponents},
             {"spread", sp.spread},      {"times", sp.times},         {"running", sp.running}}.dump(1)
     << "\n";
}

// JSON holds the full box graph; CSV holds one row per chain class.
inline void export_graph(const RunConfig& cfg, std::ostream& os) {
  if (!cfg.field.empty() && cfg.field != "plug" && cfg.field != "plug_s3")
    throw Error(ErrorKind::ConfigError, "graph export is defined for --field plug or plug_s3");
  PlugClasses pcl = plug_chain_classes(PlugParams::from(cfg.params()), cfg.field == "plug_s3",
                                       cfg.or_default(cfg.delta, 0.02), cfg.or_default(cfg.epsilon, 0.01));
  if (cfg.format == "csv") {
    write_classes_csv(os, pcl.graph, pcl.classes);
    return;
  }
  json j = graph_to_json(pcl.graph);
  j["schema"] = kSchemaVersion;
  os << j.dump() << "\n";
}

inline void cmd_export(const RunConfig& cfg, std::ostream& os) {
  csv_only_or_json(cfg);
  const std::string& t = cfg.target;
  if (t == "trajectory") return export_trajectory(cfg, os);
  if (t == "crossing-map") return export_crossing_map(cfg, os);
  if (t == "spectrum") return export_spectrum(cfg, os);
  if (t == "graph") return export_graph(cfg, os);
  throw Error(ErrorKind::ConfigError, "unknown export '" + t + "'");
}

// Exit code for an error kind: configuration problems are usage errors,
// everything else is a verified failure.
inline int exit_code_for(ErrorKind k) { return k == ErrorKind::ConfigError ? 2 : 1; }

}  // namespace artifact
