// Acceptance run: one line per criterion, nonzero exit if any fails.
#include <fmt/format.h>

#include <chrono>
#include <functional>
#include <random>
#include <sstream>

#include "artifact/commands.hpp"
#include "laws.hpp"
#include "support.hpp"

using namespace artifact;
using testing_support::bundled_fields;
using testing_support::random_point;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = dt <= budget_s;
  bool ok = o.pass && in_time;
  if (!ok) ++failures;
  fmt::print("[{}] {}: {} ({:.1f} s of {:.0f} s){}\n", ok ? "PASS" : "FAIL", name, o.detail, dt, budget_s,
             in_time ? "" : " over budget");
  std::fflush(stdout);
}

// ---------- integrator ----------

double linear_chart_error(const VectorFieldSpec& f, const ChartPoint& x0, const std::vector<double>& rates) {
  FlowOptions o;
  o.record = true;
  FlowResult r = Integrator(f).run(x0, 5.0, o);
  if (r.exited) return 1e300;
  double worst = 0.0;
  for (size_t k = 0; k < r.traj.t.size(); ++k) {
    if (r.traj.pts[k].chart != x0.chart) return 1e300;
    for (size_t i = 0; i < rates.size(); ++i) {
      double exact = x0.x(i) * std::exp(rates[i] * r.traj.t[k]);
      if (exact != 0.0) worst = std::max(worst, std::abs(r.traj.pts[k].x(i) - exact) / std::abs(exact));
    }
  }
  return worst;
}

double fd_flow_error(const VectorFieldSpec& f, int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Integrator I(f);
  FlowOptions o;
  o.with_jacobian = true;
  FlowOptions plain;
  double worst = 0.0;
  int got = 0;
  while (got < n) {
    ChartPoint x = random_point(f, rng, 0.15);
    FlowResult r = I.run(x, 0.5, o);
    if (r.exited) continue;
    const Eigen::Index d = x.x.size();
    Mat fd(d, d);
    bool usable = true;
    for (Eigen::Index j = 0; j < d && usable; ++j) {
      ChartPoint p = x, m = x;
      const double h = 1e-6;
      p.x(j) += h;
      m.x(j) -= h;
      FlowResult rp = I.run(p, 0.5, plain), rm = I.run(m, 0.5, plain);
      if (rp.exited || rm.exited) {
        usable = false;
        break;
      }
      try {
        Vec a = f.atlas().transition(rp.end, r.end.chart).x, b = f.atlas().transition(rm.end, r.end.chart).x;
        fd.col(j) = (a - b) / (2 * h);
      } catch (const Error&) {
        usable = false;
      }
    }
    if (!usable) continue;
    worst = std::max(worst, (r.M - fd).norm() / std::max(1.0, r.M.norm()));
    ++got;
  }
  return worst;
}

Outcome integrator() {
  LorenzParams L;
  RP2Params R;
  auto Fa = build_lorenz(L);
  auto Fr = build_lorenz_reversed(L);
  auto Y = build_rp2_field(R);
  Vec s(2), w(2);
  s << 1.5, 2e-18;
  w << 0.3, -0.2;
  double lin = std::max({linear_chart_error(*Fa, cube_point("a_", 1e-4, 0.5, 0.5), {L.l1, L.l3, L.l2}),
                         linear_chart_error(*Fr, cube_point("r_", 0.5, 1e-3, 1e-10), {-L.l1, -L.l3, -L.l2}),
                         linear_chart_error(*Y, {"strip", s}, {-R.lambda_uuu, R.lambda_uuu}),
                         linear_chart_error(*Y, {"u_omega", w}, {-R.nu, -R.nu}),
                         linear_chart_error(*Y, {"u_alpha", w * 1e-17}, {R.nu, R.nu})});
  double fd = 0.0;
  for (auto& b : bundled_fields()) fd = std::max(fd, fd_flow_error(*b.f, 100, 7));
  return {lin <= 1e-8 && fd <= 1e-4,
          fmt::format("linear charts max rel err {:.2e} (<= 1e-8), Dphi vs FD max rel err {:.2e} (<= 1e-4) on "
                      "100 points x {} fields",
                      lin, fd, bundled_fields().size())};
}

// ---------- cocycles ----------

Outcome cocycle_laws() {
  auto F = build_lorenz(LorenzParams{});
  auto e = testing_support::cocycle_laws(*F, 500, 2024);
  return {e.worst() <= 1e-6,
          fmt::format("500 pairs: semigroup {:.1e}, Dphi {:.1e}, psi_N {:.1e}, h {:.1e}, Psi {:.1e} (<= 1e-6)",
                      e.semigroup, e.derivative, e.psi_n, e.h_relation, e.psi)};
}

Outcome sll() {
  bool ok = strong_lorenz_like({1.7, -1.0, -4.5});
  // (lambda1, lambda3, lambda2) violating one inequality each
  std::vector<std::vector<double>> weak_not_contracting{{1.7, 0.3, -4.5}, {1.7, 1.0, -4.5}, {1.7, 2.0, -4.5}};
  std::vector<std::vector<double>> weak_beats_unstable{{1.7, -1.7, -4.5}, {1.7, -1.8, -4.5}, {1.7, -3.0, -4.5}};
  std::vector<std::vector<double>> strong_too_weak{{1.7, -1.0, -1.5}, {1.7, -1.0, -1.7}, {1.7, -1.0, -1.2}};
  int rejected = 0, designed = 0;
  for (auto* set : {&weak_not_contracting, &weak_beats_unstable, &strong_too_weak})
    for (auto l : *set) {
      designed += 2;
      rejected += !strong_lorenz_like(l);
      for (double& v : l) v = -v;  // the time-reversed inequalities
      rejected += !strong_lorenz_like(l);
    }
  return {ok && rejected == designed,
          fmt::format("defaults {}, {}/{} designed violations rejected", ok ? "pass" : "fail", rejected, designed)};
}

// ---------- plug ----------

Outcome plug() {
  PlugParams P;
  PlugClasses a = plug_chain_classes(P, false, 0.02, 0.01);
  PlugClasses b = plug_chain_classes(P, true, 0.02, 0.01);
  PlugCrossing pc = build_plug_crossing(P);
  CrossingTransversality tr = crossing_transversality(pc, 32);
  AnnulusCrossing ac = annulus_crossing(pc, 1000);
  return {a.pass && b.pass && tr.pass && ac.pass,
          fmt::format("classes {} (6), completion {} (8); min |dP_theta/dr| {:.4f} at 32x32, {:.4f} at 64x64 "
                      "(change {:.1f}%); annulus {}/1000 crossed, disc {}/1000 denied",
                      a.classes.size(), b.classes.size(), tr.min_slope, tr.refined_slope,
                      100 * tr.refinement_change, ac.annulus_crossed, ac.disc_denied)};
}

Outcome rp2() {
  RP2Params P;
  auto Y = build_rp2_field(P);
  RP2Report r = rp2_crossings(*Y, P, 100, 100.0);
  return {r.pass, fmt::format("{} points, {} misclassified at T_max = 100", r.orbits.size(), r.mismatches)};
}

Outcome escaping() {
  auto X = build_S3_field(LorenzParams{});
  auto ea = escaping_check(*X, X->singularity("sigma_a"), true, 1, kEscapeRadius, 200.0, 200);
  auto er = escaping_check(*X, X->singularity("sigma_r"), false, 1, kEscapeRadius, 200.0, 200);
  return {ea.pass && er.pass,
          fmt::format("sigma_a strong-stable {}/200 (max {:.2f}), sigma_r strong-unstable {}/200 (max {:.2f})",
                      ea.escaped, ea.max_time, er.escaped, er.max_time)};
}

Outcome psi_rates() {
  auto F = build_lorenz(LorenzParams{});
  LineRates r = singular_line_rates(*F, F->singularity("sigma_a"), 2, 1.0);
  double err = std::max(std::abs(r.measured[0] - 0.7), std::abs(r.measured[1] + 2.8));
  // sign pattern over a parameter grid, restricted to sets passing the build checks
  int tested = 0, good = 0;
  for (int i = 1; i < 8; ++i)
    for (int j = 1; j < 8; ++j)
      for (int k = 1; k < 4; ++k) {
        LorenzParams L;
        L.l1 = std::sqrt(2.0) + (2.0 - std::sqrt(2.0)) * i / 8.0;
        L.l3 = -L.l1 * j / 8.0;
        L.l2 = -4.0 - k / 4.0;
        if (!L.checks().pass()) continue;
        auto G = build_lorenz(L);
        LineRates q = singular_line_rates(*G, G->singularity("sigma_a"), 2, 1.0);
        double e2 = std::max(std::abs(q.measured[0] - (L.l1 + L.l3)), std::abs(q.measured[1] - (L.l1 + L.l2)));
        ++tested;
        good += q.sign_pattern && e2 <= 1e-6;
      }
  return {err <= 1e-6 && tested > 0 && good == tested,
          fmt::format("rates ({:.9f}, {:.9f}) vs (0.7, -2.8), err {:.1e}; sign pattern on {}/{} valid sets",
                      r.measured[0], r.measured[1], err, good, tested)};
}

// ---------- certificates ----------

Outcome s3_msh() {
  RunConfig c;
  c.command = "verify";
  c.target = "msh";
  c.field = "s3";
  Verdict v = cmd_verify(c);
  const json& cert = v.results["certificate"];
  int po = v.results["periodic_orbits"];
  c.negative_control = true;
  Verdict n = cmd_verify(c);
  double neg = std::min(n.margins["contraction"].get<double>(), n.margins["expansion"].get<double>());
  bool ok = v.pass && po >= 10 && cert["index_uniform"] == true && cert["s_index"] == 1 && !n.pass && neg < 0;
  return {ok, fmt::format("{} periodic lifts, {} elements, s-index {} uniform {}; margins dom {:.3f} con {:.3f} "
                          "exp {:.3f}; lambda3 = -1.8 control margin {:.3f}",
                          po, v.results["elements"].get<int>(), cert["s_index"].get<int>(),
                          cert["index_uniform"].get<bool>(), v.margins["domination"].get<double>(),
                          v.margins["contraction"].get<double>(), v.margins["expansion"].get<double>(), neg)};
}

Outcome m5() {
  RunConfig c;
  c.command = "verify";
  c.target = "m5";
  c.samples = 1000;
  Verdict v = cmd_verify(c);
  const json& cl = v.results["classification"];
  return {v.pass, fmt::format("escaping {:.3f} of 1000 (>= 0.99), (p,0) stays {}, stayers within 2 spacings {}, "
                              "cone angle {:.4f} (>= 1e-3)",
                              cl["escaping_fraction"].get<double>(), v.results["p_orbit_stays"].get<bool>(),
                              cl["stayers_concentrate"].get<bool>(),
                              v.results["cone"]["min_angle"].get<double>())};
}

// ---------- determinism ----------

std::string run_command(RunConfig c) {
  if (c.command == "export") {
    std::ostringstream os;
    cmd_export(c, os);
    return os.str();
  }
  Verdict v = c.command == "verify" ? cmd_verify(c) : cmd_field_build(c);
  return make_report(c, v).dump(2);
}

Outcome determinism() {
  std::vector<RunConfig> cmds;
  auto add = [&](std::string cmd, std::string target, std::function<void(RunConfig&)> tweak = {}) {
    RunConfig c;
    c.command = cmd;
    c.target = target;
    if (tweak) tweak(c);
    cmds.push_back(c);
  };
  for (const char* f : {"lorenz", "plug", "rp2", "h", "s3", "m5"}) add("field build", f);
  add("verify", "lorenz");
  add("verify", "rp2");
  add("verify", "h");
  add("verify", "s3", [](RunConfig& c) { c.samples = 50; });
  add("verify", "plug", [](RunConfig& c) {
    c.delta = 0.05;
    c.grid = 8;
    c.samples = 50;
  });
  add("verify", "msh", [](RunConfig& c) { c.field = "s3"; });
  add("verify", "m5", [](RunConfig& c) { c.samples = 200; });
  add("export", "trajectory", [](RunConfig& c) { c.format = "csv"; });
  add("export", "crossing-map", [](RunConfig& c) { c.grid = 16; });
  add("export", "spectrum", [](RunConfig& c) { c.format = "csv"; });
  add("export", "graph", [](RunConfig& c) { c.delta = 0.05; });
  int identical = 0;
  std::string first_diff;
  for (auto& c : cmds) {
    std::vector<std::string> outs;
    for (int t : {1, 4, 8}) {
      thread_count() = t;
      outs.push_back(run_command(c));
    }
    if (outs[0] == outs[1] && outs[0] == outs[2]) ++identical;
    else if (first_diff.empty()) first_diff = c.command + " " + c.target;
  }
  thread_count() = 0;
  return {identical == int(cmds.size()),
          fmt::format("{}/{} commands byte-identical at 1, 4, 8 threads{}", identical, cmds.size(),
                      first_diff.empty() ? "" : "; first difference: " + first_diff)};
}

}  // namespace

int main() {
  criterion("integrator correctness", 60, integrator);
  criterion("cocycle laws", 120, cocycle_laws);
  criterion("strong Lorenz-like predicate", 1, sll);
  criterion("plug structure", 600, plug);
  criterion("RP2 crossings", 120, rp2);
  criterion("escaping strong discs", 300, escaping);
  criterion("singular Psi rates", 5, psi_rates);
  criterion("S3 msh certificate", 900, s3_msh);
  criterion("M5 experiments", 1800, m5);
  criterion("determinism", 3600, determinism);
  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
