#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "artifact/commands.hpp"
#include "artifact/parallel.hpp"

using namespace artifact;

namespace {

// Writes to --out if given, otherwise stdout.
void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot write " + cfg.out);
  f << text;
}

std::string render(const RunConfig& cfg, const Verdict& v) {
  json rep = make_report(cfg, v);
  if (cfg.format == "json") return rep.dump(2) + "\n";
  // csv: flattened margins, one row each
  std::ostringstream os;
  os << "margin,value\n";
  for (auto& [k, val] : v.margins.items()) os << '"' << k << "\"," << val.dump() << "\n";
  os << "\"pass\"," << (v.pass ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Star-flow lab: field builds, verification suites and data exports"};
  app.require_subcommand(1);
  RunConfig cfg;
  int threads = 0;
  double lambda1 = 0, lambda2 = 0, lambda3 = 0;
  std::vector<std::string> sets;

  auto common = [&](CLI::App* s) {
    s->add_option("--field", cfg.field, "field for msh and exports");
    s->add_option("--params", cfg.params_path, "key = value parameter file")->check(CLI::ExistingFile);
    s->add_option("--t-max", cfg.t_max)->check(CLI::PositiveNumber);
    s->add_option("--dt", cfg.dt)->check(CLI::PositiveNumber);
    s->add_option("--delta", cfg.delta)->check(CLI::PositiveNumber);
    s->add_option("--epsilon", cfg.epsilon)->check(CLI::PositiveNumber);
    s->add_option("--grid", cfg.grid)->check(CLI::PositiveNumber);
    s->add_option("--horizon", cfg.horizon)->check(CLI::PositiveNumber);
    s->add_option("--samples", cfg.samples)->check(CLI::PositiveNumber);
    s->add_option("--seed", cfg.seed);
    s->add_option("--out", cfg.out);
    s->add_option("--format", cfg.format)->check(CLI::IsMember({"json", "csv"}));
    s->add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    s->add_option("--lambda1", lambda1);
    s->add_option("--lambda2", lambda2);
    s->add_option("--lambda3", lambda3);
    s->add_option("--set", sets, "parameter override key=value");
    s->add_flag("--negative-control", cfg.negative_control, "apply the designed violation for this target");
  };

  auto* field = app.add_subcommand("field", "field construction");
  field->require_subcommand(1);
  auto* build = field->add_subcommand("build", "build a field and report its invariants");
  build->add_option("name", cfg.target, "lorenz, plug, rp2, h, s3, m5")->required();
  common(build);

  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("target", cfg.target)
      ->required()
      ->check(CLI::IsMember({"lorenz", "plug", "rp2", "h", "s3", "m5", "msh"}));
  common(verify);

  auto* exp = app.add_subcommand("export", "write data files");
  exp->add_option("kind", cfg.target)
      ->required()
      ->check(CLI::IsMember({"trajectory", "crossing-map", "spectrum", "graph"}));
  common(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (lambda1 != 0) cfg.overrides["lambda1"] = lambda1;
    if (lambda2 != 0) cfg.overrides["lambda2"] = lambda2;
    if (lambda3 != 0) cfg.overrides["lambda3"] = lambda3;
    for (auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, "--set expects key=value, got " + kv);
      try {
        cfg.overrides[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, "bad number in --set " + kv);
      }
    }
    thread_count() = threads;
    const auto t0 = std::chrono::steady_clock::now();
    // wall time goes to stderr so that reports stay byte-identical
    auto runtime = [&] {
      std::cerr << fmt::format("runtime {:.2f} s\n",
                               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };

    if (*exp) {
      cfg.command = "export";
      std::ostringstream os;
      cmd_export(cfg, os);
      emit(cfg, os.str());
      runtime();
      return 0;
    }
    Verdict v;
    if (*verify) {
      cfg.command = "verify";
      v = cmd_verify(cfg);
    } else {
      cfg.command = "field build";
      v = cmd_field_build(cfg);
    }
    emit(cfg, render(cfg, v));
    runtime();
    return v.pass ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
