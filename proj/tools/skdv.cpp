// skdv: command-line driver for runs, solitary-wave data, budgets and figures.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skdv/skdv.hpp"

namespace {

namespace fs = std::filesystem;
using namespace skdv;

int cmd_run(const std::string& config_path, const std::string& out, bool resume,
            std::optional<std::size_t> stop_after, bool quiet) {
  RunConfig cfg;
  if (!config_path.empty()) {
    cfg = read_config(config_path);
  } else if (resume && !out.empty()) {
    const auto c = read_checkpoint(fs::path(out) / "checkpoint.skcp");
    cfg = parse_config(c.config_text, "checkpoint config");
  } else {
    throw ConfigError("run: --config is required (or --resume with --out)");
  }
  const fs::path dir = out.empty() ? fs::path(cfg.out_dir) : fs::path(out);
  RunControl control;
  control.resume = resume;
  control.stop_after_samples = stop_after;
  if (!quiet) control.log = [](const std::string& s) { std::cerr << "skdv: " << s << "\n"; };
  const auto summary = run(cfg, dir, control);
  if (!quiet) {
    for (const auto& f : summary.files) std::cout << f.string() << "\n";
  }
  return 0;
}

struct SolitonArgs {
  std::string alpha = "-1/12";
  std::string cstar = "1";
  std::string x0 = "0";
  std::size_t n = 4096;
  double length = 400.0;
  double center = 0.0;
  bool kdv = false;
  bool allow_truncation = false;
  std::string out;
};

int cmd_soliton(const SolitonArgs& a) {
  SolitaryWaveParams p;
  p.c_star = evaluate_constant(a.cstar);
  p.alpha = evaluate_constant(a.alpha);
  p.x0 = evaluate_constant(a.x0);
  p.validate();
  auto grid = make_grid(a.n, a.length, a.center);
  FieldState s = FieldState::zeros(grid, 0.0);
  if (a.kdv) {
    const double k = std::sqrt(p.c_star);
    for (std::size_t j = 0; j < grid->size(); ++j) {
      const double h = sech(k * (grid->x(j) - p.x0));
      s.v[j] = 12.0 * p.c_star * h * h;
    }
  } else {
    s = solitary_initial_data(p, grid, !a.allow_truncation);
  }
  const ModelParams m = p.companion_model();
  write_snapshot(a.out, s, m);
  const auto q = conserved_triple(s, m);
  std::printf("wrote %s\n", a.out.c_str());
  std::printf("model     alpha=%.17g beta=%.17g gamma=%.17g\n", m.alpha, m.beta, m.gamma);
  if (a.kdv) {
    std::printf("speed     %.17g (pure KdV)\n", 4.0 * p.c_star);
  } else {
    std::printf("speed     %.17g\ncarrier   %.17g\nomega     %.17g\n", p.speed(),
                p.carrier_wavenumber(), p.omega());
  }
  std::printf("I1 %.17g\nI2 %.17g\nI3 %.17g\n", q.i1, q.i2, q.i3);
  return 0;
}

int cmd_budget(const std::vector<std::string>& snaps, const std::string& config_path) {
  if (snaps.size() != 3) throw ConfigError("budget: exactly three snapshots are required");
  std::vector<SnapshotData> d;
  for (const auto& p : snaps) d.push_back(read_snapshot(p));
  for (int k = 1; k < 3; ++k) {
    if (!d[k].state.grid->same_layout(*d[0].state.grid)) {
      throw ConfigError("budget: snapshots " + snaps[0] + " and " + snaps[k] + " use different grids");
    }
    d[k].state.grid = d[0].state.grid;
  }
  const ModelParams params = d[1].params;
  VirialConfig vc;
  bool dealias = true;
  if (!config_path.empty()) {
    const RunConfig cfg = read_config(config_path);
    vc = cfg.virial;
    dealias = cfg.integrator.dealias;
  }
  vc = vc.resolved(params);
  const Window w{d[0].state, d[1].state, d[2].state};
  const BudgetJ bj = budget_J(w, params, vc, dealias);
  const BudgetI bi = budget_I(w, params, vc);

  std::cout << "term,value\n";
  auto line = [](const std::string& k, double v) { std::cout << k << "," << format_double(v) << "\n"; };
  line("t", d[1].state.t);
  line("j", bj.j);
  line("dj_dt_fd", bj.dJdt_fd);
  for (int k = 0; k < 8; ++k) line("a1_" + std::to_string(k + 1), bj.a1[k]);
  line("a2", bj.a2);
  line("a3", bj.a3);
  line("a4", bj.a4);
  line("a1_direct", bj.a1_direct);
  line("residual_j", bj.residual);
  line("i", bi.i);
  line("di_dt_fd", bi.dIdt_fd);
  for (int k = 0; k < 13; ++k) line("b" + std::to_string(k + 1), bi.b[k]);
  line("residual_i", bi.residual);
  line("b1_plus_b10", bi.b[0] + bi.b[9]);
  return 0;
}

FigureToggles parse_toggles(const std::vector<std::string>& only) {
  if (only.empty()) return {};
  FigureToggles t{false, false, false, false};
  for (const auto& s : only) {
    if (s == "conserved") t.conserved = true;
    else if (s == "budget_j") t.budget_j = true;
    else if (s == "budget_i") t.budget_i = true;
    else if (s == "masses") t.masses = true;
    else throw ConfigError("figures: unknown figure '" + s + "' (conserved|budget_j|budget_i|masses)");
  }
  return t;
}

int cmd_sweep(const std::vector<std::string>& configs, const std::string& root) {
  std::vector<std::pair<RunConfig, fs::path>> jobs;
  for (const auto& p : configs) {
    RunConfig cfg = read_config(p);
    const fs::path dir = root.empty() ? fs::path(cfg.out_dir) : fs::path(root) / fs::path(p).stem();
    jobs.emplace_back(std::move(cfg), dir);
  }
  const auto results = sweep(jobs, sweep_threads(jobs.size()));
  int status = 0;
  for (const auto& r : results) {
    if (r.ok) {
      std::cout << "ok     " << r.out_dir.string() << "\n";
    } else {
      std::cout << "FAILED " << r.out_dir.string() << ": " << r.error << "\n";
      status = 1;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudospectral simulator and diagnostics for the Schrodinger-KdV system"};
  app.require_subcommand(1);

  std::string config, out;
  bool resume = false, quiet = false;
  std::optional<std::size_t> stop_after;
  auto* run_cmd = app.add_subcommand("run", "evolve a configured run");
  run_cmd->add_option("--config", config, "config file (section.key = value)");
  run_cmd->add_option("--out", out, "output directory (overrides output.dir)");
  run_cmd->add_flag("--resume", resume, "continue from <out>/checkpoint.skcp");
  run_cmd->add_option("--stop-after", stop_after, "stop after this many samples (for testing resume)");
  run_cmd->add_flag("--quiet", quiet, "no progress output");

  SolitonArgs sol;
  auto* sol_cmd = app.add_subcommand("soliton", "write solitary-wave initial data as a snapshot");
  sol_cmd->add_option("--alpha", sol.alpha, "coupling alpha in (-1/6, 0); arithmetic like -1/12 is accepted")->capture_default_str();
  sol_cmd->add_option("--cstar", sol.cstar, "profile parameter c*")->capture_default_str();
  sol_cmd->add_option("--x0", sol.x0, "initial centre")->capture_default_str();
  sol_cmd->add_option("--n", sol.n, "grid points")->capture_default_str();
  sol_cmd->add_option("--length", sol.length, "box length")->capture_default_str();
  sol_cmd->add_option("--center", sol.center, "box centre")->capture_default_str();
  sol_cmd->add_flag("--kdv", sol.kdv, "pure KdV wave (u = 0)");
  sol_cmd->add_flag("--allow-truncation", sol.allow_truncation, "accept profiles not negligible at the edge");
  sol_cmd->add_option("--out", sol.out, "snapshot path")->required();

  std::vector<std::string> snaps;
  std::string budget_config;
  auto* bud_cmd = app.add_subcommand("budget", "recompute dJ/dt and dI/dt budgets from three snapshots");
  bud_cmd->add_option("snapshots", snaps, "three equally spaced snapshots")->required()->expected(3);
  bud_cmd->add_option("--config", budget_config, "config supplying the virial block");

  std::string csv, fig_out;
  std::vector<std::string> only;
  auto* fig_cmd = app.add_subcommand("figures", "render SVG figures from a series CSV");
  fig_cmd->add_option("--csv", csv, "series.csv of a run")->required();
  fig_cmd->add_option("--out", fig_out, "output directory")->required();
  fig_cmd->add_option("--only", only, "subset of conserved,budget_j,budget_i,masses")->delimiter(',');

  std::vector<std::string> sweep_configs;
  std::string sweep_root;
  auto* sweep_cmd = app.add_subcommand("sweep", "independent runs in parallel (SKDV_THREADS caps workers)");
  sweep_cmd->add_option("configs", sweep_configs, "config files")->required();
  sweep_cmd->add_option("--out", sweep_root, "root directory; each run writes <root>/<config stem>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;  // usage errors share the generic error status
  }

  try {
    if (*run_cmd) return cmd_run(config, out, resume, stop_after, quiet);
    if (*sol_cmd) return cmd_soliton(sol);
    if (*bud_cmd) return cmd_budget(snaps, budget_config);
    if (*fig_cmd) {
      for (const auto& f : emit_figures(csv, parse_toggles(only), fig_out)) std::cout << f.string() << "\n";
      return 0;
    }
    if (*sweep_cmd) return cmd_sweep(sweep_configs, sweep_root);
  } catch (const IntegrationError& e) {
    std::cerr << "skdv: integration aborted at t=" << e.time() << " (step " << e.step() << "): " << e.what()
              << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "skdv: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
