#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pmf/bubble.hpp"
#include "pmf/diagnostics.hpp"
#include "pmf/error.hpp"
#include "pmf/functional.hpp"
#include "pmf/io.hpp"
#include "pmf/mountain_pass.hpp"
#include "pmf/solver.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_non_convergence = 3;

struct RunConfig {
  int m = 1;
  int n = 64;
  double lambda = 14.0;
  std::vector<double> lambda_grid;
  std::vector<double> sigma_list{1e2, std::pow(10.0, 2.5), 1e3, std::pow(10.0, 3.5), 1e4};
  double alpha = 0.4;
  double tol = 1e-10;
  int max_sweeps = 400;
  int path_segments = 16;
  std::uint64_t seed = 1;
  int seeds = 20;
  unsigned threads = 0;
  double lambda_end = 19.0;
  double dlambda = 0.25;
  double dlambda_min = 1e-4;
  double dlambda_max = 1.0;
  double blowup_cap = 12.0;
  std::string field;
  double plateau_fraction = 0.05;
  std::string out;
};

std::string num(double v) { return pmf::format_double(v); }

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

/// The effective configuration in the input file format, re-loadable with
/// --config; unset optional keys are commented out.
std::string echo_config(const RunConfig& c, const std::string& command) {
  std::ostringstream o;
  o << "# command: " << command << '\n'
    << "m = " << c.m << '\n'
    << "n = " << c.n << '\n'
    << "lambda = " << num(c.lambda) << '\n'
    << (c.lambda_grid.empty() ? "# " : "") << "lambda_grid = " << list(c.lambda_grid) << '\n'
    << "sigma_list = " << list(c.sigma_list) << '\n'
    << "alpha = " << num(c.alpha) << '\n'
    << "tol = " << num(c.tol) << '\n'
    << "max_sweeps = " << c.max_sweeps << '\n'
    << "path_segments = " << c.path_segments << '\n'
    << "seed = " << c.seed << '\n'
    << "seeds = " << c.seeds << '\n'
    << "threads = " << c.threads << '\n'
    << "lambda_end = " << num(c.lambda_end) << '\n'
    << "dlambda = " << num(c.dlambda) << '\n'
    << "dlambda_min = " << num(c.dlambda_min) << '\n'
    << "dlambda_max = " << num(c.dlambda_max) << '\n'
    << "blowup_cap = " << num(c.blowup_cap) << '\n'
    << (c.field.empty() ? "# " : "") << "field = " << c.field << '\n'
    << "plateau_fraction = " << num(c.plateau_fraction) << '\n'
    << (c.out.empty() ? "# " : "") << "out = " << c.out << '\n';
  return o.str();
}

/// Flag or config value first, then PMF_OUTPUT_DIR, then ./pmf-output.
fs::path output_dir(const RunConfig& cfg) {
  if (!cfg.out.empty()) return cfg.out;
  if (const char* env = std::getenv("PMF_OUTPUT_DIR"); env && *env) return env;
  return "pmf-output";
}

class Outputs {
 public:
  Outputs(const RunConfig& cfg, const std::string& command) : dir_(output_dir(cfg)) {
    fs::create_directories(dir_);
    std::ofstream echo(dir_ / "config.echo", std::ios::binary);
    if (!echo) throw pmf::Error(pmf::Errc::io_error, "cannot write config.echo in " + dir_.string());
    echo << echo_config(cfg, command);
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void summary(const std::vector<std::string>& header, const std::vector<std::string>& row) const {
    pmf::CsvWriter csv(header);
    csv.row(row);
    csv.save(path("summary.csv"));
  }

 private:
  fs::path dir_;
};

pmf::TorusSpec spec_of(const RunConfig& cfg) { return pmf::make_spec(cfg.m, cfg.n); }

int cmd_constants(const RunConfig& cfg, const Outputs& out) {
  const pmf::Constants c = pmf::constants(cfg.m);
  const std::vector<std::string> header{"m", "Lambda1", "lambda1", "threshold_low", "threshold_high", "poincare_Cm"};
  const std::vector<std::string> row{std::to_string(c.m), num(c.Lambda1), num(c.lambda1), num(c.threshold_low),
                                     num(c.threshold_high), num(c.poincare_Cm)};
  out.summary(header, row);
  for (std::size_t i = 0; i < header.size(); ++i) std::cout << header[i] << " = " << row[i] << '\n';
  return exit_ok;
}

int cmd_bubble(const RunConfig& cfg, const Outputs& out) {
  const pmf::BubbleAsymptotics a =
      pmf::bubble_asymptotics(cfg.sigma_list, cfg.lambda, cfg.m, pmf::fixed_alpha(cfg.alpha));
  pmf::CsvWriter table({"sigma", "alpha", "norm_sq", "mean", "log_mass", "energy"});
  for (const auto& s : a.samples)
    table.row({num(s.sigma), num(s.alpha), num(s.norm_sq), num(s.mean), num(s.log_mass), num(s.energy)});
  table.save(out.path("bubble.csv"));
  out.summary({"m", "lambda", "alpha", "norm_slope", "norm_target", "norm_rel_error", "energy_slope", "energy_target",
               "energy_rel_error"},
              {std::to_string(cfg.m), num(cfg.lambda), num(cfg.alpha), num(a.norm_fit.slope), num(a.norm_target),
               num(std::abs(a.norm_fit.slope - a.norm_target) / std::abs(a.norm_target)), num(a.energy_fit.slope),
               num(a.energy_target),
               num(std::abs(a.energy_fit.slope - a.energy_target) / std::max(1e-300, std::abs(a.energy_target)))});
  std::cout << "norm slope " << a.norm_fit.slope << " (2 Lambda_1 = " << a.norm_target << ")\n"
            << "energy slope " << a.energy_fit.slope << " (Lambda_1 - lambda = " << a.energy_target << ")\n";
  return exit_ok;
}

pmf::MountainPassOptions mp_options(const RunConfig& cfg) {
  pmf::MountainPassOptions opt;
  opt.tol = cfg.tol;
  opt.max_sweeps = cfg.max_sweeps;
  opt.P = cfg.path_segments;
  return opt;
}

int cmd_mp(const RunConfig& cfg, const Outputs& out) {
  const pmf::TorusSpec spec = spec_of(cfg);
  if (!cfg.lambda_grid.empty()) {
    const pmf::LevelSweep sweep = pmf::level_sweep(cfg.lambda_grid, spec, mp_options(cfg));
    pmf::CsvWriter table({"lambda", "c_estimate", "grad_norm", "sweeps", "converged", "warm_start"});
    bool all = true;
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
      const auto& r = sweep.rows[i];
      table.row({num(r.lambda), num(r.c_estimate), num(r.grad_norm), std::to_string(r.sweeps),
                 std::to_string(r.converged), std::to_string(r.warm_start)});
      pmf::write_field(out.path("maximizer_" + std::to_string(i) + ".pbfld"), r.maximizer);
      all &= r.converged;
    }
    table.save(out.path("levels.csv"));
    out.summary({"points", "violations", "slack", "all_converged"},
                {std::to_string(sweep.rows.size()), std::to_string(sweep.violations), num(sweep.slack),
                 std::to_string(all)});
    std::cout << sweep.rows.size() << " levels, " << sweep.violations << " monotonicity violations\n";
    return all ? exit_ok : exit_non_convergence;
  }
  const pmf::MPResult r = pmf::mountain_pass(cfg.lambda, spec, mp_options(cfg));
  pmf::CsvWriter path({"node", "energy"});
  for (std::size_t i = 0; i < r.path.energies.size(); ++i) path.row({std::to_string(i), num(r.path.energies[i])});
  path.save(out.path("path.csv"));
  pmf::write_field(out.path("maximizer.pbfld"), r.maximizer);
  const std::vector<std::string> header{"lambda", "c_estimate", "grad_norm", "sweeps", "converged", "residual_l2",
                                        "energy", "norm_sq", "max_u", "endpoint_family", "endpoint_energy"};
  std::vector<std::string> row{num(cfg.lambda), num(r.c_estimate), num(r.grad_norm), std::to_string(r.iterations),
                               std::to_string(r.converged)};
  if (r.converged) {
    pmf::write_field(out.path("solution.pbfld"), r.solution.field);
    row.insert(row.end(), {num(r.solution.residual_l2), num(r.solution.energy),
                           num(pmf::sobolev_norm_sq(r.solution.field)), num(r.solution.field.max())});
  } else {
    row.insert(row.end(), {"nan", "nan", "nan", "nan"});
  }
  row.insert(row.end(), {pmf::family_name(r.endpoint.family), num(r.endpoint.energy)});
  pmf::CsvWriter mp(header);
  mp.row(row);
  mp.save(out.path("mp.csv"));
  out.summary(header, row);
  std::cout << "c_estimate " << r.c_estimate << (r.converged ? " (converged)\n" : " (not converged)\n");
  return r.converged ? exit_ok : exit_non_convergence;
}

void write_quant(const pmf::QuantizationReport& q, const Outputs& out, const std::string& stem) {
  pmf::CsvWriter curve({"radius", "mass"});
  for (std::size_t i = 0; i < q.radii.size(); ++i) curve.row({num(q.radii[i]), num(q.mass[i])});
  curve.save(out.path(stem + ".csv"));
}

std::vector<std::string> quant_header() {
  return {"lambda", "has_peak", "plateau_radius", "plateau_mass", "nearest_N", "deviation"};
}

std::vector<std::string> quant_row(const pmf::QuantizationReport& q) {
  return {num(q.lambda), std::to_string(q.has_peak), num(q.plateau_radius), num(q.plateau_mass),
          std::to_string(q.nearest_N), num(q.deviation)};
}

int cmd_continue(const RunConfig& cfg, const Outputs& out) {
  pmf::SolveResult start;
  pmf::NewtonOptions nopt;
  nopt.tol = cfg.tol;
  if (!cfg.field.empty()) {
    start = pmf::newton_solve(pmf::read_field(cfg.field), cfg.lambda, nopt);
  } else {
    const pmf::MPResult mp = pmf::mountain_pass(cfg.lambda, spec_of(cfg), mp_options(cfg));
    start = mp.solution;
  }
  if (!start.converged) throw pmf::Error(pmf::Errc::non_convergence, "no converged start solution");
  pmf::ContinuationOptions opt;
  opt.dlambda_min = cfg.dlambda_min;
  opt.dlambda_max = cfg.dlambda_max;
  opt.blowup_cap = cfg.blowup_cap;
  opt.newton = nopt;
  const pmf::Branch b = pmf::continuation(start, cfg.lambda_end, cfg.dlambda, opt);
  pmf::CsvWriter table({"lambda", "norm", "max_u", "energy", "residual_l2"});
  for (const auto& p : b.points)
    table.row({num(p.lambda), num(std::sqrt(pmf::sobolev_norm_sq(p.field))), num(p.field.max()), num(p.energy),
               num(p.residual_l2)});
  table.save(out.path("branch.csv"));
  pmf::write_field(out.path("branch_end.pbfld"), b.points.back().field);
  std::vector<std::string> header{"reason", "points", "lambda_last", "max_u_last"};
  std::vector<std::string> row{pmf::branch_end_name(b.reason), std::to_string(b.points.size()),
                               num(b.points.back().lambda), num(b.points.back().field.max())};
  if (b.reason == pmf::BranchEnd::blowup_guard) {
    pmf::write_field(out.path("guard.pbfld"), b.guard_trigger.field);
    const pmf::QuantizationReport q = pmf::concentration(b.guard_trigger.field, b.guard_trigger.lambda,
                                                         cfg.plateau_fraction);
    write_quant(q, out, "quant");
    for (auto& h : quant_header()) header.push_back("guard_" + h);
    for (auto& v : quant_row(q)) row.push_back(v);
  }
  out.summary(header, row);
  std::cout << "branch " << pmf::branch_end_name(b.reason) << " after " << b.points.size() << " points\n";
  return b.reason == pmf::BranchEnd::newton_failure ? exit_non_convergence : exit_ok;
}

int cmd_quant(const RunConfig& cfg, const Outputs& out) {
  if (cfg.field.empty()) throw pmf::Error(pmf::Errc::invalid_argument, "quant needs --field");
  const pmf::QuantizationReport q = pmf::concentration(pmf::read_field(cfg.field), cfg.lambda, cfg.plateau_fraction);
  write_quant(q, out, "quant");
  out.summary(quant_header(), quant_row(q));
  std::cout << "plateau mass " << q.plateau_mass << ", nearest N " << q.nearest_N << '\n';
  return exit_ok;
}

int cmd_nonexist(const RunConfig& cfg, const Outputs& out) {
  const std::vector<double> grid = cfg.lambda_grid.empty() ? std::vector<double>{cfg.lambda} : cfg.lambda_grid;
  pmf::MultiStartOptions opt;
  opt.threads = cfg.threads;
  opt.newton.tol = cfg.tol;
  const pmf::NonexistenceReport rep = pmf::nonexistence_sweep(grid, spec_of(cfg), cfg.seeds, cfg.seed, opt);
  pmf::CsvWriter table({"lambda", "seeds", "converged", "failed", "nontrivial", "max_norm", "max_ratio", "distinct",
                        "chain_failures", "in_regime"});
  bool every_row_converged = true;
  for (const auto& r : rep.rows) {
    table.row({num(r.lambda), std::to_string(r.seeds), std::to_string(r.converged), std::to_string(r.failed),
               std::to_string(r.nontrivial), num(r.max_norm), num(r.max_ratio), std::to_string(r.distinct),
               std::to_string(r.chain_failures), std::to_string(r.in_regime)});
    every_row_converged &= r.converged > 0;
  }
  table.save(out.path("nonexist.csv"));
  out.summary({"m", "regime_marker", "trivial_tol", "only_trivial"},
              {std::to_string(rep.m), num(rep.regime_marker), num(rep.trivial_tol), std::to_string(rep.only_trivial())});
  std::cout << (rep.only_trivial() ? "only the trivial solution found\n" : "non-trivial solutions found\n");
  return every_row_converged ? exit_ok : exit_non_convergence;
}

int exit_code_for(pmf::Errc e) {
  switch (e) {
    case pmf::Errc::non_convergence:
    case pmf::Errc::singular_hessian:
    case pmf::Errc::exp_overflow:
    case pmf::Errc::quadrature_failure:
      return exit_non_convergence;
    default:
      return exit_validation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral toolkit for the polyharmonic mean-field equation on flat tori"};
  app.set_config("--config", "", "flat key = value file; command-line flags take precedence");
  app.fallthrough();
  app.require_subcommand(1);
  RunConfig cfg;
  app.add_option("--m", cfg.m, "half dimension (1 or 2)")->capture_default_str();
  app.add_option("--n", cfg.n, "grid points per axis")->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "lambda")->capture_default_str();
  app.add_option("--lambda_grid", cfg.lambda_grid, "comma-separated lambda list")->delimiter(',');
  app.add_option("--sigma_list", cfg.sigma_list, "comma-separated sigma list")->delimiter(',')->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "bubble dilation alpha")->capture_default_str();
  app.add_option("--tol", cfg.tol, "Newton residual tolerance")->capture_default_str();
  app.add_option("--max_sweeps", cfg.max_sweeps, "path relaxation sweeps")->capture_default_str();
  app.add_option("--path_segments", cfg.path_segments, "path segments P")->capture_default_str();
  app.add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
  app.add_option("--seeds", cfg.seeds, "multi-start seed count")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads, 0 = all cores")->capture_default_str();
  app.add_option("--lambda_end", cfg.lambda_end, "continuation target")->capture_default_str();
  app.add_option("--dlambda", cfg.dlambda, "initial continuation step")->capture_default_str();
  app.add_option("--dlambda_min", cfg.dlambda_min, "smallest continuation step")->capture_default_str();
  app.add_option("--dlambda_max", cfg.dlambda_max, "largest continuation step")->capture_default_str();
  app.add_option("--blowup_cap", cfg.blowup_cap, "continuation stops once max u exceeds this")->capture_default_str();
  app.add_option("--field", cfg.field, "PBFLD1 input field");
  app.add_option("--plateau_fraction", cfg.plateau_fraction, "plateau threshold on dmass/dr")->capture_default_str();
  app.add_option("--out", cfg.out, "output directory (else PMF_OUTPUT_DIR, else ./pmf-output)");

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, const Outputs&);
  };
  const Command commands[] = {
      {"constants", "print the thresholds Lambda_1 and lambda_1/(2m)", cmd_constants},
      {"bubble", "norm and energy slopes of the bubble family in log sigma", cmd_bubble},
      {"mp", "mountain pass plus Newton at lambda, or a level sweep over lambda_grid", cmd_mp},
      {"continue", "continue a solution branch from lambda to lambda_end", cmd_continue},
      {"quant", "concentration mass curve of a field file", cmd_quant},
      {"nonexist", "multi-start search for non-trivial solutions at small lambda", cmd_nonexist},
  };
  for (const Command& c : commands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_validation;
  }

  try {
    for (const Command& c : commands)
      if (app.got_subcommand(c.name)) {
        pmf::make_spec(cfg.m, cfg.n);
        const Outputs out(cfg, c.name);
        return c.run(cfg, out);
      }
  } catch (const pmf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_validation;
  }
  return exit_validation;
}
