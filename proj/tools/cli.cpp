#include "cli.hpp"

#include "olu/bench.hpp"
#include "olu/config.hpp"
#include "olu/error.hpp"
#include "olu/report.hpp"
#include "olu/stream_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace olu::cli {

namespace {

constexpr const char* kConfigKeys = R"(Config file (INI):
  [experiment] seed probe_count lambda_z phase_policy window_restart interventions
               contraction_trials contraction_radius epsilon delta
  [stream]     regime dimension length kappa mu drift_amplitude drift_period drift_noise
               curvature_drift curvature_period ridge label_drift label_period beta0_scale
               deletion_mode deletion_size deletion_time horizon
  [optimizer]  eta curvature_eps gamma_mode gamma0 tau
  [grid]       <any key above> = comma-separated values
Interventions: oracle noop param_only retain_ft mem_reset pair_drop window_tau window_5tau
               window_<N> drop_refill
Exit codes: 0 success, 1 config error, 2 runtime error.)";

bool is_config_error(Errc c) {
  return c == Errc::InvalidConfig || c == Errc::ParseError || c == Errc::InvalidAxis ||
         c == Errc::InvalidPrivacyParams;
}

struct RunFlags {
  std::string config;
  std::string out;
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool needs_config) {
  auto* c = cmd->add_option("--config", f.config, "experiment config file");
  if (needs_config) c->required();
  cmd->add_option("--out", f.out, "output directory")->required();
  cmd->add_option("--workers", f.workers, "grid worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "base seed override");
  cmd->add_option("--format", f.format, "results format")->check(CLI::IsMember({"csv", "json"}));
}

LoadedConfig resolve(const RunFlags& f, const ExperimentConfig& defaults) {
  LoadedConfig lc = f.config.empty() ? LoadedConfig{defaults, {}} : load_config(f.config, defaults);
  if (f.seed) lc.experiment.seed = *f.seed;
  return lc;
}

void print_config(std::ostream& out, const ExperimentConfig& c) {
  const auto& s = c.stream;
  const StepConfig o = effective_step_config(c);
  fmt::print(out, "[experiment]\nseed = {}\nprobe_count = {}\nlambda_z = {}\nphase_policy = {}\n",
             c.seed, c.probe_count, c.lambda_z, to_string(c.phase_policy));
  fmt::print(out, "window_restart = {}\ninterventions = {}\n", to_string(c.window_restart),
             fmt::join(c.interventions, ","));
  fmt::print(out, "contraction_trials = {}\ncontraction_radius = {}\nepsilon = {}\ndelta = {}\n",
             c.certificate.contraction_trials, c.certificate.contraction_radius,
             c.certificate.epsilon, c.certificate.delta);
  fmt::print(out, "[stream]\nregime = {}\ndimension = {}\nlength = {}\nkappa = {}\nmu = {}\n",
             to_string(s.regime), s.dimension, s.length, s.kappa, s.mu);
  fmt::print(out, "drift_amplitude = {}\ndrift_period = {}\ndrift_noise = {}\n", s.drift_amplitude,
             s.drift_period, s.drift_noise);
  fmt::print(out, "curvature_drift = {}\ncurvature_period = {}\nridge = {}\n", s.curvature_drift,
             s.curvature_period, s.ridge);
  fmt::print(out, "label_drift = {}\nlabel_period = {}\nbeta0_scale = {}\n", s.label_drift,
             s.label_period, s.beta0_scale);
  fmt::print(out, "deletion_mode = {}\ndeletion_size = {}\ndeletion_time = {}\nhorizon = {}\n",
             to_string(s.deletion_mode), s.deletion_size, s.deletion_time, s.horizon);
  fmt::print(out, "[optimizer]\neta = {}\ncurvature_eps = {}\ngamma_mode = {}\ngamma0 = {}\ntau = {}\n",
             o.eta, o.curvature_eps, to_string(o.gamma_mode), o.gamma0, c.tau);
}

}  // namespace

int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic unlearning benchmark for online L-BFGS", "bench"};
  app.footer(kConfigKeys);
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "progress messages on stderr");

  RunFlags exp1_f, exp2_f, grid_f;
  auto* exp1 = app.add_subcommand("exp1", "finite-memory decay experiment (no-op vs counterfactual)");
  add_run_flags(exp1, exp1_f, false);
  auto* exp2 = app.add_subcommand("exp2", "state-aware intervention comparison");
  add_run_flags(exp2, exp2_f, false);
  auto* grid = app.add_subcommand("grid", "cartesian sweep over the [grid] axes");
  add_run_flags(grid, grid_f, true);
  std::string grid_kind = "exp2";
  grid->add_option("--experiment", grid_kind, "experiment per grid point")
      ->check(CLI::IsMember({"exp1", "exp2"}));

  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("gen-stream", "write a generated event stream");
  gen->add_option("--config", gen_config, "experiment config file");
  gen->add_option("--out", gen_out, "stream record file")->required();
  gen->add_option("--seed", gen_seed, "seed override");

  double alpha = 0, eps = 0, delta = 0;
  auto* cert = app.add_subcommand("certify", "noise scale for a deviation bound");
  cert->add_option("--alpha", alpha, "deviation bound alpha_t")->required();
  cert->add_option("--eps", eps, "privacy epsilon")->required();
  cert->add_option("--delta", delta, "privacy delta")->required();

  std::string insp_config, insp_stream;
  auto* insp = app.add_subcommand("inspect", "print the resolved config or a stream summary");
  insp->add_option("--config", insp_config, "experiment config file");
  insp->add_option("--stream", insp_stream, "stream record file");

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    auto log = [&](const std::string& msg) {
      if (verbose) err << msg << '\n';
    };
    auto run_single = [&](const RunFlags& f, ExperimentKind kind) {
      const ExperimentConfig defaults = kind == ExperimentKind::FiniteMemoryDecay
                                            ? default_experiment1_config()
                                            : default_experiment2_config();
      LoadedConfig lc = resolve(f, defaults);
      validate(lc.experiment);
      log(fmt::format("running {} seed={}", to_string(kind), lc.experiment.seed));
      const RunResult r = run_experiment(kind, lc.experiment);
      write_outputs(f.out, {r}, parse_output_format(f.format), true);
      for (const auto& v : r.violated_assumptions) err << "warning: " << v << '\n';
      log("wrote " + f.out);
    };

    if (*exp1) {
      run_single(exp1_f, ExperimentKind::FiniteMemoryDecay);
    } else if (*exp2) {
      run_single(exp2_f, ExperimentKind::StateAware);
    } else if (*grid) {
      const ExperimentKind kind =
          grid_kind == "exp1" ? ExperimentKind::FiniteMemoryDecay : ExperimentKind::StateAware;
      LoadedConfig lc = resolve(grid_f, kind == ExperimentKind::FiniteMemoryDecay
                                            ? default_experiment1_config()
                                            : default_experiment2_config());
      validate(lc.experiment);
      log(fmt::format("grid with {} axes, {} workers", lc.axes.size(), grid_f.workers));
      const auto runs = run_grid(lc.experiment, lc.axes, grid_f.workers, kind);
      write_outputs(grid_f.out, runs, parse_output_format(grid_f.format), false);
      log(fmt::format("wrote {} runs to {}", runs.size(), grid_f.out));
    } else if (*gen) {
      LoadedConfig lc = gen_config.empty() ? LoadedConfig{default_experiment2_config(), {}}
                                           : load_config(gen_config, default_experiment2_config());
      if (gen_seed) lc.experiment.seed = *gen_seed;
      validate_generator(lc.experiment.stream);
      const EventStream s = generate_stream(lc.experiment.stream, lc.experiment.seed);
      std::ostringstream buf;
      write_stream(buf, s);
      atomic_write(gen_out, buf.str());
      log(fmt::format("wrote {} events to {}", s.events.size(), gen_out));
    } else if (*cert) {
      fmt::print(out, "sigma {}\n", format_number(calibrate_sigma(alpha, eps, delta)));
    } else if (*insp) {
      if (insp_config.empty() && insp_stream.empty()) {
        print_config(out, default_experiment2_config());
      }
      if (!insp_config.empty()) {
        const LoadedConfig lc = load_config(insp_config, default_experiment2_config());
        print_config(out, lc.experiment);
        if (!lc.axes.empty()) {
          out << "[grid]\n";
          for (const auto& [k, v] : lc.axes) fmt::print(out, "{} = {}\n", k, fmt::join(v, ","));
        }
      }
      if (!insp_stream.empty()) {
        std::ifstream f(insp_stream);
        if (!f) throw Error(Errc::InvalidConfig, "cannot open stream file '" + insp_stream + "'");
        const EventStream s = read_stream(f);
        std::size_t inserts = 0;
        for (const auto& e : s.events) inserts += e.is_insert();
        fmt::print(out, "regime {}\ndimension {}\nseed {}\nevents {}\ninserts {}\ndeletes {}\n",
                   to_string(s.regime), s.dimension, s.seed, s.events.size(), inserts,
                   s.events.size() - inserts);
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace olu::cli
