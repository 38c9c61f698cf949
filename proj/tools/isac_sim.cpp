// Command-line driver: Monte Carlo runs, kappa sweeps, oracle verification
// and subproblem dumps.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isac/isac.hpp"

namespace fs = std::filesystem;
using namespace isac;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitSolverFailures = 2;

struct Common {
  std::string config_path;
  bool large = false;
  std::optional<double> kappa;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value scenario file")->check(CLI::ExistingFile);
  cmd->add_flag("--paper-scale", c.large, "M=80, N=3, K_d=5 (slow)");
  cmd->add_option("--kappa", c.kappa, "override the MASR target");
  cmd->add_option("--seed", c.seed, "root seed (default: config seed)");
  cmd->add_option("--threads", c.threads, "worker threads (default: ISAC_THREADS or all cores)");
}

SystemConfig load(const Common& c) {
  SystemConfig cfg = c.config_path.empty() ? SystemConfig{} : load_config(c.config_path);
  if (c.large) cfg = paper_scale(cfg);
  if (c.kappa) cfg.masr_target = *c.kappa;
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

int threads_for(const Common& c) { return c.threads > 0 ? c.threads : thread_count(); }

void report(const ExperimentResult& r) {
  const auto s = summarize(r);
  std::printf("%-8s kappa=%-6g drops=%-5d mean_min_se=%.6g p95_likely_se=%.6g infeasible=%d solver_failures=%d (%.1fs)\n",
              s.scheme.c_str(), s.kappa, s.drops, s.mean_min_se, s.p95_likely_se, s.infeasible_drops,
              r.solver_failures(), r.wall_seconds);
}

bool too_many_failures(const ExperimentResult& r) {
  return !r.drops.empty() && r.solver_failures() > 0.1 * static_cast<double>(r.drops.size());
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    out.push_back(parse_double(cell));
  }
  if (out.empty()) throw std::invalid_argument("--values needs at least one number");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free ISAC simulator"};
  app.require_subcommand(1);

  Common run_opts;
  std::string scheme_name = "gap-opc";
  int drops = 50;
  std::string out_dir = "out";
  auto* run = app.add_subcommand("run", "Monte Carlo drops for one scheme");
  add_common(run, run_opts);
  run->add_option("--scheme", scheme_name, "gap-opc | gap-npc | rap-npc");
  run->add_option("--drops", drops, "number of drops")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory");

  Common sweep_opts;
  std::string values = "5,10,15,20";
  std::vector<std::string> sweep_schemes = {"gap-opc", "gap-npc", "rap-npc"};
  int sweep_drops = 50;
  std::string sweep_out = "out";
  auto* sweep = app.add_subcommand("sweep-kappa", "Repeat runs over several MASR targets");
  add_common(sweep, sweep_opts);
  sweep->add_option("--values", values, "comma-separated kappa values");
  sweep->add_option("--scheme", sweep_schemes, "schemes to run (repeatable)");
  sweep->add_option("--drops", sweep_drops, "drops per kappa")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "output directory");

  Common verify_opts;
  long long trials = 100000;
  int instances = 20;
  auto* verify = app.add_subcommand("verify", "Compare closed forms with the Monte Carlo oracle");
  add_common(verify, verify_opts);
  verify->add_option("--trials", trials, "channel draws per instance")->check(CLI::Range(1000LL, 1000000000LL));
  verify->add_option("--instances", instances, "random instances")->check(CLI::PositiveNumber);

  Common dump_opts;
  std::string dump_path = "problem.txt";
  auto* dump = app.add_subcommand("dump-problem", "Write one communication subproblem as text");
  add_common(dump, dump_opts);
  dump->add_option("--out", dump_path, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) {
      const auto cfg = load(run_opts);
      const auto result = run_experiment(cfg, parse_scheme(scheme_name), drops, cfg.seed, threads_for(run_opts));
      emit_csv(result, out_dir);
      report(result);
      return too_many_failures(result) ? kExitSolverFailures : 0;
    }

    if (*sweep) {
      const auto base = load(sweep_opts);
      const auto kappas = parse_values(values);
      std::vector<Summary> rows;
      bool failures = false;
      fs::create_directories(sweep_out);
      for (const auto& name : sweep_schemes) {
        const auto scheme = parse_scheme(name);
        for (double k : kappas) {
          SystemConfig cfg = base;
          cfg.masr_target = k;
          cfg.validate();
          const auto result = run_experiment(cfg, scheme, sweep_drops, cfg.seed, threads_for(sweep_opts));
          write_cdf_csv(result, fs::path(sweep_out) / ("cdf_" + name + "_kappa" + format_double(k) + ".csv"));
          rows.push_back(summarize(result));
          report(result);
          failures = failures || too_many_failures(result);
        }
      }
      write_summary_csv(rows, fs::path(sweep_out) / "summary.csv");
      return failures ? kExitSolverFailures : 0;
    }

    if (*verify) {
      const auto cfg = load(verify_opts);
      const Rng root(cfg.seed);
      const TargetLocation moved{cfg.target.x_km * 0.4, cfg.target.y_km * 1.6, cfg.target.height_m};
      OracleComparison worst;
      for (int i = 0; i < instances; ++i) {
        const auto inst = make_oracle_instance(cfg, root.split(2 * i));
        auto c = compare_sinr_terms(inst.net, inst.assignment, inst.allocation, cfg, trials,
                                    root.split(2 * i + 1), threads_for(verify_opts));
        compare_power_pattern(inst.net, inst.assignment, inst.allocation, cfg, trials,
                              root.split(2 * i + 1).split(7), moved, c, threads_for(verify_opts));
        std::printf("instance %2d  sinr %.4f  ds %.4f  bu %.4f  iui %.4f  ir %.4f  p_com %.4f  p_sen %.4f  shift %.2f/%.2f sigma\n",
                    i, c.sinr_error, c.ds_error, c.bu_error, c.iui_error, c.ir_error, c.pattern_comm_error,
                    c.pattern_sense_error, c.angle_shift_comm_sigmas, c.angle_shift_sense_sigmas);
        worst.sinr_error = std::max(worst.sinr_error, c.sinr_error);
        worst.ds_error = std::max(worst.ds_error, c.ds_error);
        worst.bu_error = std::max(worst.bu_error, c.bu_error);
        worst.iui_error = std::max(worst.iui_error, c.iui_error);
        worst.ir_error = std::max(worst.ir_error, c.ir_error);
        worst.pattern_comm_error = std::max(worst.pattern_comm_error, c.pattern_comm_error);
        worst.pattern_sense_error = std::max(worst.pattern_sense_error, c.pattern_sense_error);
        worst.angle_shift_comm_sigmas = std::max(worst.angle_shift_comm_sigmas, c.angle_shift_comm_sigmas);
        worst.angle_shift_sense_sigmas = std::max(worst.angle_shift_sense_sigmas, c.angle_shift_sense_sigmas);
      }
      const bool sinr_ok = worst.sinr_error < 0.03;
      const bool terms_ok = std::max({worst.ds_error, worst.bu_error, worst.iui_error, worst.ir_error}) < 0.03;
      const bool pattern_ok = std::max(worst.pattern_comm_error, worst.pattern_sense_error) < 0.03 &&
                              std::max(worst.angle_shift_comm_sigmas, worst.angle_shift_sense_sigmas) <= 1.0;
      std::printf("sinr closed form      %s (worst relative error %.4f)\n", sinr_ok ? "PASS" : "FAIL", worst.sinr_error);
      std::printf("signal terms          %s\n", terms_ok ? "PASS" : "FAIL");
      std::printf("power pattern         %s\n", pattern_ok ? "PASS" : "FAIL");
      return sinr_ok && terms_ok && pattern_ok ? 0 : kExitSolverFailures;
    }

    if (*dump) {
      const auto cfg = load(dump_opts);
      const auto net = place_network(cfg, drop_streams(cfg.seed, 0).placement);
      const auto sel = greedy_select(net, cfg, npc_scheme(cfg));
      if (sel.assignment.num_communication() == 0) {
        std::cerr << "drop 0 has no communication AP at this MASR target\n";
        return kExitSolverFailures;
      }
      const auto npc = npc_allocation(net, sel.assignment, cfg);
      const auto problem = make_comm_problem(net, sel.assignment, npc.sense, min_sinr(net, sel.assignment, npc, cfg), cfg);
      std::ofstream out(dump_path);
      if (!out) throw std::runtime_error("cannot write " + dump_path);
      dump_comm_problem(out, problem);
      if (!out) throw std::runtime_error("write failed for " + dump_path);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
