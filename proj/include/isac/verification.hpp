#pragma once

// Oracle-versus-closed-form comparisons shared by the `verify` subcommand and
// the acceptance suite.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "isac/config.hpp"
#include "isac/metrics.hpp"
#include "isac/oracle.hpp"
#include "isac/power.hpp"
#include "isac/random.hpp"
#include "isac/topology.hpp"

namespace isac {

/// |estimate - reference| / reference; a zero reference demands an exact zero.
inline double relative_error(double estimate, double reference) {
  if (reference == 0.0) return estimate == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(estimate - reference) / std::abs(reference);
}

/// Closed-form values of the four signal terms for every user.
struct SignalTerms {
  Eigen::VectorXd ds;       // desired-signal amplitude
  Eigen::VectorXd bu;       // beamforming-uncertainty power
  Eigen::MatrixXd iui;      // (k, k') leakage power, zero diagonal
  Eigen::VectorXd ir;       // sensing interference power
};

inline SignalTerms closed_form_terms(const NetworkRealization& net, const ModeAssignment& a,
                                     const PowerAllocation& p, const SystemConfig& cfg) {
  const int M = net.num_aps();
  const int K = net.num_users();
  const double rho = cfg.max_power;
  const double N = cfg.antennas_per_ap;
  SignalTerms t;
  t.ds = Eigen::VectorXd::Zero(K);
  t.bu = Eigen::VectorXd::Zero(K);
  t.iui = Eigen::MatrixXd::Zero(K, K);
  t.ir = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) {
      if (a.communicates(m)) {
        t.ds(k) += std::sqrt(rho * p.comm(m, k)) * N * net.gamma(m, k);
        t.bu(k) += rho * N * p.comm(m, k) * net.gamma(m, k) * net.beta(m, k);
        for (int kp = 0; kp < K; ++kp)
          if (kp != k) t.iui(k, kp) += rho * N * p.comm(m, kp) * net.gamma(m, kp) * net.beta(m, k);
      } else {
        t.ir(k) += rho * p.sense(m) * net.beta(m, k);
      }
    }
  }
  return t;
}

struct OracleComparison {
  double sinr_error = 0.0;  // worst relative error over users
  double ds_error = 0.0;
  double bu_error = 0.0;
  double iui_error = 0.0;
  double ir_error = 0.0;
  double pattern_comm_error = 0.0;
  double pattern_sense_error = 0.0;
  // |difference| / mutual standard error after moving the target
  double angle_shift_comm_sigmas = 0.0;
  double angle_shift_sense_sigmas = 0.0;
};

inline OracleComparison compare_sinr_terms(const NetworkRealization& net, const ModeAssignment& a,
                                           const PowerAllocation& p, const SystemConfig& cfg,
                                           long long trials, const Rng& rng, int threads = 1) {
  OracleComparison c;
  const auto est = estimate_sinr_terms(net, a, p, cfg, trials, rng, threads);
  const auto ref = closed_form_terms(net, a, p, cfg);
  const auto sinr = sinr_all(net, a, p, cfg);
  const int K = net.num_users();
  for (int k = 0; k < K; ++k) {
    c.sinr_error = std::max(c.sinr_error, relative_error(est.sinr_mc(k), sinr(k)));
    c.ds_error = std::max(c.ds_error, relative_error(est.ds(k).real(), ref.ds(k)));
    c.bu_error = std::max(c.bu_error, relative_error(est.bu_var(k), ref.bu(k)));
    c.ir_error = std::max(c.ir_error, relative_error(est.ir_var(k), ref.ir(k)));
    for (int kp = 0; kp < K; ++kp)
      if (kp != k) c.iui_error = std::max(c.iui_error, relative_error(est.iui_var(k, kp), ref.iui(k, kp)));
  }
  return c;
}

/// Same network with the target moved; only the departure angles change.
inline NetworkRealization with_target(NetworkRealization net, const SystemConfig& cfg, TargetLocation target) {
  SystemConfig moved = cfg;
  moved.target = target;
  for (std::size_t m = 0; m < net.ap_positions.size(); ++m)
    net.target_angles[m] = target_angles_from(net.ap_positions[m], moved);
  return net;
}

inline void compare_power_pattern(const NetworkRealization& net, const ModeAssignment& a,
                                  const PowerAllocation& p, const SystemConfig& cfg, long long trials,
                                  const Rng& rng, TargetLocation moved_target, OracleComparison& c,
                                  int threads = 1) {
  const auto ref = power_pattern(net, a, p, cfg);
  const auto est = estimate_power_pattern(net, a, p, cfg, trials, rng, threads);
  c.pattern_comm_error = relative_error(est.comm, ref.comm);
  c.pattern_sense_error = relative_error(est.sense, ref.sense);

  // Same stream for both positions: only the steering direction differs.
  const auto other = estimate_power_pattern(with_target(net, cfg, moved_target), a, p, cfg, trials,
                                            rng, threads);
  auto sigmas = [](double x, double y, double sx, double sy) {
    const double s = std::sqrt(sx * sx + sy * sy);
    if (s == 0.0) return x == y ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(x - y) / s;
  };
  c.angle_shift_comm_sigmas = sigmas(est.comm, other.comm, est.comm_se, other.comm_se);
  c.angle_shift_sense_sigmas = sigmas(est.sense, other.sense, est.sense_se, other.sense_se);
}

/// A drop with a random mixed assignment (at least one AP in each mode) and
/// full-power coefficients.
struct OracleInstance {
  NetworkRealization net;
  ModeAssignment assignment;
  PowerAllocation allocation;
};

inline OracleInstance make_oracle_instance(const SystemConfig& cfg, const Rng& rng) {
  OracleInstance inst;
  inst.net = place_network(cfg, rng.split(0));
  Rng pick = rng.split(1);
  const int M = cfg.num_aps;
  do {
    inst.assignment = ModeAssignment::all_sensing(M);
    for (int m = 0; m < M; ++m) inst.assignment.set_communication(m, pick.bernoulli(0.5));
  } while (M > 1 && (inst.assignment.num_communication() == 0 || inst.assignment.num_sensing() == 0));
  inst.allocation = npc_allocation(inst.net, inst.assignment, cfg);
  return inst;
}

}  // namespace isac
