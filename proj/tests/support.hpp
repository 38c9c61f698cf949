#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "isac/config.hpp"
#include "isac/topology.hpp"

namespace isac::testing {

/// A network built directly from large-scale statistics; positions and
/// target angles are placeholders.
inline NetworkRealization make_network(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& gamma,
                                       int antennas) {
  NetworkRealization net;
  net.beta = beta;
  net.gamma = gamma;
  net.distance_km = Eigen::MatrixXd::Ones(beta.rows(), beta.cols());
  net.ap_positions.assign(beta.rows(), Point2{});
  net.user_positions.assign(beta.cols(), Point2{});
  net.target_angles.assign(beta.rows(), TargetAngles{0.3, 1.1});
  net.antennas_per_ap = antennas;
  return net;
}

/// Unit-free config for hand-built instances.
inline SystemConfig small_config(int M, int N, int K, double rho, double kappa = 0.0) {
  SystemConfig cfg;
  cfg.num_aps = M;
  cfg.antennas_per_ap = N;
  cfg.num_users = K;
  cfg.pilot_symbols = K;
  cfg.max_power = rho;
  cfg.masr_target = kappa;
  return cfg;
}

/// Drop with the default geometry scaled to the given sizes.
inline SystemConfig drop_config(int M, int N, int K, double kappa) {
  SystemConfig cfg;
  cfg.num_aps = M;
  cfg.antennas_per_ap = N;
  cfg.num_users = K;
  cfg.pilot_symbols = K;
  cfg.masr_target = kappa;
  return cfg;
}

/// SINR of user k written out term by term; flags[m] = 1 marks a C-AP.
inline double reference_sinr(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& gamma,
                             const std::vector<int>& flags, const Eigen::MatrixXd& eta,
                             const Eigen::VectorXd& eta_s, double rho, int N, int k) {
  double num = 0, bu_iui = 0, ir = 0;
  for (std::size_t m = 0; m < flags.size(); ++m) {
    num += flags[m] * std::sqrt(eta(m, k)) * gamma(m, k);
    for (int kp = 0; kp < beta.cols(); ++kp) bu_iui += flags[m] * eta(m, kp) * gamma(m, kp) * beta(m, k);
    ir += (1 - flags[m]) * eta_s(m) * beta(m, k);
  }
  return rho * N * N * num * num / (rho * N * bu_iui + rho * ir + 1.0);
}

/// Greedy score of an assignment under full power, computed from scratch:
/// 0 without C-APs or when the MASR target is missed, else the min SINR.
inline double reference_npc_score(const NetworkRealization& net, const std::vector<int>& flags,
                                  const SystemConfig& cfg) {
  const int M = static_cast<int>(flags.size());
  const int K = static_cast<int>(net.beta.cols());
  const int N = cfg.antennas_per_ap;
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(M, K);
  Eigen::VectorXd eta_s = Eigen::VectorXd::Zero(M);
  double sensing = 0, comm = 0;
  int comm_aps = 0;
  for (int m = 0; m < M; ++m) {
    if (flags[m]) {
      ++comm_aps;
      double total = 0;
      for (int k = 0; k < K; ++k) total += net.gamma(m, k);
      for (int k = 0; k < K; ++k) {
        eta(m, k) = 1.0 / (N * total);
        comm += eta(m, k) * net.gamma(m, k);
      }
    } else {
      eta_s(m) = 1.0;
      sensing += 1.0;
    }
  }
  if (comm_aps == 0) return 0.0;
  if (sensing < cfg.masr_target * comm * (1 - 1e-9)) return 0.0;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k)
    worst = std::min(worst, reference_sinr(net.beta, net.gamma, flags, eta, eta_s, cfg.max_power, N, k));
  return worst;
}

}  // namespace isac::testing
