#pragma once

// Closed-form communication and sensing metrics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "isac/config.hpp"
#include "isac/topology.hpp"

namespace isac {

/// Per-AP operation mode: communication (C-AP) or sensing (S-AP).
class ModeAssignment {
 public:
  ModeAssignment() = default;
  explicit ModeAssignment(int num_aps) : comm_(num_aps, 0) {}
  explicit ModeAssignment(std::vector<std::uint8_t> flags) : comm_(std::move(flags)) {
    for (auto f : comm_)
      if (f > 1) throw std::invalid_argument("mode flags must be 0 or 1");
  }

  static ModeAssignment all_sensing(int num_aps) { return ModeAssignment(num_aps); }
  static ModeAssignment all_communication(int num_aps) {
    return ModeAssignment(std::vector<std::uint8_t>(num_aps, 1));
  }

  int size() const { return static_cast<int>(comm_.size()); }
  bool communicates(int m) const { return comm_[m] != 0; }
  double flag(int m) const { return comm_[m] ? 1.0 : 0.0; }
  void set_communication(int m, bool on) { comm_[m] = on ? 1 : 0; }

  int num_communication() const {
    return static_cast<int>(std::count(comm_.begin(), comm_.end(), std::uint8_t{1}));
  }
  int num_sensing() const { return size() - num_communication(); }

  const std::vector<std::uint8_t>& flags() const { return comm_; }
  friend bool operator==(const ModeAssignment&, const ModeAssignment&) = default;

 private:
  std::vector<std::uint8_t> comm_;
};

/// comm(m, k) are the C-AP coefficients, sense(m) the S-AP coefficients.
struct PowerAllocation {
  Eigen::MatrixXd comm;
  Eigen::VectorXd sense;

  static PowerAllocation zeros(int num_aps, int num_users) {
    return {Eigen::MatrixXd::Zero(num_aps, num_users), Eigen::VectorXd::Zero(num_aps)};
  }
};

inline bool dimensions_match(const NetworkRealization& net, const ModeAssignment& a,
                             const PowerAllocation& p) {
  return a.size() == net.num_aps() && p.comm.rows() == net.num_aps() &&
         p.comm.cols() == net.num_users() && p.sense.size() == net.num_aps();
}

inline void require_dimensions(const NetworkRealization& net, const ModeAssignment& a,
                               const PowerAllocation& p) {
  if (!dimensions_match(net, a, p)) throw std::invalid_argument("allocation dimensions do not match the network");
}

/// Effective transmit power of every AP: a_m * sum_k eta_mk gamma_mk.
inline Eigen::VectorXd comm_load(const NetworkRealization& net, const ModeAssignment& a,
                                 const PowerAllocation& p) {
  Eigen::VectorXd load = p.comm.cwiseProduct(net.gamma).rowwise().sum();
  for (int m = 0; m < a.size(); ++m) load(m) *= a.flag(m);
  return load;
}

/// Downlink SINR of user k with conjugate precoding, use-and-then-forget bound.
inline double sinr_closed_form(const NetworkRealization& net, const ModeAssignment& a,
                               const PowerAllocation& p, int k, const SystemConfig& cfg) {
  const double rho = cfg.max_power;
  const double N = cfg.antennas_per_ap;
  double coherent = 0.0;
  double interference = 0.0;
  double sensing = 0.0;
  for (int m = 0; m < a.size(); ++m) {
    if (a.communicates(m)) {
      coherent += std::sqrt(p.comm(m, k)) * net.gamma(m, k);
      interference += p.comm.row(m).dot(net.gamma.row(m)) * net.beta(m, k);
    } else {
      sensing += p.sense(m) * net.beta(m, k);
    }
  }
  return rho * N * N * coherent * coherent / (rho * N * interference + rho * sensing + 1.0);
}

inline Eigen::VectorXd sinr_all(const NetworkRealization& net, const ModeAssignment& a,
                                const PowerAllocation& p, const SystemConfig& cfg) {
  Eigen::VectorXd out(net.num_users());
  for (int k = 0; k < net.num_users(); ++k) out(k) = sinr_closed_form(net, a, p, k, cfg);
  return out;
}

inline double min_sinr(const NetworkRealization& net, const ModeAssignment& a,
                       const PowerAllocation& p, const SystemConfig& cfg) {
  return sinr_all(net, a, p, cfg).minCoeff();
}

inline double spectral_efficiency(double sinr, const SystemConfig& cfg) {
  return cfg.training_overhead() * std::log2(1.0 + sinr);
}

struct PowerPattern {
  double comm = 0.0;
  double sense = 0.0;
  double total() const { return comm + sense; }
};

/// Average spatial power pattern at the target, split by AP role. Both parts
/// are independent of the target angles.
inline PowerPattern power_pattern(const NetworkRealization& net, const ModeAssignment& a,
                                  const PowerAllocation& p, const SystemConfig& cfg) {
  PowerPattern out;
  for (int m = 0; m < a.size(); ++m) {
    if (a.communicates(m)) out.comm += p.comm.row(m).dot(net.gamma.row(m));
    else out.sense += p.sense(m);
  }
  out.comm *= cfg.max_power;
  out.sense *= cfg.max_power;
  return out;
}

/// Mainlobe-to-average-sidelobe ratio. x/0 is +inf for x > 0, and 0/0 is 0.
inline double masr(const NetworkRealization& net, const ModeAssignment& a,
                   const PowerAllocation& p, const SystemConfig& cfg) {
  const auto pat = power_pattern(net, a, p, cfg);
  if (pat.comm <= 0.0) return pat.sense > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return pat.sense / pat.comm;
}

/// sum_m (1 - a_m) eta_m - kappa * sum_m a_m sum_k eta_mk gamma_mk. Non-negative
/// exactly when the MASR target is met (except for the 0/0 convention).
inline double masr_margin(const NetworkRealization& net, const ModeAssignment& a,
                          const PowerAllocation& p, const SystemConfig& cfg) {
  const auto pat = power_pattern(net, a, p, cfg);
  return (pat.sense - cfg.masr_target * pat.comm) / cfg.max_power;
}

/// MASR test with the 0/0 convention: no sensing power never satisfies
/// a positive target.
inline bool meets_masr(double masr_value, double kappa, double tol = 0.0) {
  return masr_value >= kappa - tol;
}

/// MASR test used for reporting: allows round-off relative to the target.
inline bool meets_masr_target(double masr_value, double kappa) {
  return meets_masr(masr_value, kappa, 1e-9 * std::max(1.0, kappa));
}

struct MetricsReport {
  Eigen::VectorXd sinr;
  Eigen::VectorXd se;
  double min_se = 0.0;
  double min_sinr = 0.0;
  double masr = 0.0;
  double p_com = 0.0;
  double p_sen = 0.0;
  // min(1/N - a_m load_m, (1 - a_m) - eta_m); negative means a violated cap.
  Eigen::VectorXd constraint_slacks;
};

inline Eigen::VectorXd per_ap_slacks(const NetworkRealization& net, const ModeAssignment& a,
                                     const PowerAllocation& p, const SystemConfig& cfg) {
  const Eigen::VectorXd load = comm_load(net, a, p);
  Eigen::VectorXd slack(a.size());
  for (int m = 0; m < a.size(); ++m) {
    slack(m) = std::min(1.0 / cfg.antennas_per_ap - load(m), (1.0 - a.flag(m)) - p.sense(m));
  }
  return slack;
}

inline MetricsReport evaluate(const NetworkRealization& net, const ModeAssignment& a,
                              const PowerAllocation& p, const SystemConfig& cfg) {
  require_dimensions(net, a, p);
  MetricsReport r;
  r.sinr = sinr_all(net, a, p, cfg);
  r.se = r.sinr.unaryExpr([&](double s) { return spectral_efficiency(s, cfg); });
  r.min_sinr = r.sinr.minCoeff();
  r.min_se = r.se.minCoeff();
  const auto pat = power_pattern(net, a, p, cfg);
  r.p_com = pat.comm;
  r.p_sen = pat.sense;
  r.masr = masr(net, a, p, cfg);
  r.constraint_slacks = per_ap_slacks(net, a, p, cfg);
  return r;
}

struct AuditResult {
  bool caps_ok = true;
  bool nonnegative_ok = true;
  bool masr_ok = true;
  double worst_slack = 0.0;
  bool ok() const { return caps_ok && nonnegative_ok && masr_ok; }
};

/// Checks per-AP caps, non-negativity and the MASR target for an allocation,
/// directly from the coefficients.
inline AuditResult audit_allocation(const NetworkRealization& net, const ModeAssignment& a,
                                    const PowerAllocation& p, const SystemConfig& cfg,
                                    double tol = 1e-6) {
  require_dimensions(net, a, p);
  AuditResult r;
  const Eigen::VectorXd slack = per_ap_slacks(net, a, p, cfg);
  r.worst_slack = slack.size() ? slack.minCoeff() : 0.0;
  r.caps_ok = r.worst_slack >= -tol;
  r.nonnegative_ok = (p.comm.size() == 0 || p.comm.minCoeff() >= -tol) &&
                     (p.sense.size() == 0 || p.sense.minCoeff() >= -tol);
  r.masr_ok = meets_masr(masr(net, a, p, cfg), cfg.masr_target, tol);
  return r;
}

}  // namespace isac
