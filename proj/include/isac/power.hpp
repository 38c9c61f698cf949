#pragma once

// Power control: full-power baseline, bisection over the max-min SINR level
// for the communication coefficients, a line search for the sensing
// coefficients, and the alternating loop combining the two.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "isac/config.hpp"
#include "isac/convex.hpp"
#include "isac/metrics.hpp"
#include "isac/topology.hpp"

namespace isac {

/// Every C-AP at its cap with equal coefficients; every S-AP at eta_m = 1.
inline PowerAllocation npc_allocation(const NetworkRealization& net, const ModeAssignment& a,
                                      const SystemConfig& cfg) {
  if (a.size() != net.num_aps()) throw std::invalid_argument("assignment size does not match the network");
  auto p = PowerAllocation::zeros(net.num_aps(), net.num_users());
  const double N = cfg.antennas_per_ap;
  for (int m = 0; m < a.size(); ++m) {
    if (a.communicates(m)) {
      const double total = net.gamma.row(m).sum();
      if (!(total > 0.0)) throw std::domain_error("C-AP with zero estimation variance to every user");
      p.comm.row(m).setConstant(1.0 / (N * total));
    } else {
      p.sense(m) = 1.0;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Communication subproblem at a fixed SINR level t.
//
// Variables are theta_mk = sqrt(eta_mk) on C-APs and the per-AP effective
// powers upsilon_m^2. Constraints, for every user k and C-AP m:
//   N * sum_m theta_mk gamma_mk >= sqrt(t) * sqrt(N sum_m beta_mk upsilon_m^2 + phi_k)
//   kappa * sum_m upsilon_m^2 <= sum_s eta_s
//   sum_k w_mk theta_mk^2 <= upsilon_m^2 <= 1/N,  theta >= 0
// with phi_k = (rho sum_s eta_s beta_sk + 1) / rho and w_mk = gamma_mk
// (w_mk = 1 when the literal per-AP form is selected). Since upsilon only
// appears with a favourable sign everywhere else, the solver eliminates it
// at upsilon_m^2 = sum_k w_mk theta_mk^2.
// ---------------------------------------------------------------------------

struct CommFeasibilityProblem {
  Eigen::MatrixXd beta;    // M x K
  Eigen::MatrixXd gamma;   // M x K
  ModeAssignment assignment;
  Eigen::VectorXd eta_sen; // fixed sensing coefficients
  double level = 0.0;      // t
  int antennas = 1;
  double max_power = 1.0;
  double kappa = 0.0;
  bool literal_per_ap = false;

  double per_ap_weight(int m, int k) const { return literal_per_ap ? 1.0 : gamma(m, k); }
  double sensing_total() const {
    double s = 0.0;
    for (int m = 0; m < assignment.size(); ++m)
      if (!assignment.communicates(m)) s += eta_sen(m);
    return s;
  }
  double sensing_interference(int k) const {
    double s = 0.0;
    for (int m = 0; m < assignment.size(); ++m)
      if (!assignment.communicates(m)) s += eta_sen(m) * beta(m, k);
    return max_power * s;
  }
};

inline CommFeasibilityProblem make_comm_problem(const NetworkRealization& net, const ModeAssignment& a,
                                                const Eigen::VectorXd& eta_sen, double level,
                                                const SystemConfig& cfg) {
  CommFeasibilityProblem p;
  p.beta = net.beta;
  p.gamma = net.gamma;
  p.assignment = a;
  p.eta_sen = eta_sen;
  p.level = level;
  p.antennas = cfg.antennas_per_ap;
  p.max_power = cfg.max_power;
  p.kappa = cfg.masr_target;
  p.literal_per_ap = cfg.literal_per_ap_constraint;
  return p;
}

/// Maps problem variables to solver coordinates x_mk = theta_mk sqrt(N gamma_mk),
/// so that the default per-AP cap reads sum_k x_mk^2 <= 1.
class CommVariableMap {
 public:
  explicit CommVariableMap(const CommFeasibilityProblem& p) : K_(static_cast<int>(p.beta.cols())) {
    for (int m = 0; m < p.assignment.size(); ++m)
      if (p.assignment.communicates(m)) aps_.push_back(m);
    scale_.resize(static_cast<Eigen::Index>(aps_.size()) * K_);
    active_.assign(scale_.size(), false);
    for (std::size_t j = 0; j < aps_.size(); ++j) {
      for (int k = 0; k < K_; ++k) {
        const double g = p.gamma(aps_[j], k);
        const auto i = index(static_cast<int>(j), k);
        active_[i] = g > 0.0;
        scale_(i) = g > 0.0 ? 1.0 / std::sqrt(p.antennas * g) : 0.0;
      }
    }
  }

  int dimension() const { return static_cast<int>(scale_.size()); }
  int num_comm_aps() const { return static_cast<int>(aps_.size()); }
  int ap(int j) const { return aps_[j]; }
  int index(int j, int k) const { return j * K_ + k; }
  bool active(int i) const { return active_[i]; }
  /// theta = x * scale
  double theta_scale(int i) const { return scale_(i); }

  Eigen::VectorXd to_solver(const Eigen::MatrixXd& eta_com) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dimension());
    for (int j = 0; j < num_comm_aps(); ++j)
      for (int k = 0; k < K_; ++k) {
        const int i = index(j, k);
        if (active_[i]) x(i) = std::sqrt(std::max(eta_com(aps_[j], k), 0.0)) / scale_(i);
      }
    return x;
  }

  Eigen::MatrixXd to_eta(const Eigen::VectorXd& x, int num_aps) const {
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(num_aps, K_);
    for (int j = 0; j < num_comm_aps(); ++j)
      for (int k = 0; k < K_; ++k) {
        const int i = index(j, k);
        if (active_[i]) {
          const double theta = std::max(x(i), 0.0) * scale_(i);
          eta(aps_[j], k) = theta * theta;
        }
      }
    return eta;
  }

 private:
  int K_;
  std::vector<int> aps_;
  Eigen::VectorXd scale_;
  std::vector<bool> active_;
};

/// Builds the solver form of the communication subproblem. Returns nullopt
/// when the MASR constraint forces every communication coefficient to zero
/// while t > 0, which is infeasible outright.
inline std::optional<convex::Problem> build_comm_constraints(const CommFeasibilityProblem& p,
                                                             const CommVariableMap& vars) {
  using convex::SmoothConstraint;
  const int K = static_cast<int>(p.beta.cols());
  const double N = p.antennas;
  const double rho = p.max_power;
  convex::Problem prob;
  prob.dimension = vars.dimension();

  // N * upsilon_m^2 = sum_k power_coeff_i x_i^2 with power_coeff = N w theta_scale^2.
  auto power_coeff = [&](int j, int k) {
    const int i = vars.index(j, k);
    const double s = vars.theta_scale(i);
    return N * p.per_ap_weight(vars.ap(j), k) * s * s;
  };

  for (int k = 0; k < K; ++k) {
    SmoothConstraint c;
    c.kind = SmoothConstraint::Kind::kNorm;
    c.label = "sinr user " + std::to_string(k);
    // sqrt(rho N sum_m beta_mk upsilon_m^2 + rho I_k + 1) <= sqrt(rho) N sum_m theta gamma / sqrt(t)
    double ref = 0.0;
    for (int j = 0; j < vars.num_comm_aps(); ++j) {
      const int m = vars.ap(j);
      for (int kk = 0; kk < K; ++kk) {
        const int i = vars.index(j, kk);
        if (!vars.active(i)) continue;
        const double q = rho * p.beta(m, k) * power_coeff(j, kk);
        c.quadratic.emplace_back(i, q);
        ref += q / K;
      }
      const int i = vars.index(j, k);
      if (vars.active(i)) {
        const double w = std::sqrt(rho) * N * vars.theta_scale(i) * p.gamma(m, k);
        c.linear.emplace_back(i, -w / std::sqrt(p.level));
      }
    }
    c.norm_offset = p.sensing_interference(k) + 1.0;
    c.scale = 1.0 / std::sqrt(ref + c.norm_offset);
    prob.constraints.push_back(std::move(c));
  }

  for (int j = 0; j < vars.num_comm_aps(); ++j) {
    SmoothConstraint c;
    c.kind = SmoothConstraint::Kind::kQuadratic;
    c.label = "power cap ap " + std::to_string(vars.ap(j));
    for (int k = 0; k < K; ++k)
      if (vars.active(vars.index(j, k))) c.quadratic.emplace_back(vars.index(j, k), power_coeff(j, k));
    c.constant = -1.0;
    prob.constraints.push_back(std::move(c));
  }

  if (p.kappa > 0.0) {
    const double budget = p.sensing_total();
    if (!(budget > 0.0)) return std::nullopt;
    SmoothConstraint c;
    c.kind = SmoothConstraint::Kind::kQuadratic;
    c.label = "masr";
    // kappa * sum_m upsilon_m^2 <= budget, normalized by the budget
    for (int j = 0; j < vars.num_comm_aps(); ++j)
      for (int k = 0; k < K; ++k)
        if (vars.active(vars.index(j, k)))
          c.quadratic.emplace_back(vars.index(j, k), p.kappa * power_coeff(j, k) / (N * budget));
    c.constant = -1.0;
    prob.constraints.push_back(std::move(c));
  }

  for (int i = 0; i < vars.dimension(); ++i) {
    if (vars.active(i)) prob.constraints.push_back(SmoothConstraint::affine({{i, -1.0}}, 0.0, "nonneg"));
  }
  return prob;
}

/// Writes the solver form of the subproblem (see convex::write_problem).
inline void dump_comm_problem(std::ostream& out, const CommFeasibilityProblem& p) {
  CommVariableMap vars(p);
  out << "# communication power subproblem, level t = " << p.level << "\n";
  out << "# variable i = j * K + k is sqrt(eta_{m_j k} * N * gamma_{m_j k}), C-APs m_j:";
  for (int j = 0; j < vars.num_comm_aps(); ++j) out << ' ' << vars.ap(j);
  out << "\n";
  if (auto prob = build_comm_constraints(p, vars)) {
    convex::write_problem(out, *prob);
  } else {
    out << "infeasible: positive MASR target with zero sensing power\n";
  }
}

/// Checks a candidate (theta, upsilon) against the subproblem written in its
/// original variables. Independent of the solver's normalized form.
struct CommPointCheck {
  bool ok = true;
  double worst_sinr_ratio = std::numeric_limits<double>::infinity();  // min_k lhs/rhs of the cone
  double worst_cap_excess = 0.0;
  double masr_excess = 0.0;
  double worst_definition_excess = 0.0;
};

inline CommPointCheck check_comm_point(const CommFeasibilityProblem& p, const Eigen::MatrixXd& theta,
                                       const Eigen::VectorXd& upsilon, double tol) {
  CommPointCheck r;
  const int M = p.assignment.size();
  const int K = static_cast<int>(p.beta.cols());
  const double N = p.antennas;
  const double rho = p.max_power;
  for (int k = 0; k < K; ++k) {
    double signal = 0.0;
    double spread = 0.0;
    for (int m = 0; m < M; ++m) {
      if (!p.assignment.communicates(m)) continue;
      signal += theta(m, k) * p.gamma(m, k);
      spread += p.beta(m, k) * upsilon(m) * upsilon(m) / N;
    }
    double sense = 0.0;
    for (int m = 0; m < M; ++m)
      if (!p.assignment.communicates(m)) sense += p.eta_sen(m) * p.beta(m, k);
    const double phi = sense / (N * N) + 1.0 / (rho * N * N);
    const double rhs = std::sqrt(spread + phi);
    const double lhs = signal / std::sqrt(p.level);
    r.worst_sinr_ratio = std::min(r.worst_sinr_ratio, lhs / rhs);
  }
  double comm_power = 0.0;
  for (int m = 0; m < M; ++m) {
    if (!p.assignment.communicates(m)) continue;
    double used = 0.0;
    for (int k = 0; k < K; ++k) {
      used += p.per_ap_weight(m, k) * theta(m, k) * theta(m, k);
      if (theta(m, k) < -tol) r.ok = false;
    }
    r.worst_definition_excess = std::max(r.worst_definition_excess, used - upsilon(m) * upsilon(m));
    r.worst_cap_excess = std::max(r.worst_cap_excess, upsilon(m) * upsilon(m) - 1.0 / N);
    comm_power += upsilon(m) * upsilon(m);
  }
  r.masr_excess = p.kappa * comm_power - p.sensing_total();
  r.ok = r.ok && r.worst_sinr_ratio >= 1.0 - tol && r.worst_cap_excess <= tol / N &&
         r.worst_definition_excess <= tol / N && r.masr_excess <= tol * std::max(1.0, p.sensing_total());
  return r;
}

struct FeasibilityOutcome {
  bool feasible = false;
  bool hit_iteration_limit = false;
  Eigen::MatrixXd eta_com;   // M x K, valid when feasible
  Eigen::MatrixXd theta;
  Eigen::VectorXd upsilon;
  int newton_steps = 0;
};

/// Solves the communication subproblem at p.level. A point is reported
/// feasible only if it also passes check_comm_point.
inline FeasibilityOutcome solve_feasibility(const CommFeasibilityProblem& p, double tol,
                                            int max_iterations,
                                            const Eigen::MatrixXd* warm_eta = nullptr) {
  FeasibilityOutcome out;
  const int M = p.assignment.size();
  const int K = static_cast<int>(p.beta.cols());
  CommVariableMap vars(p);
  if (p.level <= 0.0) {
    // The cone constraints are vacuous; zero power satisfies the rest.
    out.feasible = true;
    out.eta_com = Eigen::MatrixXd::Zero(M, K);
    out.theta = out.eta_com;
    out.upsilon = Eigen::VectorXd::Zero(M);
    return out;
  }
  auto prob = build_comm_constraints(p, vars);
  if (!prob) return out;

  Eigen::VectorXd start;
  if (warm_eta) start = vars.to_solver(*warm_eta);
  else start = Eigen::VectorXd::Constant(vars.dimension(), 1.0 / std::sqrt(static_cast<double>(K)));

  convex::Options opt;
  opt.tolerance = tol;
  opt.max_newton_steps = max_iterations;
  const auto res = convex::solve_feasibility(*prob, start, opt);
  out.newton_steps = res.newton_steps;
  out.hit_iteration_limit = res.status == convex::Status::kIterationLimit;
  if (!res.feasible()) return out;

  out.eta_com = vars.to_eta(res.point, M);
  out.theta = out.eta_com.cwiseSqrt();
  out.upsilon = Eigen::VectorXd::Zero(M);
  for (int m = 0; m < M; ++m) {
    if (!p.assignment.communicates(m)) continue;
    double used = 0.0;
    for (int k = 0; k < K; ++k) used += p.per_ap_weight(m, k) * out.eta_com(m, k);
    out.upsilon(m) = std::sqrt(used);
  }
  out.feasible = check_comm_point(p, out.theta, out.upsilon, 1e-9).ok;
  return out;
}

// ---------------------------------------------------------------------------
// Bisection for the communication coefficients.
// ---------------------------------------------------------------------------

struct BisectionResult {
  double t_star = 0.0;         // lower end of the final bracket
  double achieved_min_sinr = 0.0;
  PowerAllocation allocation;
  int iterations = 0;          // feasibility solves
  bool feasible = false;       // some positive SINR level was certified
  bool hit_iteration_limit = false;
  double t_lower = 0.0;        // initial lower end of the bracket
  double t_upper = 0.0;        // initial upper end of the bracket
};

/// Provable upper bound on the max-min SINR: user k alone at every C-AP's cap,
/// with no inter-user interference.
inline double comm_sinr_upper_bound(const CommFeasibilityProblem& p) {
  const int K = static_cast<int>(p.beta.cols());
  const double N = p.antennas;
  double bound = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    double amplitude = 0.0;
    for (int m = 0; m < p.assignment.size(); ++m) {
      if (!p.assignment.communicates(m) || !(p.gamma(m, k) > 0.0)) continue;
      // max theta * gamma subject to w theta^2 <= 1/N
      amplitude += p.gamma(m, k) / std::sqrt(N * p.per_ap_weight(m, k));
    }
    const double value = p.max_power * N * N * amplitude * amplitude / (p.sensing_interference(k) + 1.0);
    bound = std::min(bound, value);
  }
  return bound;
}

/// Full-power communication coefficients, scaled by a common factor so that
/// the MASR target holds against the given sensing coefficients.
inline Eigen::MatrixXd scaled_full_power(const NetworkRealization& net, const ModeAssignment& a,
                                         const Eigen::VectorXd& eta_sen, const SystemConfig& cfg) {
  const int M = net.num_aps();
  const double N = cfg.antennas_per_ap;
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(M, net.num_users());
  double load = 0.0;
  double budget = 0.0;
  for (int m = 0; m < M; ++m) {
    if (!a.communicates(m)) {
      budget += eta_sen(m);
      continue;
    }
    const double total = net.gamma.row(m).sum();
    if (!(total > 0.0)) continue;
    eta.row(m).setConstant(1.0 / (N * total));
    load += 1.0 / N;
  }
  const double need = cfg.masr_target * load;
  if (need > budget) eta *= need > 0.0 ? budget / need : 0.0;
  return eta;
}

/// Max-min SINR over the communication coefficients with the sensing
/// coefficients fixed. `warm` (optional) must be feasible for the subproblem;
/// its min SINR then seeds the lower end of the bracket.
inline BisectionResult bisect_com_powers(const NetworkRealization& net, const ModeAssignment& a,
                                         const Eigen::VectorXd& eta_sen, const SystemConfig& cfg,
                                         const PowerAllocation* warm = nullptr) {
  if (a.size() != net.num_aps() || eta_sen.size() != net.num_aps())
    throw std::invalid_argument("bisect_com_powers: dimension mismatch");
  if (a.num_communication() == 0) throw std::invalid_argument("bisect_com_powers: no C-AP");
  for (int m = 0; m < a.size(); ++m)
    if (eta_sen(m) < 0.0 || eta_sen(m) > 1.0 - a.flag(m) + 1e-12)
      throw std::invalid_argument("bisect_com_powers: sensing coefficients violate their caps");

  auto problem = make_comm_problem(net, a, eta_sen, 0.0, cfg);
  BisectionResult res;
  res.allocation = PowerAllocation::zeros(net.num_aps(), net.num_users());
  for (int m = 0; m < a.size(); ++m)
    if (!a.communicates(m)) res.allocation.sense(m) = eta_sen(m);

  double lo = 0.0;
  double hi = comm_sinr_upper_bound(problem);
  res.t_upper = hi;
  Eigen::MatrixXd best_eta = Eigen::MatrixXd::Zero(net.num_aps(), net.num_users());
  auto consider = [&](const Eigen::MatrixXd& eta) {
    const double t0 = min_sinr(net, a, PowerAllocation{eta, eta_sen}, cfg);
    if (t0 > lo) {
      lo = std::min(t0, hi);
      best_eta = eta;
      res.feasible = true;
    }
  };
  // Full power scaled down until the MASR budget holds is always feasible.
  consider(scaled_full_power(net, a, eta_sen, cfg));
  if (warm) consider(warm->comm);
  res.t_lower = lo;
  // The tolerance is relative to a certified level, so the final bracket is
  // tight relative to the optimum as well.
  const double eps = cfg.bisection_tolerance * (lo > 0.0 ? lo : hi);

  while (hi - lo >= eps) {
    const double t = 0.5 * (lo + hi);
    problem.level = t;
    const auto out = solve_feasibility(problem, cfg.solver_tolerance, cfg.solver_max_iterations,
                                       res.feasible ? &best_eta : nullptr);
    ++res.iterations;
    res.hit_iteration_limit = res.hit_iteration_limit || out.hit_iteration_limit;
    if (out.feasible) {
      lo = t;
      best_eta = out.eta_com;
      res.feasible = true;
    } else {
      hi = t;
    }
  }

  res.t_star = lo;
  res.allocation.comm = best_eta;
  res.achieved_min_sinr = min_sinr(net, a, res.allocation, cfg);
  res.feasible = res.feasible && res.t_star > 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Sensing coefficients with the communication coefficients fixed.
// ---------------------------------------------------------------------------

struct SensingPowerResult {
  Eigen::VectorXd eta_sen;     // length M, zero on C-APs
  double rho_star = 0.0;       // min SINR at eta_sen
  bool feasible = false;
  int iterations = 0;
};

/// Line search over the SINR level rho. At fixed rho every constraint is
/// linear in the sensing coefficients:
///   rho_scale sum_s eta_s beta_sk <= S_k / rho - D_k        (each user)
///   sum_s eta_s >= kappa * sum_m a_m sum_k eta_mk gamma_mk  (MASR)
///   0 <= eta_s <= 1
/// where S_k and D_k are the signal and non-sensing denominator of the SINR.
inline SensingPowerResult optimize_sen_powers(const NetworkRealization& net, const ModeAssignment& a,
                                              const Eigen::MatrixXd& eta_com, const SystemConfig& cfg,
                                              const Eigen::VectorXd* warm = nullptr) {
  using convex::SmoothConstraint;
  const int M = net.num_aps();
  const int K = net.num_users();
  if (a.size() != M || eta_com.rows() != M || eta_com.cols() != K)
    throw std::invalid_argument("optimize_sen_powers: dimension mismatch");

  const double rho = cfg.max_power;
  const double N = cfg.antennas_per_ap;
  std::vector<int> sensors;
  for (int m = 0; m < M; ++m)
    if (!a.communicates(m)) sensors.push_back(m);
  const int S = static_cast<int>(sensors.size());

  PowerAllocation alloc{eta_com, Eigen::VectorXd::Zero(M)};
  for (int m = 0; m < M; ++m)
    if (!a.communicates(m)) alloc.comm.row(m).setZero();
  const double comm_term = comm_load(net, a, alloc).sum();
  const double required = cfg.masr_target * comm_term;

  SensingPowerResult res;
  res.eta_sen = Eigen::VectorXd::Zero(M);
  if (required > S * (1.0 + 1e-12)) {
    if (warm) res.eta_sen = *warm;
    return res;
  }

  Eigen::VectorXd signal(K), base(K);
  for (int k = 0; k < K; ++k) {
    double coherent = 0.0;
    double interference = 0.0;
    for (int m = 0; m < M; ++m) {
      if (!a.communicates(m)) continue;
      coherent += std::sqrt(eta_com(m, k)) * net.gamma(m, k);
      interference += eta_com.row(m).dot(net.gamma.row(m)) * net.beta(m, k);
    }
    signal(k) = rho * N * N * coherent * coherent;
    base(k) = rho * N * interference + 1.0;
  }

  auto finish = [&](Eigen::VectorXd y) {
    // Excess sensing power only adds interference: trim to the MASR minimum.
    const double total = y.sum();
    if (required > 0.0 && total > required) y *= required / total;
    if (required <= 0.0) y.setZero();
    for (int s = 0; s < S; ++s) res.eta_sen(sensors[s]) = std::clamp(y(s), 0.0, 1.0);
    alloc.sense = res.eta_sen;
    res.rho_star = min_sinr(net, a, alloc, cfg);
    res.feasible = true;
    return res;
  };

  if (S == 0 || required <= 0.0) return finish(Eigen::VectorXd::Zero(S));

  if (signal.minCoeff() <= 0.0) {
    // Some user gets no signal whatever the sensing powers are.
    return finish(Eigen::VectorXd::Constant(S, required / S));
  }

  double hi = (signal.array() / base.array()).minCoeff();
  Eigen::VectorXd best = Eigen::VectorXd::Constant(S, required / S);
  double lo = 0.0;
  {
    PowerAllocation trial{alloc.comm, Eigen::VectorXd::Zero(M)};
    for (int s = 0; s < S; ++s) trial.sense(sensors[s]) = best(s);
    lo = std::min(min_sinr(net, a, trial, cfg), hi);
  }
  if (warm) {
    Eigen::VectorXd w(S);
    for (int s = 0; s < S; ++s) w(s) = (*warm)(sensors[s]);
    if (w.sum() >= required * (1.0 - 1e-12) && w.minCoeff() >= 0.0 && w.maxCoeff() <= 1.0) {
      PowerAllocation trial{alloc.comm, Eigen::VectorXd::Zero(M)};
      for (int s = 0; s < S; ++s) trial.sense(sensors[s]) = w(s);
      const double value = std::min(min_sinr(net, a, trial, cfg), hi);
      if (value > lo) {
        lo = value;
        best = w;
      }
    }
  }
  const double eps = cfg.bisection_tolerance * (lo > 0.0 ? lo : hi);

  while (hi - lo >= eps) {
    const double level = 0.5 * (lo + hi);
    ++res.iterations;
    convex::Problem prob;
    prob.dimension = S;
    bool trivially_infeasible = false;
    for (int k = 0; k < K; ++k) {
      const double room = signal(k) / level - base(k);
      if (room < 0.0) {
        trivially_infeasible = true;
        break;
      }
      std::vector<std::pair<int, double>> coeffs;
      for (int s = 0; s < S; ++s) coeffs.emplace_back(s, rho * net.beta(sensors[s], k));
      auto c = SmoothConstraint::affine(std::move(coeffs), -room, "sinr user " + std::to_string(k));
      c.scale = 1.0 / (signal(k) / level);
      prob.constraints.push_back(std::move(c));
    }
    if (trivially_infeasible) {
      hi = level;
      continue;
    }
    {
      std::vector<std::pair<int, double>> coeffs;
      for (int s = 0; s < S; ++s) coeffs.emplace_back(s, -1.0 / required);
      prob.constraints.push_back(SmoothConstraint::affine(std::move(coeffs), 1.0, "masr"));
    }
    for (int s = 0; s < S; ++s) {
      prob.constraints.push_back(SmoothConstraint::affine({{s, 1.0}}, -1.0, "cap"));
      prob.constraints.push_back(SmoothConstraint::affine({{s, -1.0}}, 0.0, "nonneg"));
    }
    convex::Options opt;
    opt.tolerance = cfg.solver_tolerance;
    opt.max_newton_steps = cfg.solver_max_iterations;
    const auto out = convex::solve_feasibility(prob, best, opt);
    if (out.feasible()) {
      lo = level;
      best = out.point;
    } else {
      hi = level;
    }
  }
  return finish(best);
}

// ---------------------------------------------------------------------------
// Alternating optimization.
// ---------------------------------------------------------------------------

struct AoResult {
  PowerAllocation allocation;
  std::vector<double> trace;   // min SINR after initialization and after each outer iteration
  int iterations = 0;
  bool feasible = false;
  bool hit_iteration_limit = false;
};

/// Starts from the full-power allocation and alternates the two subproblems
/// until the relative min-SINR gain drops below ao_tolerance. Assignments
/// without a C-AP, or whose full-power point misses the MASR target, are
/// returned at full power and flagged infeasible.
inline AoResult alternating_optimization(const NetworkRealization& net, const ModeAssignment& a,
                                         const SystemConfig& cfg) {
  AoResult res;
  res.allocation = npc_allocation(net, a, cfg);
  if (a.num_communication() == 0 ||
      !meets_masr(masr(net, a, res.allocation, cfg), cfg.masr_target)) {
    res.trace.push_back(a.num_communication() ? min_sinr(net, a, res.allocation, cfg) : 0.0);
    return res;
  }
  res.feasible = true;
  double current = min_sinr(net, a, res.allocation, cfg);
  res.trace.push_back(current);

  for (int it = 0; it < cfg.ao_max_iterations; ++it) {
    ++res.iterations;
    PowerAllocation next = res.allocation;

    const auto com = bisect_com_powers(net, a, next.sense, cfg, &next);
    res.hit_iteration_limit = res.hit_iteration_limit || com.hit_iteration_limit;
    if (com.feasible && com.achieved_min_sinr >= current) next.comm = com.allocation.comm;

    const auto sen = optimize_sen_powers(net, a, next.comm, cfg, &next.sense);
    if (sen.feasible) {
      PowerAllocation candidate{next.comm, sen.eta_sen};
      if (min_sinr(net, a, candidate, cfg) >= min_sinr(net, a, next, cfg)) next.sense = sen.eta_sen;
    }

    const double value = min_sinr(net, a, next, cfg);
    if (value >= current) res.allocation = next;
    const double previous = current;
    current = std::max(current, value);
    res.trace.push_back(current);
    if (current - previous < cfg.ao_tolerance * std::max(previous, 1e-300)) break;
  }
  return res;
}

}  // namespace isac
