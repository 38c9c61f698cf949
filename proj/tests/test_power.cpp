#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "grid_oracle.hpp"
#include "isac/metrics.hpp"
#include "isac/power.hpp"
#include "isac/random.hpp"
#include "isac/topology.hpp"
#include "support.hpp"

using namespace isac;
using isac::testing::drop_config;
using isac::testing::make_network;
using isac::testing::small_config;

namespace {

// Single C-AP serving one user at effective power eg = eta * gamma, with a
// sensing AP contributing interference eta_s * beta_s.
double single_link_sinr(double rho, int N, double gamma, double beta, double eg, double sense_interf) {
  return rho * N * N * (eg / gamma) * gamma * gamma / (rho * N * eg * beta + rho * sense_interf + 1.0);
}

Eigen::MatrixXd mat(int r, int c, std::initializer_list<double> v) {
  Eigen::MatrixXd m(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

}  // namespace

TEST(Npc, EqualCoefficientsAtTheCap) {
  const auto net = make_network(mat(2, 2, {1.0, 1.0, 1.0, 1.0}), mat(2, 2, {0.5, 0.5, 0.3, 0.2}), 2);
  const auto cfg = small_config(2, 2, 2, 1.0);
  const ModeAssignment a(std::vector<std::uint8_t>{1, 0});
  const auto p = npc_allocation(net, a, cfg);
  EXPECT_DOUBLE_EQ(p.comm(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p.comm(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(p.comm(0, 0) * 0.5 + p.comm(0, 1) * 0.5, 0.5);
  EXPECT_EQ(p.comm.row(1).norm(), 0.0);
  EXPECT_EQ(p.sense(0), 0.0);
  EXPECT_EQ(p.sense(1), 1.0);
  EXPECT_NEAR(per_ap_slacks(net, a, p, cfg).minCoeff(), 0.0, 1e-15);
}

TEST(Npc, AllSensingAndDegenerateChannels) {
  const auto net = make_network(mat(2, 1, {1.0, 1.0}), mat(2, 1, {0.0, 0.4}), 3);
  const auto cfg = small_config(2, 3, 1, 1.0);
  const auto p = npc_allocation(net, ModeAssignment::all_sensing(2), cfg);
  EXPECT_EQ(p.comm.norm(), 0.0);
  EXPECT_EQ(p.sense.sum(), 2.0);
  EXPECT_THROW(npc_allocation(net, ModeAssignment::all_communication(2), cfg), std::domain_error);
}

TEST(CommFeasibility, ZeroLevelIsTriviallyFeasible) {
  const auto net = make_network(mat(2, 2, {1, 2, 3, 4}), mat(2, 2, {0.5, 1, 1, 2}), 2);
  const auto cfg = small_config(2, 2, 2, 10.0, 0.0);
  const auto prob = make_comm_problem(net, ModeAssignment::all_communication(2), Eigen::VectorXd::Zero(2), 0.0, cfg);
  EXPECT_TRUE(solve_feasibility(prob, 1e-8, 1000).feasible);
}

TEST(CommFeasibility, SingleLinkThreshold) {
  const double rho = 10.0, gamma = 0.5, beta = 1.0;
  const int N = 2;
  const auto net = make_network(mat(2, 1, {beta, 0.3}), mat(2, 1, {gamma, 0.2}), N);
  const auto cfg = small_config(2, N, 1, rho, 0.0);
  const ModeAssignment a(std::vector<std::uint8_t>{1, 0});
  for (double sense : {0.0, 0.6}) {
    Eigen::VectorXd eta_sen(2);
    eta_sen << 0.0, sense;
    const double t_star = single_link_sinr(rho, N, gamma, beta, 1.0 / N, sense * 0.3);
    auto prob = make_comm_problem(net, a, eta_sen, 0.999 * t_star, cfg);
    EXPECT_TRUE(solve_feasibility(prob, 1e-8, 100000).feasible);
    prob.level = 1.001 * t_star;
    EXPECT_FALSE(solve_feasibility(prob, 1e-8, 100000).feasible);
  }
}

TEST(CommFeasibility, SensingBudgetLimitsCommunicationPower) {
  // kappa * eta * gamma <= eta_s caps the effective power at eta_s / kappa.
  const double rho = 10.0, gamma = 0.5, beta = 1.0, sense = 0.2, kappa = 2.0;
  const int N = 2;
  const auto net = make_network(mat(2, 1, {beta, 0.3}), mat(2, 1, {gamma, 0.2}), N);
  const auto cfg = small_config(2, N, 1, rho, kappa);
  const ModeAssignment a(std::vector<std::uint8_t>{1, 0});
  Eigen::VectorXd eta_sen(2);
  eta_sen << 0.0, sense;
  const double t_star = single_link_sinr(rho, N, gamma, beta, sense / kappa, sense * 0.3);
  ASSERT_LT(t_star, single_link_sinr(rho, N, gamma, beta, 1.0 / N, sense * 0.3));
  auto prob = make_comm_problem(net, a, eta_sen, 0.999 * t_star, cfg);
  EXPECT_TRUE(solve_feasibility(prob, 1e-8, 100000).feasible);
  prob.level = 1.001 * t_star;
  EXPECT_FALSE(solve_feasibility(prob, 1e-8, 100000).feasible);
  // No sensing power at all: nothing positive is reachable.
  prob.eta_sen.setZero();
  prob.level = 1e-6 * t_star;
  EXPECT_FALSE(solve_feasibility(prob, 1e-8, 100000).feasible);
}

TEST(CommFeasibility, CheckerUsesOriginalVariables) {
  const auto net = make_network(mat(1, 1, {1.0}), mat(1, 1, {0.5}), 2);
  const auto cfg = small_config(1, 2, 1, 10.0, 0.0);
  const auto prob = make_comm_problem(net, ModeAssignment::all_communication(1), Eigen::VectorXd::Zero(1), 0.5, cfg);
  Eigen::MatrixXd theta(1, 1);
  theta << 1.0;  // eta = 1, eta * gamma = 0.5 = 1/N
  Eigen::VectorXd ups(1);
  ups << std::sqrt(0.5);
  EXPECT_TRUE(check_comm_point(prob, theta, ups, 1e-9).ok);
  ups << std::sqrt(0.6);  // above the cap
  EXPECT_FALSE(check_comm_point(prob, theta, ups, 1e-9).ok);
  ups << std::sqrt(0.4);  // below the AP's actual power
  EXPECT_FALSE(check_comm_point(prob, theta, ups, 1e-9).ok);
  auto high = prob;
  high.level = 10.0 / 11.0 * 1.01;
  ups << std::sqrt(0.5);
  EXPECT_FALSE(check_comm_point(high, theta, ups, 1e-9).ok);
}

TEST(CommFeasibility, DeclaredPointsPassTheCheckerOnRandomDrops) {
  auto cfg = drop_config(8, 2, 3, 3.0);
  for (int s = 0; s < 10; ++s) {
    const auto net = place_network(cfg, Rng(s));
    ModeAssignment a(8);
    for (int m = 0; m < 8; m += 2) a.set_communication(m, true);
    const auto npc = npc_allocation(net, a, cfg);
    const double t0 = min_sinr(net, a, npc, cfg);
    auto prob = make_comm_problem(net, a, npc.sense, t0, cfg);
    for (double f : {0.5, 1.0, 1.5, 3.0}) {
      prob.level = f * t0;
      const auto out = solve_feasibility(prob, 1e-8, 100000);
      if (!out.feasible) continue;
      EXPECT_TRUE(check_comm_point(prob, out.theta, out.upsilon, 1e-9).ok);
      PowerAllocation p{out.eta_com, npc.sense};
      EXPECT_GE(min_sinr(net, a, p, cfg), prob.level * (1 - 1e-8));
      EXPECT_TRUE(audit_allocation(net, a, p, cfg).ok());
    }
  }
}

TEST(CommFeasibility, LiteralPerApFormBoundsThetaSquared) {
  // With the printed form upsilon^2 >= theta^2 and upsilon^2 <= 1/N, and
  // upsilon^2 stands in for the AP power in the interference term.
  const double rho = 10.0, gamma = 0.5, beta = 1.0;
  const int N = 2;
  const auto net = make_network(mat(1, 1, {beta}), mat(1, 1, {gamma}), N);
  auto cfg = small_config(1, N, 1, rho, 0.0);
  cfg.literal_per_ap_constraint = true;
  const double theta2 = 1.0 / N;
  const double t_literal = rho * N * N * theta2 * gamma * gamma / (rho * N * beta * theta2 + 1.0);
  EXPECT_NEAR(t_literal, 5.0 / 11.0, 1e-15);
  auto prob = make_comm_problem(net, ModeAssignment::all_communication(1), Eigen::VectorXd::Zero(1), 0.999 * t_literal, cfg);
  EXPECT_TRUE(solve_feasibility(prob, 1e-8, 100000).feasible);
  prob.level = 1.001 * t_literal;
  EXPECT_FALSE(solve_feasibility(prob, 1e-8, 100000).feasible);
}

TEST(CommFeasibility, DumpListsEveryConstraint) {
  const auto net = make_network(mat(3, 2, {1, 2, 3, 4, 5, 6}), mat(3, 2, {0.5, 1, 1, 2, 2, 3}), 2);
  const auto cfg = small_config(3, 2, 2, 10.0, 1.0);
  const ModeAssignment a(std::vector<std::uint8_t>{1, 1, 0});
  Eigen::VectorXd eta_sen(3);
  eta_sen << 0, 0, 1;
  std::ostringstream out;
  dump_comm_problem(out, make_comm_problem(net, a, eta_sen, 0.5, cfg));
  const std::string text = out.str();
  EXPECT_NE(text.find("dimension 4"), std::string::npos);
  EXPECT_NE(text.find("constraints 9"), std::string::npos);  // 2 cones, 2 caps, masr, 4 signs
  EXPECT_NE(text.find("# sinr user 1"), std::string::npos);
  EXPECT_NE(text.find("# power cap ap 1"), std::string::npos);
  EXPECT_NE(text.find("# masr"), std::string::npos);
}

TEST(Bisection, SingleLinkOptimum) {
  const double rho = 10.0, gamma = 0.5, beta = 1.0;
  const auto net = make_network(mat(1, 1, {beta}), mat(1, 1, {gamma}), 2);
  const auto cfg = small_config(1, 2, 1, rho, 0.0);
  const auto res = bisect_com_powers(net, ModeAssignment::all_communication(1), Eigen::VectorXd::Zero(1), cfg);
  const double opt = 10.0 / 11.0;
  EXPECT_TRUE(res.feasible);
  EXPECT_LE(res.t_star, opt);
  EXPECT_GE(res.t_star, opt - cfg.bisection_tolerance * res.t_upper);
  EXPECT_GE(res.achieved_min_sinr, res.t_star);
  EXPECT_LT(res.t_upper - res.t_star, res.t_upper);
}

TEST(Bisection, IterationCountIsLogOfBracket) {
  // All APs communicate and kappa = 0: the bracket runs from the full-power
  // min SINR to min_k rho N (sum_m sqrt(gamma_mk))^2.
  auto cfg = drop_config(6, 2, 2, 0.0);
  const auto net = place_network(cfg, Rng(4));
  const ModeAssignment a = ModeAssignment::all_communication(6);
  const double lo = min_sinr(net, a, npc_allocation(net, a, cfg), cfg);
  double hi = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    double amp = 0.0;
    for (int m = 0; m < 6; ++m) amp += std::sqrt(net.gamma(m, k));
    hi = std::min(hi, cfg.max_power * 2 * amp * amp);
  }
  for (double tol : {1e-2, 1e-3, 3e-4}) {
    cfg.bisection_tolerance = tol;
    const auto res = bisect_com_powers(net, a, Eigen::VectorXd::Zero(6), cfg);
    EXPECT_NEAR(res.t_lower / lo, 1.0, 1e-12);
    EXPECT_NEAR(res.t_upper / hi, 1.0, 1e-12);
    EXPECT_EQ(res.iterations, static_cast<int>(std::ceil(std::log2((hi - lo) / (tol * lo)))));
  }
}

TEST(Bisection, UpperBoundIsNeverExceeded) {
  auto cfg = drop_config(6, 2, 3, 2.0);
  for (int s = 0; s < 10; ++s) {
    const auto net = place_network(cfg, Rng(100 + s));
    ModeAssignment a(6);
    a.set_communication(s % 6, true);
    a.set_communication((s + 3) % 6, true);
    const auto npc = npc_allocation(net, a, cfg);
    const auto res = bisect_com_powers(net, a, npc.sense, cfg);
    EXPECT_LE(res.achieved_min_sinr, res.t_upper);
    EXPECT_GE(res.achieved_min_sinr, res.t_star * (1 - 1e-9));
    EXPECT_TRUE(audit_allocation(net, a, res.allocation, cfg).ok());
  }
}

TEST(Bisection, HugeMasrTargetDrivesLevelToZero) {
  const auto net = make_network(mat(2, 1, {1.0, 1.0}), mat(2, 1, {0.5, 0.5}), 2);
  const auto cfg = small_config(2, 2, 1, 10.0, 1e12);
  const ModeAssignment a(std::vector<std::uint8_t>{1, 0});
  Eigen::VectorXd eta_sen(2);
  eta_sen << 0.0, 1.0;
  const auto res = bisect_com_powers(net, a, eta_sen, cfg);
  EXPECT_LT(res.t_star, 1e-9);
  EXPECT_LE(res.achieved_min_sinr, single_link_sinr(10.0, 2, 0.5, 1.0, 1e-12, 1.0) * (1 + 1e-6));
}

TEST(Bisection, RejectsBadInputs) {
  const auto net = make_network(mat(2, 1, {1.0, 1.0}), mat(2, 1, {0.5, 0.5}), 2);
  const auto cfg = small_config(2, 2, 1, 10.0, 0.0);
  EXPECT_THROW(bisect_com_powers(net, ModeAssignment::all_sensing(2), Eigen::VectorXd::Zero(2), cfg),
               std::invalid_argument);
  Eigen::VectorXd bad(2);
  bad << 0.5, 0.0;  // sensing power on a C-AP
  EXPECT_THROW(bisect_com_powers(net, ModeAssignment::all_communication(2), bad, cfg), std::invalid_argument);
}

TEST(Bisection, MatchesGridSearchOnSmallInstances) {
  Rng rng(31);
  for (int t = 0; t < 4; ++t) {
    const int N = 2;
    Eigen::MatrixXd beta(3, 2), gamma(3, 2);
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 2; ++k) {
        beta(m, k) = std::pow(10.0, rng.uniform(-1.0, 0.0));
        gamma(m, k) = beta(m, k) * rng.uniform(0.3, 0.9);
      }
    const auto net = make_network(beta, gamma, N);
    isac::testing::GridProblem gp{beta, gamma, {1, 1, 1}, Eigen::VectorXd::Zero(3), 20.0, N, 0.0};
    ModeAssignment a = ModeAssignment::all_communication(3);
    auto cfg = small_config(3, N, 2, 20.0, 0.0);
    if (t % 2 == 1) {
      gp.comm = {1, 1, 0};
      gp.eta_sen << 0, 0, 1;
      gp.kappa = N;
      a.set_communication(2, false);
      cfg.masr_target = N;
    }
    const auto res = bisect_com_powers(net, a, gp.eta_sen, cfg);
    const double grid = isac::testing::GridOracle(gp).solve(9);
    EXPECT_NEAR(res.t_star / grid, 1.0, 0.05) << "instance " << t;
  }
}

TEST(SensingPowers, ZeroTargetMeansNoSensingPower) {
  auto cfg = drop_config(6, 2, 2, 0.0);
  const auto net = place_network(cfg, Rng(2));
  ModeAssignment a(std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1});
  const auto npc = npc_allocation(net, a, cfg);
  const auto res = optimize_sen_powers(net, a, npc.comm, cfg);
  EXPECT_TRUE(res.feasible);
  EXPECT_EQ(res.eta_sen.norm(), 0.0);
  EXPECT_DOUBLE_EQ(res.rho_star, min_sinr(net, a, PowerAllocation{npc.comm, Eigen::VectorXd::Zero(6)}, cfg));
}

TEST(SensingPowers, SingleSensingApClosedForm) {
  const double rho = 10.0;
  const auto net = make_network(mat(2, 1, {1.0, 0.4}), mat(2, 1, {0.5, 0.3}), 2);
  const ModeAssignment a(std::vector<std::uint8_t>{1, 0});
  Eigen::MatrixXd eta_com(2, 1);
  eta_com << 0.8, 0.0;  // eta * gamma = 0.4
  for (double kappa : {0.5, 2.0}) {
    const auto cfg = small_config(2, 2, 1, rho, kappa);
    const auto res = optimize_sen_powers(net, a, eta_com, cfg);
    const double eta = kappa * 0.4;
    ASSERT_TRUE(res.feasible);
    EXPECT_NEAR(res.eta_sen(1), eta, 1e-12);
    EXPECT_NEAR(res.rho_star, single_link_sinr(rho, 2, 0.5, 1.0, 0.4, eta * 0.4), 1e-9);
  }
  const auto cfg = small_config(2, 2, 1, rho, 3.0);  // needs 1.2 > 1
  EXPECT_FALSE(optimize_sen_powers(net, a, eta_com, cfg).feasible);
}

TEST(SensingPowers, EqualChannelsGiveValueAtMinimalTotal) {
  const double rho = 5.0, kappa = 1.5;
  const auto net = make_network(mat(3, 2, {1.0, 0.8, 0.5, 0.5, 0.5, 0.5}),
                                mat(3, 2, {0.6, 0.4, 0.2, 0.2, 0.2, 0.2}), 2);
  const ModeAssignment a(std::vector<std::uint8_t>{1, 0, 0});
  const auto cfg = small_config(3, 2, 2, rho, kappa);
  Eigen::MatrixXd eta_com = Eigen::MatrixXd::Zero(3, 2);
  eta_com(0, 0) = 0.4;
  eta_com(0, 1) = 0.5;  // load 0.24 + 0.2 = 0.44
  const auto res = optimize_sen_powers(net, a, eta_com, cfg);
  ASSERT_TRUE(res.feasible);
  EXPECT_NEAR(res.eta_sen(1) + res.eta_sen(2), kappa * 0.44, 1e-9);
  PowerAllocation split{eta_com, Eigen::VectorXd::Zero(3)};
  split.sense(1) = kappa * 0.44;
  EXPECT_NEAR(res.rho_star, min_sinr(net, a, split, cfg), 1e-9 * res.rho_star);
}

TEST(SensingPowers, BestSplitMatchesOneDimensionalSearch) {
  // Two sensing APs with different channels: the optimum spends exactly the
  // MASR minimum, so scanning its split is exhaustive.
  Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    Eigen::MatrixXd beta(3, 2), gamma(3, 2);
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 2; ++k) {
        beta(m, k) = rng.uniform(0.1, 1.0);
        gamma(m, k) = beta(m, k) * rng.uniform(0.3, 0.9);
      }
    const auto net = make_network(beta, gamma, 2);
    const ModeAssignment a(std::vector<std::uint8_t>{1, 0, 0});
    const auto cfg = small_config(3, 2, 2, 20.0, 1.0);
    const auto npc = npc_allocation(net, a, cfg);
    const double required = cfg.masr_target * comm_load(net, a, npc).sum();
    double best = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double u = required * i / 20000.0;
      if (u > 1.0 || required - u > 1.0) continue;
      PowerAllocation p{npc.comm, Eigen::VectorXd::Zero(3)};
      p.sense << 0, u, required - u;
      best = std::max(best, min_sinr(net, a, p, cfg));
    }
    const auto res = optimize_sen_powers(net, a, npc.comm, cfg);
    ASSERT_TRUE(res.feasible);
    EXPECT_GE(res.rho_star, best * (1 - 2e-3)) << t;
    EXPECT_LE(res.rho_star, best * (1 + 1e-6)) << t;
    PowerAllocation p{npc.comm, res.eta_sen};
    EXPECT_TRUE(meets_masr(masr(net, a, p, cfg), cfg.masr_target, 1e-9));
  }
}

TEST(Ao, DecoupledCaseEqualsPureMaxMin) {
  auto cfg = drop_config(5, 2, 3, 0.0);
  const auto net = place_network(cfg, Rng(6));
  const auto a = ModeAssignment::all_communication(5);
  const auto ao = alternating_optimization(net, a, cfg);
  const auto direct = bisect_com_powers(net, a, Eigen::VectorXd::Zero(5), cfg);
  ASSERT_TRUE(ao.feasible);
  EXPECT_NEAR(ao.trace.back() / direct.achieved_min_sinr, 1.0, 2 * cfg.bisection_tolerance);
}

TEST(Ao, MonotoneTraceAndFeasibleAllocations) {
  auto cfg = drop_config(10, 2, 3, 5.0);
  int optimized = 0;
  for (int s = 0; s < 10; ++s) {
    const auto net = place_network(cfg, Rng(500 + s));
    ModeAssignment a(10);
    for (int m = 0; m < 10; ++m) a.set_communication(m, m % 5 == s % 5);
    const auto ao = alternating_optimization(net, a, cfg);
    for (std::size_t i = 1; i < ao.trace.size(); ++i) EXPECT_GE(ao.trace[i], ao.trace[i - 1] - 1e-6);
    if (!ao.feasible) continue;
    ++optimized;
    const auto audit = audit_allocation(net, a, ao.allocation, cfg, 1e-6);
    EXPECT_TRUE(audit.ok()) << s;
    EXPECT_NEAR(ao.trace.back(), min_sinr(net, a, ao.allocation, cfg), 1e-9 * ao.trace.back());
    const auto npc = npc_allocation(net, a, cfg);
    EXPECT_GE(ao.trace.back(), min_sinr(net, a, npc, cfg));
  }
  EXPECT_EQ(optimized, 10);
}

TEST(Ao, FlagsInfeasibleStarts) {
  auto cfg = drop_config(4, 2, 2, 1e6);
  const auto net = place_network(cfg, Rng(1));
  const auto none = alternating_optimization(net, ModeAssignment::all_sensing(4), cfg);
  EXPECT_FALSE(none.feasible);
  const auto tight = alternating_optimization(net, ModeAssignment(std::vector<std::uint8_t>{1, 0, 0, 0}), cfg);
  EXPECT_FALSE(tight.feasible);
}
