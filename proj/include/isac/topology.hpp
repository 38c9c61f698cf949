#pragma once

// Network geometry and large-scale fading for one random drop.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "isac/config.hpp"
#include "isac/random.hpp"

namespace isac {

struct Point2 {
  double x_km = 0.0;
  double y_km = 0.0;
};

/// Departure angles from an AP towards the target. The elevation is the
/// polar angle between the vertical axis and the AP-target ray.
struct TargetAngles {
  double azimuth = 0.0;
  double elevation = 0.0;
};

/// One random drop. beta and gamma are M x K_d, rows indexed by AP.
struct NetworkRealization {
  std::vector<Point2> ap_positions;
  std::vector<Point2> user_positions;
  Eigen::MatrixXd distance_km;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd gamma;
  std::vector<TargetAngles> target_angles;
  int antennas_per_ap = 1;
  double antenna_spacing = 0.5;

  int num_aps() const { return static_cast<int>(beta.rows()); }
  int num_users() const { return static_cast<int>(beta.cols()); }
};

/// Signed per-axis displacement b - a on a torus of the given side, folded
/// into [-side/2, side/2].
inline Point2 torus_offset(Point2 a, Point2 b, double side) {
  auto fold = [side](double d) { return d - side * std::round(d / side); };
  return {fold(b.x_km - a.x_km), fold(b.y_km - a.y_km)};
}

/// Planar distance with wrap-around: the shortest of the nine image
/// distances, reached by folding each axis independently.
inline double torus_distance(Point2 a, Point2 b, double side) {
  const auto d = torus_offset(a, b, side);
  return std::hypot(d.x_km, d.y_km);
}

/// Three-slope path loss in dB (negative numbers), evaluated exactly as the
/// piecewise formula is written; it is not continuous at d1.
inline double path_loss_db(double d_km, const SystemConfig& cfg) {
  const double L = cfg.path_loss_offset_db;
  const double d0 = cfg.breakpoint0_km;
  const double d1 = cfg.breakpoint1_km;
  if (d_km > d1) return -L - 35.0 * std::log10(d_km);
  if (d_km > d0) return -L - 15.0 * std::log10(d1) - 20.0 * std::log10(d_km);
  return -L - 15.0 * std::log10(d1) - 20.0 * std::log10(d0);
}

/// beta = 10^((pl + sigma_sh z) / 10). Callers pass z = 0 where no
/// shadowing applies.
inline double large_scale(double pl_db, double shadow_z, const SystemConfig& cfg) {
  return std::pow(10.0, (pl_db + cfg.shadowing_std_db * shadow_z) / 10.0);
}

/// Per-antenna variance of the MMSE estimate under orthogonal pilots.
inline double estimation_variance(double beta, const SystemConfig& cfg) {
  const double snr = cfg.pilot_symbols * cfg.pilot_power;
  return snr * beta * beta / (snr * beta + 1.0);
}

namespace detail {

// Standard normals with covariance 2^(-d / d_decorr) between the points.
inline Eigen::VectorXd correlated_normals(const std::vector<Point2>& pts, double side,
                                          double decorrelation_km, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cov(i, j) = std::pow(2.0, -torus_distance(pts[i], pts[j], side) / decorrelation_km);
    }
  }
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = rng.normal();
  // Coincident points make the covariance singular; LDLT handles the
  // semidefinite case and the square root of D is clamped at zero.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd y = ldlt.matrixL() * d.cwiseProduct(w);
  return ldlt.transpositionsP().transpose() * y;
}

}  // namespace detail

inline TargetAngles target_angles_from(Point2 ap, const SystemConfig& cfg) {
  const auto d = torus_offset(ap, {cfg.target.x_km, cfg.target.y_km}, cfg.area_side_km);
  const double horizontal_m = 1000.0 * std::hypot(d.x_km, d.y_km);
  const double vertical_m = std::abs(cfg.target.height_m - cfg.ap_height_m);
  return {std::atan2(d.y_km, d.x_km), std::atan2(horizontal_m, vertical_m)};
}

/// Fills beta and gamma from positions already stored in `net`. Shadowing
/// draws come from `rng`.
inline void fill_large_scale(NetworkRealization& net, const SystemConfig& cfg, Rng& rng) {
  const int M = static_cast<int>(net.ap_positions.size());
  const int K = static_cast<int>(net.user_positions.size());
  net.distance_km.resize(M, K);
  net.beta.resize(M, K);
  net.gamma.resize(M, K);

  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(M, K);
  switch (cfg.shadowing) {
    case ShadowingModel::kCorrelated: {
      Rng ap_stream = rng.split(0);
      Rng user_stream = rng.split(1);
      const Eigen::VectorXd a = detail::correlated_normals(net.ap_positions, cfg.area_side_km,
                                                           cfg.shadow_decorrelation_km, ap_stream);
      const Eigen::VectorXd b = detail::correlated_normals(net.user_positions, cfg.area_side_km,
                                                           cfg.shadow_decorrelation_km, user_stream);
      const double wa = std::sqrt(cfg.shadow_ap_weight);
      const double wb = std::sqrt(1.0 - cfg.shadow_ap_weight);
      for (int m = 0; m < M; ++m)
        for (int k = 0; k < K; ++k) z(m, k) = wa * a(m) + wb * b(k);
      break;
    }
    case ShadowingModel::kUncorrelated: {
      Rng stream = rng.split(2);
      for (int m = 0; m < M; ++m)
        for (int k = 0; k < K; ++k) z(m, k) = stream.normal();
      break;
    }
    case ShadowingModel::kNone:
      break;
  }

  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) {
      const double d = torus_distance(net.ap_positions[m], net.user_positions[k], cfg.area_side_km);
      net.distance_km(m, k) = d;
      const double shadow = d > cfg.breakpoint1_km ? z(m, k) : 0.0;
      net.beta(m, k) = large_scale(path_loss_db(d, cfg), shadow, cfg);
      net.gamma(m, k) = estimation_variance(net.beta(m, k), cfg);
    }
  }
}

/// Uniform i.i.d. APs and users on the wrapped D x D square. APs, users and
/// shadowing use separate child streams, so user positions do not depend on M.
inline NetworkRealization place_network(const SystemConfig& cfg, const Rng& rng) {
  NetworkRealization net;
  net.antennas_per_ap = cfg.antennas_per_ap;
  net.antenna_spacing = cfg.antenna_spacing;

  Rng ap_stream = rng.split(1);
  Rng user_stream = rng.split(2);
  Rng shadow_stream = rng.split(3);
  const double D = cfg.area_side_km;

  net.ap_positions.resize(cfg.num_aps);
  for (auto& p : net.ap_positions) {
    p.x_km = ap_stream.uniform(0.0, D);
    p.y_km = ap_stream.uniform(0.0, D);
  }
  net.user_positions.resize(cfg.num_users);
  for (auto& p : net.user_positions) {
    p.x_km = user_stream.uniform(0.0, D);
    p.y_km = user_stream.uniform(0.0, D);
  }
  net.target_angles.reserve(cfg.num_aps);
  for (const auto& p : net.ap_positions) net.target_angles.push_back(target_angles_from(p, cfg));

  fill_large_scale(net, cfg, shadow_stream);
  return net;
}

}  // namespace isac
