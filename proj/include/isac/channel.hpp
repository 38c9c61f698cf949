#pragma once

// Small-scale fading, MMSE estimates and beamformers. Only the Monte Carlo
// oracle needs these; the closed forms work from beta and gamma alone.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "isac/random.hpp"
#include "isac/topology.hpp"

namespace isac {

/// Per-AP N x K_d matrices; column k holds the vector for user k.
struct ChannelRealization {
  std::vector<Eigen::MatrixXcd> channel;
  std::vector<Eigen::MatrixXcd> estimate;
  std::vector<Eigen::MatrixXcd> error;
};

struct Beamformers {
  std::vector<Eigen::MatrixXcd> communication;  // conj(estimate), N x K_d per AP
  std::vector<Eigen::VectorXcd> sensing;        // steering vector towards the target
};

/// ULA response with unit Euclidean norm.
inline Eigen::VectorXcd array_response(double azimuth, double elevation, int antennas,
                                       double spacing) {
  Eigen::VectorXcd a(antennas);
  const double scale = 1.0 / std::sqrt(static_cast<double>(antennas));
  const double phase_step =
      2.0 * std::numbers::pi * spacing * std::sin(elevation) * std::sin(azimuth);
  for (int q = 0; q < antennas; ++q) a(q) = scale * std::polar(1.0, phase_step * q);
  return a;
}

/// Draws estimates and errors from their exact posterior under orthogonal
/// pilots: estimate ~ CN(0, gamma I), error ~ CN(0, (beta - gamma) I).
/// Reuses the storage already held by `ch`.
inline void draw_channels_into(const NetworkRealization& net, Rng& rng, ChannelRealization& ch) {
  const int M = net.num_aps();
  const int K = net.num_users();
  const int N = net.antennas_per_ap;
  ch.channel.resize(M);
  ch.estimate.resize(M);
  ch.error.resize(M);
  for (int m = 0; m < M; ++m) {
    auto& est = ch.estimate[m];
    auto& err = ch.error[m];
    est.resize(N, K);
    err.resize(N, K);
    for (int k = 0; k < K; ++k) {
      const double g = net.gamma(m, k);
      const double e = std::max(net.beta(m, k) - g, 0.0);
      for (int q = 0; q < N; ++q) est(q, k) = rng.complex_normal(g);
      for (int q = 0; q < N; ++q) err(q, k) = rng.complex_normal(e);
    }
    ch.channel[m] = est + err;
  }
}

inline ChannelRealization draw_channels(const NetworkRealization& net, Rng& rng) {
  ChannelRealization ch;
  draw_channels_into(net, rng, ch);
  return ch;
}

inline Beamformers build_beamformers(const ChannelRealization& ch, const NetworkRealization& net) {
  Beamformers bf;
  const int M = net.num_aps();
  bf.communication.reserve(M);
  bf.sensing.reserve(M);
  for (int m = 0; m < M; ++m) {
    bf.communication.push_back(ch.estimate[m].conjugate());
    const auto& ang = net.target_angles[m];
    bf.sensing.push_back(
        array_response(ang.azimuth, ang.elevation, net.antennas_per_ap, net.antenna_spacing));
  }
  return bf;
}

}  // namespace isac
