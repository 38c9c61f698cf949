#pragma once

// Signal-level Monte Carlo estimates of the quantities behind the closed-form
// SINR and power pattern. Everything here is computed from drawn channels and
// symbols, never from the closed forms, except the desired-signal centering
// used by the beamforming-uncertainty term.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/metrics.hpp"
#include "isac/parallel.hpp"
#include "isac/random.hpp"
#include "isac/topology.hpp"

namespace isac {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
    else comp_ += (v - t) + sum_;
    sum_ = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// First and second moments of one scalar statistic.
struct MomentAccumulator {
  CompensatedSum sum;
  CompensatedSum sum_sq;
  long long count = 0;

  void add(double v) {
    sum.add(v);
    sum_sq.add(v * v);
    ++count;
  }
  void merge(const MomentAccumulator& o) {
    sum.add(o.sum);
    sum_sq.add(o.sum_sq);
    count += o.count;
  }
  double mean() const { return count ? sum.value() / count : 0.0; }
  double standard_error() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = std::max(sum_sq.value() / count - m * m, 0.0) * count / (count - 1.0);
    return std::sqrt(var / count);
  }
};

struct OracleEstimate {
  Eigen::VectorXcd ds;          // sample mean of sum_m a_m sqrt(rho eta_mk) g_mk^T t_mk
  Eigen::VectorXd ds_se;        // standard error of its real part
  Eigen::VectorXd ds_analytic;  // centering used for the uncertainty term
  Eigen::VectorXd bu_var, bu_se;
  Eigen::MatrixXd iui_var, iui_se;  // (k, k'): leakage of user k' into user k; zero diagonal
  Eigen::VectorXd ir_var, ir_se;
  Eigen::VectorXd sinr_mc;
  long long trials = 0;
};

struct PatternEstimate {
  double comm = 0.0;
  double sense = 0.0;
  double comm_se = 0.0;
  double sense_se = 0.0;
  long long trials = 0;
};

namespace detail {

constexpr int kOracleChunks = 64;

inline void require_trials(long long trials) {
  if (trials < 1000) throw std::invalid_argument("oracle needs at least 1000 trials");
}

inline long long chunk_begin(long long trials, int c) { return trials * c / kOracleChunks; }

}  // namespace detail

/// Desired-signal strength and the three interference powers, estimated from
/// `trials` channel draws. Trials are split into fixed chunks with their own
/// child streams, so the result does not depend on the worker count.
inline OracleEstimate estimate_sinr_terms(const NetworkRealization& net, const ModeAssignment& a,
                                          const PowerAllocation& p, const SystemConfig& cfg,
                                          long long trials, const Rng& rng, int threads = 1) {
  detail::require_trials(trials);
  require_dimensions(net, a, p);
  const int M = net.num_aps();
  const int K = net.num_users();
  const double rho = cfg.max_power;
  const double N = net.antennas_per_ap;

  Eigen::VectorXd ds_analytic = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      if (a.communicates(m)) ds_analytic(k) += std::sqrt(rho * p.comm(m, k)) * N * net.gamma(m, k);

  Eigen::MatrixXd amp_comm = (rho * p.comm).cwiseSqrt();
  Eigen::VectorXd amp_sense = (rho * p.sense).cwiseSqrt();

  struct Chunk {
    std::vector<MomentAccumulator> ds_re, ds_im, bu, ir;
    std::vector<MomentAccumulator> iui;  // K*K
  };
  std::vector<Chunk> chunks(detail::kOracleChunks);

  // Sensing beamformers are fixed; communication ones are conj(estimate) per draw.
  std::vector<Eigen::VectorXcd> steer(M);
  for (int m = 0; m < M; ++m)
    steer[m] = array_response(net.target_angles[m].azimuth, net.target_angles[m].elevation,
                              net.antennas_per_ap, net.antenna_spacing);

  parallel_for(detail::kOracleChunks, threads, [&](int c) {
    Chunk& acc = chunks[c];
    acc.ds_re.resize(K);
    acc.ds_im.resize(K);
    acc.bu.resize(K);
    acc.ir.resize(K);
    acc.iui.resize(static_cast<std::size_t>(K) * K);
    Rng stream = rng.split(static_cast<std::uint64_t>(c));
    ChannelRealization ch;
    Eigen::MatrixXcd leak(K, K);  // leak(k, k') = sum_m a_m sqrt(rho eta_mk') g_mk^T conj(ghat_mk')
    Eigen::VectorXcd ir(K);
    for (long long t = detail::chunk_begin(trials, c); t < detail::chunk_begin(trials, c + 1); ++t) {
      draw_channels_into(net, stream, ch);
      leak.setZero();
      ir.setZero();
      for (int m = 0; m < M; ++m) {
        if (a.communicates(m)) {
          // (estimate^H channel)(k', k) = g_mk^T conj(ghat_mk')
          const Eigen::MatrixXcd gram = ch.estimate[m].adjoint() * ch.channel[m];
          for (int k = 0; k < K; ++k)
            for (int kp = 0; kp < K; ++kp) leak(k, kp) += amp_comm(m, kp) * gram(kp, k);
        } else if (amp_sense(m) > 0.0) {
          for (int k = 0; k < K; ++k)
            ir(k) += amp_sense(m) * ch.channel[m].col(k).cwiseProduct(steer[m]).sum();
        }
      }
      for (int k = 0; k < K; ++k) {
        acc.ds_re[k].add(leak(k, k).real());
        acc.ds_im[k].add(leak(k, k).imag());
        acc.bu[k].add(std::norm(leak(k, k) - ds_analytic(k)));
        acc.ir[k].add(std::norm(ir(k)));
        for (int kp = 0; kp < K; ++kp)
          if (kp != k) acc.iui[static_cast<std::size_t>(k) * K + kp].add(std::norm(leak(k, kp)));
      }
    }
  });

  Chunk total;
  total.ds_re.resize(K);
  total.ds_im.resize(K);
  total.bu.resize(K);
  total.ir.resize(K);
  total.iui.resize(static_cast<std::size_t>(K) * K);
  for (const auto& c : chunks) {
    for (int k = 0; k < K; ++k) {
      total.ds_re[k].merge(c.ds_re[k]);
      total.ds_im[k].merge(c.ds_im[k]);
      total.bu[k].merge(c.bu[k]);
      total.ir[k].merge(c.ir[k]);
    }
    for (std::size_t i = 0; i < total.iui.size(); ++i) total.iui[i].merge(c.iui[i]);
  }

  OracleEstimate est;
  est.trials = trials;
  est.ds_analytic = ds_analytic;
  est.ds.resize(K);
  est.ds_se.resize(K);
  est.bu_var.resize(K);
  est.bu_se.resize(K);
  est.ir_var.resize(K);
  est.ir_se.resize(K);
  est.iui_var = Eigen::MatrixXd::Zero(K, K);
  est.iui_se = Eigen::MatrixXd::Zero(K, K);
  est.sinr_mc.resize(K);
  for (int k = 0; k < K; ++k) {
    est.ds(k) = {total.ds_re[k].mean(), total.ds_im[k].mean()};
    est.ds_se(k) = total.ds_re[k].standard_error();
    est.bu_var(k) = total.bu[k].mean();
    est.bu_se(k) = total.bu[k].standard_error();
    est.ir_var(k) = total.ir[k].mean();
    est.ir_se(k) = total.ir[k].standard_error();
    for (int kp = 0; kp < K; ++kp) {
      if (kp == k) continue;
      est.iui_var(k, kp) = total.iui[static_cast<std::size_t>(k) * K + kp].mean();
      est.iui_se(k, kp) = total.iui[static_cast<std::size_t>(k) * K + kp].standard_error();
    }
    const double interference = est.bu_var(k) + est.iui_var.row(k).sum() + est.ir_var(k) + 1.0;
    est.sinr_mc(k) = std::norm(est.ds(k)) / interference;
  }
  return est;
}

/// Average power radiated towards the target, with random unit-power data
/// and probing symbols, averaged over channel draws.
inline PatternEstimate estimate_power_pattern(const NetworkRealization& net, const ModeAssignment& a,
                                              const PowerAllocation& p, const SystemConfig& cfg,
                                              long long trials, const Rng& rng, int threads = 1) {
  detail::require_trials(trials);
  require_dimensions(net, a, p);
  const int M = net.num_aps();
  const int K = net.num_users();
  const double rho = cfg.max_power;
  std::vector<Eigen::VectorXcd> steer(M);
  for (int m = 0; m < M; ++m)
    steer[m] = array_response(net.target_angles[m].azimuth, net.target_angles[m].elevation,
                              net.antennas_per_ap, net.antenna_spacing);

  std::vector<MomentAccumulator> comm(detail::kOracleChunks), sense(detail::kOracleChunks);
  parallel_for(detail::kOracleChunks, threads, [&](int c) {
    Rng stream = rng.split(static_cast<std::uint64_t>(c));
    ChannelRealization ch;
    Eigen::VectorXcd data(K);
    for (long long t = detail::chunk_begin(trials, c); t < detail::chunk_begin(trials, c + 1); ++t) {
      draw_channels_into(net, stream, ch);
      const Beamformers bf = build_beamformers(ch, net);
      for (int k = 0; k < K; ++k) data(k) = stream.complex_normal(1.0);
      const std::complex<double> probe = stream.complex_normal(1.0);
      double pc = 0.0;
      double ps = 0.0;
      for (int m = 0; m < M; ++m) {
        if (a.communicates(m)) {
          Eigen::VectorXcd x = Eigen::VectorXcd::Zero(net.antennas_per_ap);
          for (int k = 0; k < K; ++k)
            x += std::sqrt(rho * p.comm(m, k)) * bf.communication[m].col(k) * data(k);
          pc += std::norm(steer[m].dot(x));
        } else {
          const Eigen::VectorXcd x = std::sqrt(rho * p.sense(m)) * bf.sensing[m] * probe;
          ps += std::norm(steer[m].dot(x));
        }
      }
      comm[c].add(pc);
      sense[c].add(ps);
    }
  });
  MomentAccumulator tc, ts;
  for (int c = 0; c < detail::kOracleChunks; ++c) {
    tc.merge(comm[c]);
    ts.merge(sense[c]);
  }
  return {tc.mean(), ts.mean(), tc.standard_error(), ts.standard_error(), trials};
}

}  // namespace isac
