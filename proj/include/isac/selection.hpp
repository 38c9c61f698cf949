#pragma once

// AP operation-mode selection.

#include <functional>
#include <stdexcept>
#include <vector>

#include "isac/config.hpp"
#include "isac/metrics.hpp"
#include "isac/power.hpp"
#include "isac/random.hpp"
#include "isac/topology.hpp"

namespace isac {

using PowerScheme = std::function<PowerAllocation(const NetworkRealization&, const ModeAssignment&)>;

struct SelectionStep {
  int ap = -1;           // best candidate of this round, -1 if none was left
  double min_sinr = 0.0; // its score
  bool committed = false;
};

struct SelectionOutcome {
  ModeAssignment assignment;
  std::vector<SelectionStep> trace;
  std::vector<double> scores;  // score of every round's best move, starting with the all-sensing value
  int iterations = 0;          // committed moves
};

inline PowerScheme npc_scheme(const SystemConfig& cfg) {
  return [cfg](const NetworkRealization& net, const ModeAssignment& a) {
    return npc_allocation(net, a, cfg);
  };
}

inline PowerScheme optimized_scheme(const SystemConfig& cfg) {
  return [cfg](const NetworkRealization& net, const ModeAssignment& a) {
    if (a.num_communication() == 0) return npc_allocation(net, a, cfg);
    return alternating_optimization(net, a, cfg).allocation;
  };
}

/// Score of one assignment: min SINR under the scheme's allocation, or 0
/// when the allocation misses the MASR target.
inline double selection_score(const NetworkRealization& net, const ModeAssignment& a,
                              const PowerScheme& scheme, const SystemConfig& cfg) {
  if (a.num_communication() == 0) return 0.0;
  const auto p = scheme(net, a);
  if (!dimensions_match(net, a, p)) throw std::invalid_argument("power scheme returned an allocation of the wrong shape");
  if (!meets_masr_target(masr(net, a, p, cfg), cfg.masr_target)) return 0.0;
  return min_sinr(net, a, p, cfg);
}

/// Gain test for a greedy move, relative to the current score. Any positive
/// score improves on zero.
inline bool improves(double candidate, double current, double min_gain) {
  return candidate > current && candidate - current >= min_gain * current;
}

/// Greedy mode selection. Starts with every AP sensing and, each round,
/// switches the single AP whose move gives the best min SINR, as long as the
/// relative gain is at least greedy_min_gain. Ties go to the lowest AP index.
inline SelectionOutcome greedy_select(const NetworkRealization& net, const SystemConfig& cfg,
                                      const PowerScheme& scheme) {
  const int M = net.num_aps();
  SelectionOutcome out;
  out.assignment = ModeAssignment::all_sensing(M);
  double current = selection_score(net, out.assignment, scheme, cfg);
  out.scores.push_back(current);

  while (out.assignment.num_sensing() > 0) {
    SelectionStep best;
    best.min_sinr = -1.0;
    for (int m = 0; m < M; ++m) {
      if (out.assignment.communicates(m)) continue;
      ModeAssignment candidate = out.assignment;
      candidate.set_communication(m, true);
      const double score = selection_score(net, candidate, scheme, cfg);
      if (score > best.min_sinr) {
        best.ap = m;
        best.min_sinr = score;
      }
    }
    best.committed = improves(best.min_sinr, current, cfg.greedy_min_gain);
    out.trace.push_back(best);
    if (!best.committed) break;
    out.assignment.set_communication(best.ap, true);
    current = best.min_sinr;
    out.scores.push_back(current);
    ++out.iterations;
  }
  return out;
}

inline PowerScheme scheme_for(GreedyPower g, const SystemConfig& cfg) {
  return g == GreedyPower::kOptimized ? optimized_scheme(cfg) : npc_scheme(cfg);
}

/// Each AP communicates with probability 1/2, independently.
inline SelectionOutcome random_select(const NetworkRealization& net, const SystemConfig&, Rng& rng) {
  SelectionOutcome out;
  out.assignment = ModeAssignment::all_sensing(net.num_aps());
  for (int m = 0; m < net.num_aps(); ++m) out.assignment.set_communication(m, rng.bernoulli(0.5));
  return out;
}

}  // namespace isac
