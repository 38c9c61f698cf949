#pragma once

// Monte Carlo drops over the three pipelines and their CSV output.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "isac/config.hpp"
#include "isac/metrics.hpp"
#include "isac/parallel.hpp"
#include "isac/power.hpp"
#include "isac/random.hpp"
#include "isac/selection.hpp"
#include "isac/topology.hpp"

namespace isac {

enum class Scheme { kGapOpc, kGapNpc, kRapNpc };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kGapOpc: return "gap-opc";
    case Scheme::kGapNpc: return "gap-npc";
    case Scheme::kRapNpc: return "rap-npc";
  }
  return "unknown";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "gap-opc") return Scheme::kGapOpc;
  if (s == "gap-npc") return Scheme::kGapNpc;
  if (s == "rap-npc") return Scheme::kRapNpc;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

struct DropRecord {
  double min_se = 0.0;
  double masr = 0.0;
  int comm_aps = 0;
  bool masr_met = false;
  bool solver_failure = false;  // optimizer flagged a problem or the audit rejected the allocation
};

struct CdfPoint {
  double value = 0.0;
  double probability = 0.0;
};

struct ExperimentResult {
  Scheme scheme = Scheme::kGapNpc;
  double kappa = 0.0;
  int num_aps = 0;
  int antennas = 0;
  int num_users = 0;
  std::vector<DropRecord> drops;  // in drop-index order
  double wall_seconds = 0.0;

  std::vector<double> min_se() const {
    std::vector<double> v;
    v.reserve(drops.size());
    for (const auto& d : drops) v.push_back(d.min_se);
    return v;
  }
  int infeasible_drops() const {
    return static_cast<int>(std::count_if(drops.begin(), drops.end(),
                                          [](const DropRecord& d) { return !d.masr_met || d.solver_failure; }));
  }
  int solver_failures() const {
    return static_cast<int>(std::count_if(drops.begin(), drops.end(),
                                          [](const DropRecord& d) { return d.solver_failure; }));
  }
};

/// Empirical CDF, one point per sample: the i-th smallest value (1-based)
/// has probability i / n.
inline std::vector<CdfPoint> empirical_cdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<CdfPoint> out;
  out.reserve(samples.size());
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out.push_back({samples[i], (i + 1) / n});
  return out;
}

/// Nearest-rank percentile, q in (0, 1]. Empty input gives 0.
inline double nearest_rank(std::vector<double> samples, double q) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const auto n = samples.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return samples[rank - 1];
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// The 95%-likely value: the 5th percentile.
inline double p95_likely(const std::vector<double>& v) { return nearest_rank(v, 0.05); }

struct Summary {
  std::string scheme;
  double kappa = 0.0;
  int num_aps = 0;
  int antennas = 0;
  int num_users = 0;
  int drops = 0;
  double mean_min_se = 0.0;
  double p95_likely_se = 0.0;
  int infeasible_drops = 0;

  friend bool operator==(const Summary&, const Summary&) = default;
};

inline Summary summarize(const ExperimentResult& r) {
  const auto se = r.min_se();
  return {to_string(r.scheme), r.kappa, r.num_aps, r.antennas, r.num_users,
          static_cast<int>(r.drops.size()), mean_of(se), p95_likely(se), r.infeasible_drops()};
}

/// Streams for one drop. Placement and selection draw from separate children
/// so every scheme sees the same networks for the same seed.
struct DropStreams {
  Rng placement;
  Rng selection;
};

inline DropStreams drop_streams(std::uint64_t seed, int drop) {
  const Rng root = Rng(seed).split(static_cast<std::uint64_t>(drop));
  return {root.split(0), root.split(1)};
}

inline DropRecord run_drop(const SystemConfig& cfg, Scheme scheme, const NetworkRealization& net,
                           Rng& selection_rng) {
  DropRecord rec;
  ModeAssignment a;
  if (scheme == Scheme::kRapNpc) {
    a = random_select(net, cfg, selection_rng).assignment;
  } else {
    a = greedy_select(net, cfg, scheme_for(cfg.greedy_power, cfg)).assignment;
  }
  rec.comm_aps = a.num_communication();

  PowerAllocation p;
  if (scheme == Scheme::kGapOpc && a.num_communication() > 0) {
    const auto ao = alternating_optimization(net, a, cfg);
    p = ao.allocation;
    rec.solver_failure = ao.hit_iteration_limit;
  } else {
    p = npc_allocation(net, a, cfg);
  }

  const auto report = evaluate(net, a, p, cfg);
  rec.masr = report.masr;
  rec.masr_met = meets_masr_target(report.masr, cfg.masr_target);
  const auto audit = audit_allocation(net, a, p, cfg);
  if (!audit.caps_ok || !audit.nonnegative_ok) rec.solver_failure = true;
  if (a.num_communication() > 0 && rec.masr_met && !rec.solver_failure) rec.min_se = report.min_se;
  return rec;
}

/// Runs `drops` independent drops. The output depends only on (cfg, scheme,
/// drops, seed), never on the worker count.
inline ExperimentResult run_experiment(const SystemConfig& cfg, Scheme scheme, int drops,
                                       std::uint64_t seed, int threads = 1) {
  if (drops < 1) throw std::invalid_argument("drops must be >= 1");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.scheme = scheme;
  res.kappa = cfg.masr_target;
  res.num_aps = cfg.num_aps;
  res.antennas = cfg.antennas_per_ap;
  res.num_users = cfg.num_users;
  res.drops.resize(drops);
  parallel_for(drops, threads, [&](int d) {
    auto streams = drop_streams(seed, d);
    const auto net = place_network(cfg, streams.placement);
    try {
      res.drops[d] = run_drop(cfg, scheme, net, streams.selection);
    } catch (const std::exception&) {
      DropRecord failed;
      failed.solver_failure = true;
      res.drops[d] = failed;
    }
  });
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::runtime_error("malformed number in CSV: " + std::string(s));
  return v;
}

inline void write_cdf_csv(const ExperimentResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "min_se_bits_per_hz,empirical_cdf\n";
  for (const auto& pt : empirical_cdf(r.min_se()))
    out << format_double(pt.value) << ',' << format_double(pt.probability) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline constexpr const char* kSummaryHeader =
    "scheme,kappa,M,N,Kd,drops,mean_min_se,p95_likely_se,infeasible_drops";

inline void write_summary_csv(const std::vector<Summary>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    out << s.scheme << ',' << format_double(s.kappa) << ',' << s.num_aps << ',' << s.antennas << ','
        << s.num_users << ',' << s.drops << ',' << format_double(s.mean_min_se) << ','
        << format_double(s.p95_likely_se) << ',' << s.infeasible_drops << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::vector<Summary> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader)
    throw std::runtime_error("unexpected summary header in " + path.string());
  std::vector<Summary> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw std::runtime_error("summary row needs 9 fields: " + line);
    Summary s;
    s.scheme = f[0];
    s.kappa = parse_double(f[1]);
    s.num_aps = std::stoi(f[2]);
    s.antennas = std::stoi(f[3]);
    s.num_users = std::stoi(f[4]);
    s.drops = std::stoi(f[5]);
    s.mean_min_se = parse_double(f[6]);
    s.p95_likely_se = parse_double(f[7]);
    s.infeasible_drops = std::stoi(f[8]);
    rows.push_back(s);
  }
  return rows;
}

/// cdf_<scheme>.csv and summary.csv in `dir`. A result without drops gives
/// header-only files.
inline void emit_csv(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_cdf_csv(r, dir / ("cdf_" + to_string(r.scheme) + ".csv"));
  std::vector<Summary> rows;
  if (!r.drops.empty()) rows.push_back(summarize(r));
  write_summary_csv(rows, dir / "summary.csv");
}

}  // namespace isac
