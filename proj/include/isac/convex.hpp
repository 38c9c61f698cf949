#pragma once

// Small dense convex feasibility solver for smooth constraints of the forms
//
//   affine     sum_i a_i x_i + b                         <= 0
//   quadratic  sum_i q_i x_i^2 + sum_i a_i x_i + b       <= 0   (q >= 0)
//   norm       sqrt(sum_i q_i x_i^2 + c) + sum_i a_i x_i + b <= 0   (q >= 0, c > 0)
//
// each optionally multiplied by a positive scale. Feasibility is decided
// with a log-barrier phase-one method: minimize s subject to f_i(x) <= s.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace isac::convex {

struct SmoothConstraint {
  enum class Kind { kAffine, kQuadratic, kNorm };

  Kind kind = Kind::kAffine;
  std::vector<std::pair<int, double>> linear;
  std::vector<std::pair<int, double>> quadratic;
  double norm_offset = 0.0;
  double constant = 0.0;
  double scale = 1.0;
  std::string label;

  static SmoothConstraint affine(std::vector<std::pair<int, double>> a, double b,
                                 std::string label = {}) {
    SmoothConstraint c;
    c.kind = Kind::kAffine;
    c.linear = std::move(a);
    c.constant = b;
    c.label = std::move(label);
    return c;
  }

  double value(const Eigen::VectorXd& x) const {
    double lin = constant;
    for (const auto& [i, a] : linear) lin += a * x(i);
    double quad = 0.0;
    for (const auto& [i, q] : quadratic) quad += q * x(i) * x(i);
    switch (kind) {
      case Kind::kAffine: return scale * lin;
      case Kind::kQuadratic: return scale * (quad + lin);
      case Kind::kNorm: return scale * (std::sqrt(quad + norm_offset) + lin);
    }
    return 0.0;
  }
};

struct Problem {
  int dimension = 0;
  std::vector<SmoothConstraint> constraints;

  double max_violation(const Eigen::VectorXd& x) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& c : constraints) worst = std::max(worst, c.value(x));
    return worst;
  }
};

struct Options {
  double tolerance = 1e-8;     // phase-one duality gap at which the search stops
  int max_newton_steps = 100000;
  double barrier_growth = 20.0;
};

enum class Status { kFeasible, kInfeasible, kIterationLimit };

struct Result {
  Status status = Status::kInfeasible;
  Eigen::VectorXd point;
  double phase_one_value = 0.0;
  int newton_steps = 0;
  bool feasible() const { return status == Status::kFeasible; }
};

namespace detail {

// Gradient and Hessian of one constraint over its support. `support` lists
// the variable indices; grad and hess are in support coordinates.
struct LocalDerivatives {
  std::vector<int> support;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;  // empty for affine constraints
};

inline std::vector<int> support_of(const SmoothConstraint& c) {
  std::vector<int> s;
  for (const auto& [i, v] : c.linear) s.push_back(i);
  for (const auto& [i, v] : c.quadratic) s.push_back(i);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline void local_derivatives(const SmoothConstraint& c, const Eigen::VectorXd& x,
                              LocalDerivatives& out) {
  const auto& sup = out.support;
  const auto n = static_cast<Eigen::Index>(sup.size());
  auto pos = [&](int i) {
    return static_cast<Eigen::Index>(std::lower_bound(sup.begin(), sup.end(), i) - sup.begin());
  };
  out.grad.setZero(n);
  for (const auto& [i, a] : c.linear) out.grad(pos(i)) += a;
  if (c.kind == SmoothConstraint::Kind::kAffine) {
    out.hess.resize(0, 0);
    out.grad *= c.scale;
    return;
  }
  Eigen::VectorXd qx = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qdiag = Eigen::VectorXd::Zero(n);
  double quad = 0.0;
  for (const auto& [i, q] : c.quadratic) {
    const auto p = pos(i);
    qx(p) += q * x(i);
    qdiag(p) += q;
    quad += q * x(i) * x(i);
  }
  if (c.kind == SmoothConstraint::Kind::kQuadratic) {
    out.grad += 2.0 * qx;
    out.hess = (2.0 * qdiag).asDiagonal();
  } else {
    const double r = std::sqrt(quad + c.norm_offset);
    out.grad += qx / r;
    out.hess = Eigen::MatrixXd(qdiag.asDiagonal()) / r - qx * qx.transpose() / (r * r * r);
  }
  out.grad *= c.scale;
  out.hess *= c.scale;
}

}  // namespace detail

/// Decides whether some x satisfies every constraint. On success the returned
/// point satisfies all constraints strictly. `start` may be any point of the
/// right dimension; it only seeds the search.
inline Result solve_feasibility(const Problem& problem, const Eigen::VectorXd& start,
                                const Options& opt = {}) {
  const int n = problem.dimension;
  const int total = n + 1;  // last coordinate is the phase-one slack s
  const auto& cons = problem.constraints;
  const int m = static_cast<int>(cons.size());

  Result res;
  Eigen::VectorXd x = start.size() == n ? start : Eigen::VectorXd::Zero(n);
  if (m == 0) {
    res.status = Status::kFeasible;
    res.point = x;
    return res;
  }

  std::vector<detail::LocalDerivatives> local(m);
  for (int i = 0; i < m; ++i) local[i].support = detail::support_of(cons[i]);

  Eigen::VectorXd values(m);
  auto evaluate = [&](const Eigen::VectorXd& xv) {
    for (int i = 0; i < m; ++i) values(i) = cons[i].value(xv);
    return values.maxCoeff();
  };

  double worst = evaluate(x);
  if (worst < 0.0) {
    res.status = Status::kFeasible;
    res.point = x;
    res.phase_one_value = worst;
    return res;
  }

  double s = worst + std::max(1.0, std::abs(worst));
  double tau = 1.0;

  auto barrier = [&](const Eigen::VectorXd& xv, double sv, double t, bool& inside) {
    double phi = t * sv;
    inside = true;
    for (int i = 0; i < m; ++i) {
      const double slack = sv - cons[i].value(xv);
      if (!(slack > 0.0)) {
        inside = false;
        return std::numeric_limits<double>::infinity();
      }
      phi -= std::log(slack);
    }
    return phi;
  };

  Eigen::MatrixXd H(total, total);
  Eigen::VectorXd g(total);
  Eigen::VectorXd ext;

  while (true) {
    // Centering by damped Newton steps.
    for (int step = 0; step < 200; ++step) {
      if (res.newton_steps >= opt.max_newton_steps) {
        res.status = Status::kIterationLimit;
        res.point = x;
        res.phase_one_value = s;
        return res;
      }
      ++res.newton_steps;

      H.setZero();
      g.setZero();
      g(n) = tau;
      for (int i = 0; i < m; ++i) {
        const double slack = s - cons[i].value(x);
        auto& ld = local[i];
        detail::local_derivatives(cons[i], x, ld);
        const auto& sup = ld.support;
        const auto ns = static_cast<Eigen::Index>(sup.size());
        // Gradient of -log(s - f) in (x, s): (grad f, -1) / slack.
        ext.resize(ns + 1);
        ext.head(ns) = ld.grad;
        ext(ns) = -1.0;
        const double inv = 1.0 / slack;
        for (Eigen::Index a = 0; a < ns; ++a) g(sup[a]) += ext(a) * inv;
        g(n) += ext(ns) * inv;
        const double inv2 = inv * inv;
        for (Eigen::Index a = 0; a <= ns; ++a) {
          const int ia = a < ns ? sup[a] : n;
          for (Eigen::Index b = 0; b <= ns; ++b) {
            const int ib = b < ns ? sup[b] : n;
            H(ia, ib) += ext(a) * ext(b) * inv2;
          }
        }
        if (ld.hess.size() != 0) {
          for (Eigen::Index a = 0; a < ns; ++a)
            for (Eigen::Index b = 0; b < ns; ++b) H(sup[a], sup[b]) += ld.hess(a, b) * inv;
        }
      }

      Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      Eigen::VectorXd dz = ldlt.solve(-g);
      if (ldlt.info() != Eigen::Success || !dz.allFinite()) {
        H.diagonal().array() += 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
        dz = H.ldlt().solve(-g);
      }
      const double decrement = -g.dot(dz);
      if (!(decrement > 0.0) || decrement * 0.5 < 1e-12) break;

      bool inside = false;
      const double phi0 = barrier(x, s, tau, inside);
      double alpha = 1.0;
      Eigen::VectorXd x_new;
      double s_new = s;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        x_new = x + alpha * dz.head(n);
        s_new = s + alpha * dz(n);
        const double phi = barrier(x_new, s_new, tau, inside);
        if (inside && phi <= phi0 - 0.25 * alpha * decrement) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      x = x_new;
      s = s_new;

      if (s < 0.0 && evaluate(x) < 0.0) {
        res.status = Status::kFeasible;
        res.point = x;
        res.phase_one_value = values.maxCoeff();
        return res;
      }
    }

    const double gap = m / tau;
    if (s - gap > 0.0 || gap < opt.tolerance) {
      res.status = Status::kInfeasible;
      res.point = x;
      res.phase_one_value = s;
      return res;
    }
    tau *= opt.barrier_growth;
  }
}

/// Plain-text dump, one constraint per line:
///   <kind> scale=<s> const=<b> [offset=<c>] lin <i>:<a> ... quad <i>:<q> ...
/// kind is affine|quadratic|norm; the constraint reads scale * f(x) <= 0.
inline void write_problem(std::ostream& out, const Problem& p) {
  const auto old_precision = out.precision(17);
  out << "# convex feasibility problem: scale * f(x) <= 0 for every line\n";
  out << "dimension " << p.dimension << "\n";
  out << "constraints " << p.constraints.size() << "\n";
  for (const auto& c : p.constraints) {
    switch (c.kind) {
      case SmoothConstraint::Kind::kAffine: out << "affine"; break;
      case SmoothConstraint::Kind::kQuadratic: out << "quadratic"; break;
      case SmoothConstraint::Kind::kNorm: out << "norm"; break;
    }
    out << " scale=" << c.scale << " const=" << c.constant;
    if (c.kind == SmoothConstraint::Kind::kNorm) out << " offset=" << c.norm_offset;
    out << " lin";
    for (const auto& [i, a] : c.linear) out << ' ' << i << ':' << a;
    out << " quad";
    for (const auto& [i, q] : c.quadratic) out << ' ' << i << ':' << q;
    if (!c.label.empty()) out << " # " << c.label;
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace isac::convex
