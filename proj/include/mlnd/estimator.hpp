#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "mlnd/error.hpp"
#include "mlnd/types.hpp"

namespace mlnd::estimator {

// Per-run means of the total count and of the depth-weighted count; together
// with (n, k) they carry all the information the likelihood has about (p, lambda).
struct SufficientStats {
  double s = 0.0;  // (1/n) sum_j sum_i x_ij
  double z = 0.0;  // (1/n) sum_j sum_i (i-1) x_ij
  std::size_t n = 0;
  int k = 0;
};

inline SufficientStats sufficient_stats(const CountsMatrix& data) {
  detail::require(data.runs() >= 1, "counts need at least one run");
  const auto totals = data.column_sums();
  count_t total = 0;
  count_t weighted = 0;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    total += totals[i];
    weighted += static_cast<count_t>(i) * totals[i];
  }
  const auto n = static_cast<double>(data.runs());
  return {static_cast<double>(total) / n, static_cast<double>(weighted) / n, data.runs(),
          data.layers()};
}

// f(y) = a y^(k+1) - b y^k + c y - d, the score equation in y = 1 - p after
// eliminating lambda. f(1) = 0 and f'(1) = 0 for every data set.
struct PolyCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  int k = 0;

  double operator()(double y) const {
    const double yk = std::pow(y, k);
    return a * yk * y - b * yk + c * y - d;
  }

  double derivative(double y) const {
    const double ykm1 = std::pow(y, k - 1);
    return a * (k + 1) * ykm1 * y - b * k * ykm1 + c;
  }

  // Same polynomial written as (1 - y^k)(1 - y)(s T(y)/S(y) - z) with
  // S = sum_{r<k} y^r and T = sum_{r<k} r y^r. On (0, 1) only the last factor
  // can change sign, and it is a sum of positive terms minus z, so its sign is
  // reliable even where f itself is tiny (near the double root at y = 1).
  double sign_factor(double y) const {
    const double s = c - d;
    const double z = d;
    double pw = 1.0;
    double S = 0.0;
    double T = 0.0;
    for (int r = 0; r < k; ++r) {
      S += pw;
      T += r * pw;
      pw *= y;
    }
    return s * (T / S) - z;
  }

  double scale() const {
    return std::max({1.0, std::fabs(a), std::fabs(b), std::fabs(c), std::fabs(d)});
  }
};

inline PolyCoeffs poly_coeffs(const SufficientStats& st) {
  if (st.k <= 1)
    throw Error(Errc::not_identifiable,
                "a single layer only identifies the product p*lambda; need k > 1");
  if (!(st.s > 0.0)) throw Error(Errc::no_detections, "no detections in any layer (s = 0)");
  const double k = st.k;
  return {-st.s - st.z + k * st.s, -st.z + k * st.s, st.z + st.s, st.z, st.k};
}

struct GateDecision {
  bool unique_root = false;
  double y_ip = 0.0;  // inflection point b (k-1) / (a (k+1))
};

// Existence gate: f has exactly one zero in (0, 1) iff the inflection point
// lies below 1, and none otherwise.
inline GateDecision root_gate(const PolyCoeffs& co) {
  detail::require(co.k > 1, "root_gate needs k > 1");
  detail::require(co.a > 0.0, "root_gate needs a > 0");
  detail::require(co.b > 0.0, "root_gate needs b > 0");
  const double y_ip = co.b * (co.k - 1) / (co.a * (co.k + 1));
  return {y_ip < 1.0, y_ip};
}

struct RootSolution {
  double y = 0.0;
  int iterations = 0;
  double residual = 0.0;  // |f(y)|
};

inline constexpr double kBracketEps = 1e-14;
inline constexpr int kMaxSolverIterations = 200;

// Root of f in (0, y_ip).
//
// f(0) = -d < 0, f rises to a single maximum left of y_ip and then falls to
// the double root at y = 1, so f(y_ip) > 0 and the interior root sits in
// (0, y_ip). Bisection on that bracket, then Newton steps kept inside it.
// `tol` bounds |f(y)| relative to max(1, largest coefficient).
inline RootSolution solve_y(const PolyCoeffs& co, double tol = 1e-12) {
  const auto gate = root_gate(co);
  if (!gate.unique_root) {
    std::ostringstream msg;
    msg << "no root of the score polynomial in (0,1): inflection point y_ip = " << gate.y_ip
        << " >= 1";
    throw Error(Errc::no_interior_root, msg.str());
  }
  if (!(co.d > 0.0))
    throw Error(Errc::no_interior_root,
                "d = 0: the only root in [0,1) is the boundary y = 0 (all detections at layer 1)");

  double lo = kBracketEps;
  double hi = gate.y_ip * (1.0 - kBracketEps);
  if (!(co.sign_factor(lo) < 0.0) || !(co.sign_factor(hi) > 0.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "bracket sign condition failed on (" << lo << ", " << hi << "): coefficients a=" << co.a
        << " b=" << co.b << " c=" << co.c << " d=" << co.d << " k=" << co.k;
    throw Error(Errc::numeric_failure, msg.str());
  }

  const double ftol = tol * co.scale();
  int iter = 0;
  double y = 0.5 * (lo + hi);
  while (iter < kMaxSolverIterations) {
    ++iter;
    y = 0.5 * (lo + hi);
    const double g = co.sign_factor(y);
    if (g == 0.0) {
      lo = hi = y;
      break;
    }
    (g < 0.0 ? lo : hi) = y;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  y = 0.5 * (lo + hi);

  // Newton polish on f; a step is only taken if it stays in the bracket and
  // reduces the residual.
  double fy = co(y);
  while (std::fabs(fy) > ftol && iter < kMaxSolverIterations) {
    ++iter;
    const double dfy = co.derivative(y);
    if (dfy == 0.0) break;
    const double next = y - fy / dfy;
    if (!(next > kBracketEps && next < gate.y_ip)) break;
    const double fnext = co(next);
    if (!(std::fabs(fnext) < std::fabs(fy))) break;
    y = next;
    fy = fnext;
  }
  return {y, iter, std::fabs(fy)};
}

struct MleResult {
  double p_hat = 0.0;
  double lambda_hat = 0.0;
  double y_hat = 0.0;
  double y_ip = 0.0;
  int solver_iters = 0;
  double residual = 0.0;
  SufficientStats stats;
  PolyCoeffs coeffs;
  // Almost-sure limit of the gate ratio evaluated at p_hat (diagnostic).
  double gate_limit = 0.0;
  bool boundary = false;
  std::vector<std::string> warnings;
};

// Almost-sure limit of b_n (k-1) / (a_n (k+1)) for data generated at p,
// from the exact expectations of s and z. Always < 1 for k > 1.
inline double gate_limit_constant(double p, int k) {
  detail::require(k > 1, "gate_limit_constant needs k > 1");
  detail::require_domain(p > 0.0 && p <= 1.0, "gate_limit_constant needs p in (0, 1]");
  const double y = 1.0 - p;
  double pi = p;  // p y^(i-1)
  double es = 0.0;
  double ez = 0.0;
  for (int i = 1; i <= k; ++i) {
    es += pi;
    ez += (i - 1) * pi;
    pi *= y;
  }
  return (k - 1.0) / (k + 1.0) * (k * es - ez) / ((k - 1.0) * es - ez);
}

inline MleResult mle(const CountsMatrix& data, double t, double tol = 1e-12) {
  detail::require(t > 0.0 && std::isfinite(t), "exposure time t must be > 0");
  MleResult r;
  r.stats = sufficient_stats(data);
  r.coeffs = poly_coeffs(r.stats);
  const auto& st = r.stats;
  const int k = st.k;

  if (st.z == 0.0) {
    // Likelihood maximized on the boundary p = 1.
    r.p_hat = 1.0;
    r.y_hat = 0.0;
    r.lambda_hat = st.s / t;
    r.y_ip = r.coeffs.b * (k - 1) / (r.coeffs.a * (k + 1));
    r.boundary = true;
    r.gate_limit = gate_limit_constant(1.0, k);
    r.warnings.emplace_back("BOUNDARY_ESTIMATE");
    return r;
  }
  if (!(r.coeffs.a > 0.0)) {
    throw Error(Errc::no_interior_root,
                "all detections at the last layer (z = (k-1) s): no interior maximum, p -> 0");
  }

  const auto sol = solve_y(r.coeffs, tol);
  const auto gate = root_gate(r.coeffs);
  r.y_hat = sol.y;
  r.y_ip = gate.y_ip;
  r.solver_iters = sol.iterations;
  r.residual = sol.residual;
  r.p_hat = 1.0 - sol.y;
  r.lambda_hat = st.s / (t * (1.0 - std::pow(sol.y, k)));
  r.gate_limit = gate_limit_constant(r.p_hat, k);
  return r;
}

// The two score equations divided by n, in the form
//   d/dlambda: (s - lambda t (1 - (1-p)^k)) / lambda
//   d/dp:      ((1-p)(s+z) - z - lambda t (k (1-p)^k - k (1-p)^(k+1))) / (p (1-p))
struct Score {
  double d_lambda = 0.0;
  double d_p = 0.0;
};

inline Score score(double p, double lambda, const SufficientStats& st, double t) {
  const double y = 1.0 - p;
  const double yk = std::pow(y, st.k);
  Score sc;
  sc.d_lambda = (st.s - lambda * t * (1.0 - yk)) / lambda;
  sc.d_p = (y * (st.s + st.z) - st.z - lambda * t * (st.k * yk - st.k * yk * y)) / (p * y);
  return sc;
}

// Log-likelihood sum_j sum_i (-m_i + x_ij log m_i) without the data-only
// term -sum log x_ij!, which does not depend on (p, lambda).
inline double log_likelihood(double p, double lambda, const CountsMatrix& data, double t) {
  detail::require_domain(p > 0.0 && p < 1.0, "log_likelihood needs p in (0, 1)");
  detail::require_domain(lambda > 0.0, "log_likelihood needs lambda > 0");
  const auto totals = data.column_sums();
  const auto n = static_cast<double>(data.runs());
  const double log_p = std::log(p);
  const double log_y = std::log1p(-p);
  const double log_lt = std::log(lambda * t);
  double m = p * lambda * t;
  double ll = 0.0;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    const double log_m = log_p + static_cast<double>(i) * log_y + log_lt;
    ll += -n * m + static_cast<double>(totals[i]) * log_m;
    m *= 1.0 - p;
  }
  return ll;
}

}  // namespace mlnd::estimator
