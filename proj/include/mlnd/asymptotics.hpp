#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mlnd/error.hpp"

namespace mlnd::asymptotics {

enum class FisherKind { per_layer, summed, averaged };

// Symmetric 2x2 information matrix over (p, lambda).
struct FisherInfo {
  double pp = 0.0;
  double pl = 0.0;
  double ll = 0.0;
  FisherKind kind = FisherKind::per_layer;

  double determinant() const { return pp * ll - pl * pl; }
};

// Asymptotic per-run covariance of (p_hat, lambda_hat).
struct AsymCov {
  double sigma2_p = 0.0;
  double sigma2_lambda = 0.0;
  double sigma_p_lambda = 0.0;
  double q = 0.0;
  double h = 0.0;
};

inline constexpr double kSingularThreshold = 1e-15;

namespace detail {

inline void check_params(double p, double lambda, double t) {
  mlnd::detail::require_domain(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
  mlnd::detail::require_domain(lambda > 0.0 && std::isfinite(lambda), "lambda must be > 0");
  mlnd::detail::require_domain(t > 0.0 && std::isfinite(t), "t must be > 0");
}

}  // namespace detail

// Information in one Poisson layer count x_i with mean m_i = p (1-p)^(i-1) lambda t:
// (grad m_i)(grad m_i)^T / m_i.
inline FisherInfo fisher_layer(int i, double p, double lambda, double t) {
  detail::check_params(p, lambda, t);
  mlnd::detail::require(i >= 1, "layer index is 1-based");
  const double y = 1.0 - p;
  const double m = p * std::pow(y, i - 1) * lambda * t;
  const double dm_dp = lambda * t * std::pow(y, i - 2) * (1.0 - i * p);
  const double dm_dl = m / lambda;
  return {dm_dp * dm_dp / m, dm_dp * dm_dl / m, dm_dl * dm_dl / m, FisherKind::per_layer};
}

inline FisherInfo fisher_summed(double p, double lambda, int k, double t) {
  mlnd::detail::require(k >= 1, "k must be >= 1");
  FisherInfo sum{0.0, 0.0, 0.0, FisherKind::summed};
  for (int i = 1; i <= k; ++i) {
    const auto f = fisher_layer(i, p, lambda, t);
    sum.pp += f.pp;
    sum.pl += f.pl;
    sum.ll += f.ll;
  }
  return sum;
}

// The 1/k-averaged matrix; diagnostic only, the covariance uses the sum.
inline FisherInfo fisher_averaged(double p, double lambda, int k, double t) {
  auto f = fisher_summed(p, lambda, k, t);
  f.pp /= k;
  f.pl /= k;
  f.ll /= k;
  f.kind = FisherKind::averaged;
  return f;
}

// q(p,k) = (1-p)^(2k) - k^2 (1-p)^(k+1) + 2(k^2-1)(1-p)^k - k^2 (1-p)^(k-1) + 1,
// evaluated as p^4 sum_{1<=i<j<=k} (j-i)^2 (1-p)^(i+j-3), which has no
// cancellation for small p.
inline double q_factor(double p, int k) {
  mlnd::detail::require(k >= 1, "k must be >= 1");
  const double y = 1.0 - p;
  const double y2 = y * y;
  // g[m] = sum_{i<m} y^(2i)
  std::vector<double> g(static_cast<std::size_t>(k), 0.0);
  double pw = 1.0;
  for (int m = 1; m < k; ++m) {
    g[static_cast<std::size_t>(m)] = g[static_cast<std::size_t>(m - 1)] + pw;
    pw *= y2;
  }
  double sum = 0.0;
  double yd = 1.0;  // y^(d-1)
  for (int d = 1; d < k; ++d) {
    sum += static_cast<double>(d) * d * yd * g[static_cast<std::size_t>(k - d)];
    yd *= y;
  }
  const double p2 = p * p;
  return p2 * p2 * sum;
}

// h(p,k) = 1 - k^2 (1-p)^(k+1) + (2k^2-1)(1-p)^k - k^2 (1-p)^(k-1),
// evaluated as p sum_{i=1..k} (1-p)^(i-2) (1 - i p)^2.
inline double h_factor(double p, int k) {
  mlnd::detail::require(k >= 1, "k must be >= 1");
  const double y = 1.0 - p;
  double sum = y;    // i = 1: (1-p)^(-1) (1-p)^2
  double pw = 1.0;   // y^(i-2), starting at i = 2
  for (int i = 2; i <= k; ++i) {
    const double w = 1.0 - i * p;
    sum += pw * w * w;
    pw *= y;
  }
  return p * sum;
}

// Polynomial forms as printed; exposed for cross-checks.
inline double q_polynomial(double p, int k) {
  const double y = 1.0 - p;
  const double k2 = static_cast<double>(k) * k;
  return std::pow(y, 2 * k) - k2 * std::pow(y, k + 1) + 2.0 * (k2 - 1.0) * std::pow(y, k) -
         k2 * std::pow(y, k - 1) + 1.0;
}

inline double h_polynomial(double p, int k) {
  const double y = 1.0 - p;
  const double k2 = static_cast<double>(k) * k;
  return 1.0 - k2 * std::pow(y, k + 1) + (2.0 * k2 - 1.0) * std::pow(y, k) -
         k2 * std::pow(y, k - 1);
}

// sigma2_p(k) / sigma2_p(infinity) - 1 = (1-p)^(k-1) (k^2 p^2 + (1-p)(1-(1-p)^k)) / q(p,k).
// Positive and strictly decreasing in k; stays representable long after
// sigma2_p itself has converged to the last bit.
inline double sigma2_p_excess(double p, int k) {
  const double y = 1.0 - p;
  const double yk1 = std::pow(y, k - 1);
  const double e = yk1 * (static_cast<double>(k) * k * p * p + y * (1.0 - yk1 * y));
  return e / q_factor(p, k);
}

inline AsymCov covariance_closed_form(double p, double lambda, int k, double t) {
  detail::check_params(p, lambda, t);
  mlnd::detail::require(k >= 1, "k must be >= 1");
  AsymCov c;
  c.q = q_factor(p, k);
  c.h = h_factor(p, k);
  if (!(c.q > kSingularThreshold))
    throw Error(Errc::singular_information,
                "information matrix is singular (q(p,k) = " + std::to_string(c.q) + ")");
  const double y = 1.0 - p;
  const double lt = lambda * t;
  // (1 - y^k) y p^2 / (lt q), written as limit * (1 + excess).
  c.sigma2_p = y * p * p / lt * (1.0 + sigma2_p_excess(p, k));
  c.sigma2_lambda = lambda * c.h / (t * c.q);
  // k p (y^(k+1) - y^k) / (t q)
  c.sigma_p_lambda = -static_cast<double>(k) * p * p * std::pow(y, k) / (t * c.q);
  return c;
}

// Inverse of the summed per-layer information evaluated entirely in Real.
// In double the off-diagonal term cancels to about k p^2 (1-p)^k, so its
// relative accuracy is lost once (1-p)^k drops below rounding of the
// per-layer terms; a wider Real keeps it.
template <class Real>
struct InverseInfo {
  Real sigma2_p;
  Real sigma2_lambda;
  Real sigma_p_lambda;
};

template <class Real>
InverseInfo<Real> inverse_summed_information(const Real& p, const Real& lambda, int k,
                                             const Real& t) {
  using std::pow;
  Real pp = 0, pl = 0, ll = 0;
  const Real y = 1 - p;
  for (int i = 1; i <= k; ++i) {
    const Real m = p * pow(y, i - 1) * lambda * t;
    const Real dm_dp = lambda * t * pow(y, i - 2) * (1 - i * p);
    const Real dm_dl = m / lambda;
    pp += dm_dp * dm_dp / m;
    pl += dm_dp * dm_dl / m;
    ll += dm_dl * dm_dl / m;
  }
  const Real det = pp * ll - pl * pl;
  return {ll / det, pp / det, -pl / det};
}

// Covariance by direct inversion of the summed per-layer information.
inline AsymCov covariance_numeric(double p, double lambda, int k, double t) {
  detail::check_params(p, lambda, t);
  mlnd::detail::require(k >= 1, "k must be >= 1");
  const auto info = fisher_summed(p, lambda, k, t);
  const double det = info.determinant();
  const double scale = info.pp * info.ll;
  if (!(det > kSingularThreshold * scale))
    throw Error(Errc::singular_information, "summed Fisher information is singular");
  AsymCov c;
  c.sigma2_p = info.ll / det;
  c.sigma2_lambda = info.pp / det;
  c.sigma_p_lambda = -info.pl / det;
  // Recover q and h from the inverse so both routes expose the same fields.
  const double y = 1.0 - p;
  c.q = (1.0 - std::pow(y, k)) * y * p * p / (lambda * t * c.sigma2_p);
  c.h = c.sigma2_lambda * t * c.q / lambda;
  return c;
}

}  // namespace mlnd::asymptotics
