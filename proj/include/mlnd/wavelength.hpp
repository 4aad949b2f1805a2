#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "mlnd/asymptotics.hpp"
#include "mlnd/error.hpp"
#include "mlnd/estimator.hpp"
#include "mlnd/types.hpp"

namespace mlnd::wavelength {

inline constexpr double kAngstrom = 1e-10;  // [m]

// Linear cross-section model Sigma(mu) = varsigma * mu, aggregated with the
// layer material into chi = rho_at * d_l * varsigma, so p = 1 - exp(-chi mu).
struct CrossSectionModel {
  double varsigma_hat = 0.0;     // [m^-2]; 0 when built directly from chi
  double sigma2_varsigma = 0.0;
  std::size_t n_prime = 1;       // sample size behind the estimate
  double chi_hat = 0.0;          // [m^-1]
  double sigma2_chi = 0.0;       // asymptotic variance of sqrt(n')(chi_hat - chi) [m^-2]

  static CrossSectionModel from_chi(double chi_hat, double sigma2_chi, std::size_t n_prime) {
    CrossSectionModel m;
    m.chi_hat = chi_hat;
    m.sigma2_chi = sigma2_chi;
    m.n_prime = n_prime;
    m.validate();
    return m;
  }

  static CrossSectionModel from_varsigma(double varsigma_hat, double sigma2_varsigma,
                                         std::size_t n_prime, const DetectorConfig& det) {
    CrossSectionModel m;
    m.varsigma_hat = varsigma_hat;
    m.sigma2_varsigma = sigma2_varsigma;
    m.n_prime = n_prime;
    m.chi_hat = det.rho_at * det.d_l * varsigma_hat;
    m.sigma2_chi = det.rho_at * det.rho_at * det.d_l * det.d_l * sigma2_varsigma;
    m.validate();
    return m;
  }

  // Values used for the reference detector studies.
  static CrossSectionModel reference() { return from_chi(2.142e8, 0.021e8, 45); }

  double sigma_chi() const { return std::sqrt(sigma2_chi); }

  void validate() const {
    detail::require(chi_hat > 0.0 && std::isfinite(chi_hat), "chi_hat must be > 0");
    detail::require(sigma2_chi >= 0.0 && std::isfinite(sigma2_chi), "sigma2_chi must be >= 0");
    detail::require(n_prime >= 1, "n_prime must be >= 1");
  }
};

inline double mu_from_p(double p, double chi) {
  detail::require_domain(p >= 0.0 && p < 1.0, "mu_from_p needs p in [0, 1)");
  detail::require_domain(chi > 0.0, "mu_from_p needs chi > 0");
  return -std::log1p(-p) / chi;
}

inline double p_from_mu(double mu, double chi) {
  detail::require_domain(mu >= 0.0, "p_from_mu needs mu >= 0");
  detail::require_domain(chi > 0.0, "p_from_mu needs chi > 0");
  return -std::expm1(-chi * mu);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Inverse standard normal CDF: Acklam's rational approximation followed by
// one Halley step against erfc.
inline double normal_quantile(double u) {
  detail::require_domain(u > 0.0 && u < 1.0, "normal_quantile needs u in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425;

  // Work in the lower half and reflect, so the result is exactly antisymmetric.
  const bool upper = u > 0.5;
  const double v = upper ? 1.0 - u : u;
  if (v == 0.5) return 0.0;

  double x;
  if (v < lo) {
    const double q = std::sqrt(-2.0 * std::log(v));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = v - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }

  const double e = normal_cdf(x) - v;
  const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= step / (1.0 + 0.5 * x * step);

  return upper ? -x : x;
}

struct DeltaTerms {
  double s_p = 0.0;    // statistical term [m]
  double s_chi = 0.0;  // cross-section term [m]
};

// First-order propagation of the p_hat and chi_hat uncertainties into mu:
//   s_p   = sigma_p / (sqrt(n) (1 - p) chi)
//   s_chi = |log(1 - p)| sigma_chi / (sqrt(n') chi^2)
inline DeltaTerms delta_terms(double p_hat, double sigma2_p, const CrossSectionModel& xsec,
                              std::size_t n) {
  detail::require_domain(p_hat > 0.0 && p_hat < 1.0, "delta_terms needs p_hat in (0, 1)");
  detail::require(n >= 1, "n must be >= 1");
  xsec.validate();
  const double chi = xsec.chi_hat;
  DeltaTerms out;
  out.s_p = std::sqrt(sigma2_p) / (std::sqrt(static_cast<double>(n)) * (1.0 - p_hat) * chi);
  out.s_chi = std::fabs(std::log1p(-p_hat)) * xsec.sigma_chi() /
              (std::sqrt(static_cast<double>(xsec.n_prime)) * chi * chi);
  return out;
}

inline DeltaTerms delta_terms(const estimator::MleResult& fit, const asymptotics::AsymCov& cov,
                              const CrossSectionModel& xsec, std::size_t n) {
  return delta_terms(fit.p_hat, cov.sigma2_p, xsec, n);
}

struct WavelengthEstimate {
  double mu_hat = 0.0;               // [m]
  double s_p = 0.0;                  // [m]
  double s_chi = 0.0;                // [m]
  double s_total_over_sqrt_n = 0.0;  // S_n / sqrt(n) [m]
  double gamma = 0.0;                // n' / n
  double alpha = 0.0;
  double z = 0.0;                    // upper alpha/2 normal quantile
  double ci_lo = 0.0;                // [m]
  double ci_hi = 0.0;                // [m]

  // Filled by estimate_wavelength.
  double p_hat = 0.0;
  double lambda_hat = 0.0;

  double half_width() const { return z * s_total_over_sqrt_n; }
  bool covers(double mu) const { return ci_lo <= mu && mu <= ci_hi; }
};

// Two-sided 100(1 - alpha)% interval mu_hat +- z_{alpha/2} sqrt(s_p^2 + s_chi^2),
// with z_{alpha/2} the upper alpha/2 quantile.
inline WavelengthEstimate confidence_interval(double mu_hat, double s_p, double s_chi,
                                              double alpha, double gamma = 0.0) {
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  WavelengthEstimate w;
  w.mu_hat = mu_hat;
  w.s_p = s_p;
  w.s_chi = s_chi;
  w.s_total_over_sqrt_n = std::hypot(s_p, s_chi);
  w.gamma = gamma;
  w.alpha = alpha;
  w.z = normal_quantile(1.0 - 0.5 * alpha);
  w.ci_lo = mu_hat - w.half_width();
  w.ci_hi = mu_hat + w.half_width();
  return w;
}

struct EstimateOptions {
  // Treat chi as exactly known: the cross-section term is left out (s_chi = 0).
  bool chi_fixed = false;
  double solver_tol = 1e-12;
};

// mle -> covariance at the plug-in values -> delta terms -> interval.
// Errors carry the stage that raised them.
inline WavelengthEstimate estimate_wavelength(const CountsMatrix& data, const DetectorConfig& config,
                                              const CrossSectionModel& xsec, double alpha,
                                              const EstimateOptions& opts = {}) {
  try {
    config.validate();
    xsec.validate();
    detail::require(data.layers() == config.k,
                    "counts have " + std::to_string(data.layers()) +
                        " layers but the detector config has k = " + std::to_string(config.k));
  } catch (const Error& e) {
    throw e.with_stage("input");
  }

  estimator::MleResult fit;
  try {
    fit = estimator::mle(data, config.t, opts.solver_tol);
  } catch (const Error& e) {
    throw e.with_stage("mle");
  }
  if (fit.boundary)
    throw Error(Errc::domain_error,
                "boundary estimate p_hat = 1 (all detections at layer 1): wavelength undefined",
                "mle");

  asymptotics::AsymCov cov;
  try {
    cov = asymptotics::covariance_closed_form(fit.p_hat, fit.lambda_hat, config.k, config.t);
  } catch (const Error& e) {
    throw e.with_stage("covariance");
  }

  DeltaTerms terms;
  double mu_hat = 0.0;
  try {
    terms = delta_terms(fit, cov, xsec, data.runs());
    mu_hat = mu_from_p(fit.p_hat, xsec.chi_hat);
  } catch (const Error& e) {
    throw e.with_stage("delta");
  }
  if (opts.chi_fixed) terms.s_chi = 0.0;

  const double gamma =
      static_cast<double>(xsec.n_prime) / static_cast<double>(data.runs());
  auto w = confidence_interval(mu_hat, terms.s_p, terms.s_chi, alpha, gamma);
  w.p_hat = fit.p_hat;
  w.lambda_hat = fit.lambda_hat;
  return w;
}

}  // namespace mlnd::wavelength
