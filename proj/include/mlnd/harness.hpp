#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "mlnd/error.hpp"
#include "mlnd/estimator.hpp"
#include "mlnd/random.hpp"
#include "mlnd/sim.hpp"
#include "mlnd/types.hpp"
#include "mlnd/wavelength.hpp"

namespace mlnd::harness {

inline constexpr std::uint32_t kReplicateDomain = 0x7265706c;  // "repl"

// Seed of replicate r. Depends only on (seed, r): every grid cell of a sweep
// reuses the same replicate seeds (common random numbers), and a replicate
// can be reproduced in isolation.
inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate) {
  Stream s(seed, replicate, kReplicateDomain);
  return s.bits();
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. fn must only
// write to slot i of its output.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += threads) fn(i);
    });
  }
}

struct Scenario {
  DetectorConfig detector;
  BeamParams beam;
  wavelength::CrossSectionModel xsec = wavelength::CrossSectionModel::reference();
  std::size_t n = 10;
  double alpha = 0.01;
};

// One replicate of the full pipeline; nullopt when estimation failed.
inline std::optional<wavelength::WavelengthEstimate> run_replicate(
    const Scenario& sc, std::uint64_t seed, const wavelength::EstimateOptions& opts = {}) {
  const auto data = sim::simulate_counts(sc.detector, sc.beam, sc.n, seed);
  try {
    return wavelength::estimate_wavelength(data, sc.detector, sc.xsec, sc.alpha, opts);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline std::vector<std::optional<wavelength::WavelengthEstimate>> run_replicates(
    const Scenario& sc, std::size_t replicates, std::uint64_t seed,
    const wavelength::EstimateOptions& opts = {}, unsigned threads = 1) {
  sc.detector.validate();
  sc.beam.validate();
  sc.xsec.validate();
  std::vector<std::optional<wavelength::WavelengthEstimate>> out(replicates);
  parallel_for(replicates, threads, [&](std::size_t r) {
    out[r] = run_replicate(sc, replicate_seed(seed, r), opts);
  });
  return out;
}

enum class SweepVariable { layers, intensity, runs };

struct SweepSpec {
  SweepVariable variable = SweepVariable::layers;
  std::vector<double> grid;
  Scenario base;
  std::size_t replicates = 2000;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const {
    detail::require(!grid.empty(), "sweep grid must be nonempty");
    for (std::size_t i = 1; i < grid.size(); ++i)
      detail::require(grid[i] > grid[i - 1], "sweep grid must be strictly increasing");
    detail::require(replicates >= 1, "replicates must be >= 1");
    if (variable != SweepVariable::intensity)
      for (double v : grid)
        detail::require(v >= 1.0 && v == std::floor(v),
                        "layers/runs grid values must be positive integers");
  }

  Scenario at(double value) const {
    Scenario sc = base;
    switch (variable) {
      case SweepVariable::layers: sc.detector.k = static_cast<int>(value); break;
      case SweepVariable::intensity: sc.beam.lambda = value; break;
      case SweepVariable::runs: sc.n = static_cast<std::size_t>(value); break;
    }
    return sc;
  }
};

struct SweepRow {
  double grid_value = 0.0;
  double s_p_mean = 0.0;
  double s_chi_mean = 0.0;
  double mu_hat_mean = 0.0;
  double ci_halfwidth_mean = 0.0;
  std::size_t evaluated = 0;
  std::size_t failures = 0;
};

// Replicate means of the error terms for each grid value. Cells are
// reduced in replicate order, so the table does not depend on `threads`.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRow> rows;
  rows.reserve(spec.grid.size());
  for (std::size_t g = 0; g < spec.grid.size(); ++g) {
    const auto sc = spec.at(spec.grid[g]);
    const auto reps = run_replicates(sc, spec.replicates, spec.seed, {}, spec.threads);
    SweepRow row;
    row.grid_value = spec.grid[g];
    for (const auto& r : reps) {
      if (!r) {
        ++row.failures;
        continue;
      }
      ++row.evaluated;
      row.s_p_mean += r->s_p;
      row.s_chi_mean += r->s_chi;
      row.mu_hat_mean += r->mu_hat;
      row.ci_halfwidth_mean += r->half_width();
    }
    if (row.evaluated > 0) {
      const auto m = static_cast<double>(row.evaluated);
      row.s_p_mean /= m;
      row.s_chi_mean /= m;
      row.mu_hat_mean /= m;
      row.ci_halfwidth_mean /= m;
    }
    rows.push_back(row);
  }
  return rows;
}

// First grid value at which the mean statistical term drops below the
// cross-section term, if any.
inline std::optional<double> crossover(const std::vector<SweepRow>& rows) {
  for (const auto& r : rows)
    if (r.evaluated > 0 && r.s_p_mean < r.s_chi_mean) return r.grid_value;
  return std::nullopt;
}

struct CoverageReport {
  double nominal = 0.0;
  double empirical = 0.0;
  std::size_t replicates = 0;
  std::size_t evaluated = 0;
  std::size_t failures = 0;
  double mc_stderr = 0.0;
};

// Fraction of replicate intervals that contain the true wavelength
// mu_from_p(p, chi_hat). With chi_fixed the cross-section term is left out
// of the interval.
inline CoverageReport coverage_experiment(const Scenario& sc, std::size_t replicates,
                                          std::uint64_t seed, bool chi_fixed,
                                          unsigned threads = 1) {
  detail::require(replicates >= 100, "coverage needs at least 100 replicates");
  detail::require(sc.beam.p > 0.0 && sc.beam.p < 1.0, "coverage needs p in (0, 1)");
  const double mu_true = wavelength::mu_from_p(sc.beam.p, sc.xsec.chi_hat);
  wavelength::EstimateOptions opts;
  opts.chi_fixed = chi_fixed;
  const auto reps = run_replicates(sc, replicates, seed, opts, threads);

  CoverageReport rep;
  rep.nominal = 1.0 - sc.alpha;
  rep.replicates = replicates;
  std::size_t covered = 0;
  for (const auto& r : reps) {
    if (!r) {
      ++rep.failures;
      continue;
    }
    ++rep.evaluated;
    if (r->covers(mu_true)) ++covered;
  }
  if (rep.evaluated > 0) {
    const auto m = static_cast<double>(rep.evaluated);
    rep.empirical = static_cast<double>(covered) / m;
    rep.mc_stderr = std::sqrt(rep.empirical * (1.0 - rep.empirical) / m);
  }
  return rep;
}

// Fraction of simulated data sets for which the score polynomial has its
// interior root (gate passes and d > 0).
inline double gate_pass_rate(const DetectorConfig& det, const BeamParams& beam, std::size_t n,
                             std::size_t replicates, std::uint64_t seed) {
  detail::require(replicates >= 1, "replicates must be >= 1");
  std::size_t pass = 0;
  for (std::size_t r = 0; r < replicates; ++r) {
    const auto data = sim::simulate_counts(det, beam, n, replicate_seed(seed, r));
    const auto st = estimator::sufficient_stats(data);
    if (!(st.s > 0.0) || st.k < 2 || !(st.z > 0.0)) continue;
    const auto co = estimator::poly_coeffs(st);
    if (!(co.a > 0.0)) continue;
    if (estimator::root_gate(co).unique_root) ++pass;
  }
  return static_cast<double>(pass) / static_cast<double>(replicates);
}

}  // namespace mlnd::harness
