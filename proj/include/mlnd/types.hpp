#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlnd/error.hpp"

namespace mlnd {

using count_t = std::int64_t;

// Detector geometry and exposure. SI units throughout.
struct DetectorConfig {
  int k = 1;              // number of layers
  double t = 1.0;         // exposure time per run [s]
  double rho_at = 1e29;   // atomic density of the absorber [m^-3]
  double d_l = 1e-6;      // layer thickness [m]

  void validate() const {
    detail::require(k >= 1, "DetectorConfig.k must be >= 1");
    detail::require(t > 0 && std::isfinite(t), "DetectorConfig.t must be > 0");
    detail::require(rho_at > 0 && std::isfinite(rho_at), "DetectorConfig.rho_at must be > 0");
    detail::require(d_l > 0 && std::isfinite(d_l), "DetectorConfig.d_l must be > 0");
  }
};

// Absorption probability per layer and beam intensity [1/s].
struct BeamParams {
  double p = 0.0;
  double lambda = 0.0;

  void validate() const {
    detail::require(p >= 0.0 && p <= 1.0, "BeamParams.p must lie in [0, 1]");
    detail::require(lambda >= 0.0 && std::isfinite(lambda), "BeamParams.lambda must be >= 0");
  }

  // Expected count at 1-based layer i over exposure t: p (1-p)^(i-1) lambda t.
  double layer_mean(int i, double t) const {
    if (p == 0.0 || lambda == 0.0) return 0.0;
    return p * std::pow(1.0 - p, i - 1) * lambda * t;
  }
};

// n runs x k layers of detection counts, row-major (one row per run).
class CountsMatrix {
 public:
  CountsMatrix() = default;
  CountsMatrix(std::size_t runs, int layers)
      : n_(runs), k_(layers), data_(runs * static_cast<std::size_t>(layers), 0) {
    detail::require(layers >= 1, "CountsMatrix needs at least one layer");
  }

  // Builds from nested rows; every row must have the same nonzero length
  // and only nonnegative entries.
  static CountsMatrix from_rows(const std::vector<std::vector<count_t>>& rows) {
    detail::require(!rows.empty(), "CountsMatrix needs at least one run");
    const auto k = rows.front().size();
    detail::require(k >= 1, "CountsMatrix needs at least one layer");
    CountsMatrix m(rows.size(), static_cast<int>(k));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      detail::require(rows[j].size() == k, "CountsMatrix rows must all have " +
                                               std::to_string(k) + " entries (row " +
                                               std::to_string(j + 1) + " differs)");
      for (std::size_t i = 0; i < k; ++i) m.set(j, static_cast<int>(i), rows[j][i]);
    }
    return m;
  }

  std::size_t runs() const noexcept { return n_; }
  int layers() const noexcept { return k_; }

  // 0-based run j, 0-based layer i.
  count_t operator()(std::size_t j, int i) const noexcept {
    return data_[j * static_cast<std::size_t>(k_) + static_cast<std::size_t>(i)];
  }

  void set(std::size_t j, int i, count_t v) {
    detail::require(v >= 0, "counts must be nonnegative");
    data_[j * static_cast<std::size_t>(k_) + static_cast<std::size_t>(i)] = v;
  }

  std::span<const count_t> row(std::size_t j) const noexcept {
    return {data_.data() + j * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
  }
  std::span<count_t> row(std::size_t j) noexcept {
    return {data_.data() + j * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
  }

  // Per-layer totals over all runs.
  std::vector<count_t> column_sums() const {
    std::vector<count_t> out(static_cast<std::size_t>(k_), 0);
    for (std::size_t j = 0; j < n_; ++j)
      for (int i = 0; i < k_; ++i) out[static_cast<std::size_t>(i)] += (*this)(j, i);
    return out;
  }

  bool operator==(const CountsMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  int k_ = 0;
  std::vector<count_t> data_;
};

// Event-level bookkeeping of one simulation: per run, incident neutrons,
// absorptions per layer and neutrons leaving the last layer.
struct SimTrace {
  std::vector<count_t> incident;
  CountsMatrix absorbed_per_layer;
  std::vector<count_t> transmitted;

  std::size_t runs() const noexcept { return incident.size(); }
};

}  // namespace mlnd
