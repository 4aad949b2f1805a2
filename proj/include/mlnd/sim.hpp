#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>

#include "mlnd/error.hpp"
#include "mlnd/random.hpp"
#include "mlnd/types.hpp"

namespace mlnd::sim {

// Stream domains keep the two simulators (and the harness) on disjoint
// substreams for the same (seed, run) pair.
inline constexpr std::uint32_t kLayerDomain = 0x6c617972;  // "layr"
inline constexpr std::uint32_t kEventDomain = 0x65766e74;  // "evnt"

// Largest incident count per run the event-level walker accepts.
inline constexpr double kMaxIncidentMean = 2147483647.0;

namespace detail {

inline void check_inputs(const DetectorConfig& config, const BeamParams& beam, std::size_t n) {
  config.validate();
  beam.validate();
  mlnd::detail::require(n >= 1, "run count n must be >= 1");
}

}  // namespace detail

// Per-layer counts drawn directly from the independent Poisson layer
// processes with means p (1-p)^(i-1) lambda t.
inline CountsMatrix simulate_counts(const DetectorConfig& config, const BeamParams& beam,
                                    std::size_t n, std::uint64_t seed) {
  detail::check_inputs(config, beam, n);
  CountsMatrix out(n, config.k);
  for (std::size_t j = 0; j < n; ++j) {
    Stream rng(seed, j, kLayerDomain);
    auto row = out.row(j);
    for (int i = 0; i < config.k; ++i) row[static_cast<std::size_t>(i)] =
        poisson(rng, beam.layer_mean(i + 1, config.t));
  }
  return out;
}

// Neutron-by-neutron simulation: X0 ~ Poisson(lambda t) incident neutrons per
// run, each absorbed at a layer with probability p or passed to the next one.
inline SimTrace simulate_event_level(const DetectorConfig& config, const BeamParams& beam,
                                     std::size_t n, std::uint64_t seed) {
  detail::check_inputs(config, beam, n);
  const double mean = beam.lambda * config.t;
  mlnd::detail::require(mean <= kMaxIncidentMean,
                        "lambda * t exceeds the event-level walker cap of 2^31-1 neutrons");

  SimTrace trace;
  trace.incident.assign(n, 0);
  trace.transmitted.assign(n, 0);
  trace.absorbed_per_layer = CountsMatrix(n, config.k);

  for (std::size_t j = 0; j < n; ++j) {
    Stream rng(seed, j, kEventDomain);
    const auto incident = std::min<std::int64_t>(poisson(rng, mean),
                                                 std::numeric_limits<std::int32_t>::max());
    auto row = trace.absorbed_per_layer.row(j);
    std::int64_t transmitted = 0;
    for (std::int64_t neutron = 0; neutron < incident; ++neutron) {
      int layer = 0;
      while (layer < config.k && !(rng.uniform() < beam.p)) ++layer;
      if (layer < config.k)
        ++row[static_cast<std::size_t>(layer)];
      else
        ++transmitted;
    }
    trace.incident[j] = incident;
    trace.transmitted[j] = transmitted;
  }
  return trace;
}

// Drops the incident/transmitted bookkeeping.
inline CountsMatrix trace_to_counts(const SimTrace& trace) { return trace.absorbed_per_layer; }

}  // namespace mlnd::sim
