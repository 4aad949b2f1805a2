#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "mlnd/sim.hpp"

using namespace mlnd;

namespace {

DetectorConfig detector(int k, double t = 1.0) {
  DetectorConfig d;
  d.k = k;
  d.t = t;
  return d;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments column_moments(const CountsMatrix& m, int i) {
  const auto n = static_cast<double>(m.runs());
  double sum = 0.0;
  for (std::size_t j = 0; j < m.runs(); ++j) sum += static_cast<double>(m(j, i));
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t j = 0; j < m.runs(); ++j) {
    const double d = static_cast<double>(m(j, i)) - mean;
    ss += d * d;
  }
  return {mean, ss / (n - 1.0)};
}

}  // namespace

TEST_CASE("poisson sampler matches mean and variance on both branches") {
  for (double mean : {0.3, 4.0, 9.99, 10.0, 37.5, 1e4}) {
    Stream rng(99, static_cast<std::uint64_t>(mean * 100));
    const int draws = 20000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < draws; ++i) {
      const auto x = static_cast<double>(poisson(rng, mean));
      s += x;
      ss += x * x;
    }
    const double m = s / draws;
    const double v = ss / draws - m * m;
    INFO("mean " << mean);
    CHECK(std::fabs(m - mean) <= 5.0 * std::sqrt(mean / draws));
    // Var of the sample variance of a Poisson is about (2 mean^2 + mean) / draws.
    CHECK(std::fabs(v - mean) <= 5.0 * std::sqrt((2.0 * mean * mean + mean) / draws));
  }
}

TEST_CASE("poisson sampler pmf at small mean") {
  Stream rng(5, 0);
  const double mean = 2.5;
  const int draws = 50000;
  std::vector<int> hist(8, 0);
  for (int i = 0; i < draws; ++i) {
    const auto x = poisson(rng, mean);
    if (x < 8) ++hist[static_cast<std::size_t>(x)];
  }
  double pmf = std::exp(-mean);
  for (int x = 0; x < 8; ++x) {
    const double expected = pmf * draws;
    INFO("x = " << x);
    CHECK(std::fabs(hist[static_cast<std::size_t>(x)] - expected) <= 5.0 * std::sqrt(expected) + 1);
    pmf *= mean / (x + 1);
  }
}

TEST_CASE("simulate_counts degenerate beams give zero matrices") {
  const auto zero_p = sim::simulate_counts(detector(4), {0.0, 1e5}, 3, 1);
  const auto zero_l = sim::simulate_counts(detector(4), {0.5, 0.0}, 3, 1);
  for (const auto* m : {&zero_p, &zero_l}) {
    REQUIRE(m->runs() == 3);
    REQUIRE(m->layers() == 4);
    for (std::size_t j = 0; j < 3; ++j)
      for (int i = 0; i < 4; ++i) CHECK((*m)(j, i) == 0);
  }
}

TEST_CASE("simulate_counts first-layer mean") {
  const auto m = sim::simulate_counts(detector(25), {0.1, 1e5}, 100, 7);
  const double m1 = 1e4;
  CHECK(std::fabs(column_moments(m, 0).mean - m1) <= 5.0 * std::sqrt(m1 / 100.0));
}

TEST_CASE("simulate_counts is deterministic and run-local") {
  const auto a = sim::simulate_counts(detector(5), {0.3, 40.0}, 50, 123);
  const auto b = sim::simulate_counts(detector(5), {0.3, 40.0}, 50, 123);
  CHECK(a == b);
  // Run j only depends on (seed, j): a shorter simulation is a prefix.
  const auto prefix = sim::simulate_counts(detector(5), {0.3, 40.0}, 10, 123);
  for (std::size_t j = 0; j < 10; ++j)
    for (int i = 0; i < 5; ++i) CHECK(prefix(j, i) == a(j, i));
  const auto other = sim::simulate_counts(detector(5), {0.3, 40.0}, 50, 124);
  CHECK_FALSE(a == other);
}

TEST_CASE("simulate_counts rejects invalid input") {
  CHECK_THROWS_AS(sim::simulate_counts(detector(0), {0.1, 1.0}, 1, 0), Error);
  CHECK_THROWS_AS(sim::simulate_counts(detector(2), {1.5, 1.0}, 1, 0), Error);
  CHECK_THROWS_AS(sim::simulate_counts(detector(2), {0.1, -1.0}, 1, 0), Error);
  CHECK_THROWS_AS(sim::simulate_counts(detector(2), {0.1, 1.0}, 0, 0), Error);
  try {
    sim::simulate_counts(detector(2, -1.0), {0.1, 1.0}, 1, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_argument);
  }
}

TEST_CASE("event-level walker edge probabilities") {
  SECTION("p = 1 absorbs everything at the first layer") {
    const auto tr = sim::simulate_event_level(detector(3), {1.0, 20.0}, 20, 11);
    for (std::size_t j = 0; j < tr.runs(); ++j) {
      CHECK(tr.absorbed_per_layer(j, 0) == tr.incident[j]);
      CHECK(tr.absorbed_per_layer(j, 1) == 0);
      CHECK(tr.transmitted[j] == 0);
    }
  }
  SECTION("p = 0 transmits everything") {
    const auto tr = sim::simulate_event_level(detector(3), {0.0, 20.0}, 20, 11);
    for (std::size_t j = 0; j < tr.runs(); ++j) {
      for (int i = 0; i < 3; ++i) CHECK(tr.absorbed_per_layer(j, i) == 0);
      CHECK(tr.transmitted[j] == tr.incident[j]);
    }
  }
}

TEST_CASE("event-level walker conserves neutrons") {
  const auto tr = sim::simulate_event_level(detector(6), {0.17, 300.0}, 200, 8);
  for (std::size_t j = 0; j < tr.runs(); ++j) {
    const auto row = tr.absorbed_per_layer.row(j);
    const auto absorbed = std::accumulate(row.begin(), row.end(), count_t{0});
    CHECK(tr.incident[j] == absorbed + tr.transmitted[j]);
  }
}

TEST_CASE("event-level walker per-layer means") {
  const std::size_t n = 200;
  const auto tr = sim::simulate_event_level(detector(3), {0.5, 50.0}, n, 3);
  const double expected[] = {25.0, 12.5, 6.25};
  for (int i = 0; i < 3; ++i) {
    const auto mom = column_moments(tr.absorbed_per_layer, i);
    INFO("layer " << i + 1);
    CHECK(std::fabs(mom.mean - expected[i]) <= 5.0 * std::sqrt(expected[i] / n));
  }
}

TEST_CASE("event-level walker rejects beams above the incident cap") {
  CHECK_THROWS_AS(sim::simulate_event_level(detector(2), {0.5, 3e9}, 1, 0), Error);
}

TEST_CASE("trace_to_counts projects the absorbed counts") {
  SimTrace tr;
  tr.incident = {5, 4};
  tr.transmitted = {2, 1};
  tr.absorbed_per_layer = CountsMatrix::from_rows({{2, 1}, {0, 3}});
  CHECK(sim::trace_to_counts(tr) == CountsMatrix::from_rows({{2, 1}, {0, 3}}));

  SimTrace empty;
  empty.incident = {0, 0};
  empty.transmitted = {0, 0};
  empty.absorbed_per_layer = CountsMatrix(2, 3);
  const auto m = sim::trace_to_counts(empty);
  CHECK(m.runs() == 2);
  CHECK(m.layers() == 3);
  for (std::size_t j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) CHECK(m(j, i) == 0);
}

TEST_CASE("the two simulators agree in distribution") {
  const std::size_t n = 400;
  const auto det = detector(4);
  const BeamParams beam{0.25, 60.0};
  const auto direct = sim::simulate_counts(det, beam, n, 21);
  const auto walked = sim::trace_to_counts(sim::simulate_event_level(det, beam, n, 21));
  for (int i = 0; i < 4; ++i) {
    const double m = beam.layer_mean(i + 1, det.t);
    const auto a = column_moments(direct, i);
    const auto b = column_moments(walked, i);
    INFO("layer " << i + 1);
    // Difference of two independent means, each with variance m / n.
    CHECK(std::fabs(a.mean - b.mean) <= 5.0 * std::sqrt(2.0 * m / n));
    // Sample variance of a Poisson has variance about (2 m^2 + m) / n.
    CHECK(std::fabs(a.var - b.var) <= 5.0 * std::sqrt(2.0 * (2.0 * m * m + m) / n));
  }
}

TEST_CASE("counts matrix rejects ragged or negative rows") {
  CHECK_THROWS_AS(CountsMatrix::from_rows({{1, 2}, {3}}), Error);
  CHECK_THROWS_AS(CountsMatrix::from_rows({{1, -2}}), Error);
  CHECK_THROWS_AS(CountsMatrix::from_rows({}), Error);
}
