// mlnd: simulate multilayer detector counts, estimate (p, lambda) and the
// beam wavelength, and run Monte Carlo coverage / sweep studies.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlnd/io.hpp"
#include "mlnd/mlnd.hpp"

namespace {

using nlohmann::json;
using namespace mlnd;

enum Exit : int { kOk = 0, kInputError = 2, kIoError = 3, kEstimationError = 4 };

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double round_sig(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return std::stod(os.str());
}

io::RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config file '" + path + "'");
  return io::parse_run_config(in);
}

CountsMatrix load_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open counts file '" + path + "'");
  return io::read_counts_csv(in);
}

// Writes through a temporary string so a failed run never leaves a partial file.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open output file '" + out_path + "'");
  out << text;
  out.close();
  if (!out) throw IoFailure("failed writing '" + out_path + "'");
}

json error_json(const Error& e) {
  json j = {{"error", std::string(errc_name(e.code()))}, {"message", e.what()}};
  if (!e.stage().empty()) j["stage"] = e.stage();
  return j;
}

std::string full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw Error(Errc::invalid_argument, "--grid: '" + item + "' is not a number", "input");
    out.push_back(v);
  }
  return out;
}

struct Options {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool json_output = false;
  unsigned threads = 1;

  std::string config_path;
  std::string counts_path;
  double t = 1.0;
  std::optional<double> alpha;
  bool chi_fixed = false;
  bool event_level = false;
  std::string variable = "layers";
  std::string grid;
  std::optional<std::size_t> replicates;
};

int cmd_simulate(const Options& o) {
  auto rc = load_config(o.config_path);
  if (o.seed) rc.seed = *o.seed;
  const auto beam = rc.beam();
  const auto counts =
      o.event_level ? sim::trace_to_counts(sim::simulate_event_level(rc.detector, beam, rc.n, rc.seed))
                    : sim::simulate_counts(rc.detector, beam, rc.n, rc.seed);
  std::ostringstream os;
  io::write_counts_csv(os, counts);
  emit(o.out, os.str());
  return kOk;
}

int cmd_estimate(const Options& o) {
  const auto counts = load_counts(o.counts_path);
  if (!(o.t > 0.0)) throw Error(Errc::invalid_argument, "--t must be > 0", "input");
  try {
    const auto r = estimator::mle(counts, o.t);
    json j = {{"p_hat", r.p_hat},       {"lambda_hat", r.lambda_hat}, {"y_ip", r.y_ip},
              {"residual", r.residual}, {"solver_iters", r.solver_iters},
              {"warnings", r.warnings}};
    if (o.json_output) {
      emit(o.out, j.dump(2) + "\n");
    } else {
      std::ostringstream os;
      os << "p_hat      " << full(r.p_hat) << "\n"
         << "lambda_hat " << full(r.lambda_hat) << " 1/s\n"
         << "y_ip       " << full(r.y_ip) << "\n"
         << "residual   " << r.residual << "\n";
      for (const auto& w : r.warnings) os << "warning    " << w << "\n";
      emit(o.out, os.str());
    }
    return kOk;
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_argument) throw;
    std::cout << error_json(e.with_stage("mle")).dump(2) << "\n";
    return kEstimationError;
  }
}

int cmd_wavelength(const Options& o) {
  const auto counts = load_counts(o.counts_path);
  const auto rc = load_config(o.config_path);
  const double alpha = o.alpha.value_or(rc.alpha);
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(Errc::invalid_argument, "--alpha must lie in (0, 1)", "input");
  try {
    const auto w = wavelength::estimate_wavelength(counts, rc.detector, rc.xsec, alpha);
    constexpr double A = wavelength::kAngstrom;
    json j = {{"mu_hat_angstrom", round_sig(w.mu_hat / A, 4)},
              {"ci_angstrom", {round_sig(w.ci_lo / A, 4), round_sig(w.ci_hi / A, 4)}},
              {"mu_hat_m", w.mu_hat},
              {"ci_m", {w.ci_lo, w.ci_hi}},
              {"s_p", w.s_p},
              {"s_chi", w.s_chi},
              {"gamma", w.gamma},
              {"alpha", w.alpha},
              {"p_hat", w.p_hat},
              {"lambda_hat", w.lambda_hat}};
    emit(o.out, j.dump(2) + "\n");
    return kOk;
  } catch (const Error& e) {
    if (e.stage() == "input") throw;
    std::cout << error_json(e).dump(2) << "\n";
    return kEstimationError;
  }
}

harness::Scenario scenario_from(const io::RunConfig& rc, std::optional<double> alpha) {
  harness::Scenario sc;
  sc.detector = rc.detector;
  sc.beam = rc.beam();
  sc.xsec = rc.xsec;
  sc.n = rc.n;
  sc.alpha = alpha.value_or(rc.alpha);
  return sc;
}

int cmd_coverage(const Options& o) {
  auto rc = load_config(o.config_path);
  if (o.seed) rc.seed = *o.seed;
  if (o.replicates) rc.replicates = *o.replicates;
  const auto sc = scenario_from(rc, o.alpha);
  const auto rep = harness::coverage_experiment(sc, rc.replicates, rc.seed, o.chi_fixed, o.threads);
  std::ostringstream os;
  os << "replicates,nominal,empirical,mc_stderr,failures\n"
     << rep.replicates << ',' << full(rep.nominal) << ',' << full(rep.empirical) << ','
     << full(rep.mc_stderr) << ',' << rep.failures << '\n';
  emit(o.out, os.str());
  return kOk;
}

int cmd_sweep(const Options& o) {
  auto rc = load_config(o.config_path);
  if (o.seed) rc.seed = *o.seed;
  if (o.replicates) rc.replicates = *o.replicates;
  harness::SweepSpec spec;
  if (o.variable == "layers")
    spec.variable = harness::SweepVariable::layers;
  else if (o.variable == "intensity")
    spec.variable = harness::SweepVariable::intensity;
  else if (o.variable == "runs")
    spec.variable = harness::SweepVariable::runs;
  else
    throw Error(Errc::invalid_argument, "--variable must be layers, intensity or runs", "input");
  spec.grid = parse_grid(o.grid);
  spec.base = scenario_from(rc, o.alpha);
  spec.replicates = rc.replicates;
  spec.seed = rc.seed;
  spec.threads = o.threads;
  const auto rows = harness::run_sweep(spec);
  std::ostringstream os;
  os << "grid_value,s_p_mean,s_chi_mean,mu_hat_mean,ci_halfwidth_mean\n";
  for (const auto& r : rows)
    os << full(r.grid_value) << ',' << full(r.s_p_mean) << ',' << full(r.s_chi_mean) << ','
       << full(r.mu_hat_mean) << ',' << full(r.ci_halfwidth_mean) << '\n';
  emit(o.out, os.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilayer neutron detector simulator and wavelength estimator"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.seed, "Master seed (overrides the config)");
  app.add_option("--out", o.out, "Output file (default: standard output)");
  app.add_flag("--json", o.json_output, "Structured JSON output");
  app.add_option("--threads", o.threads, "Worker threads for Monte Carlo studies")
      ->check(CLI::Range(1u, 256u));

  auto* simulate = app.add_subcommand("simulate", "Simulate per-layer counts to CSV");
  simulate->add_option("config", o.config_path, "Run configuration (JSON)")->required();
  simulate->add_flag("--event-level", o.event_level, "Walk individual neutrons through the layers");

  auto* estimate = app.add_subcommand("estimate", "Maximum likelihood estimate of (p, lambda)");
  estimate->add_option("counts", o.counts_path, "Counts CSV")->required();
  estimate->add_option("--t", o.t, "Exposure time per run [s]");

  auto* wl = app.add_subcommand("wavelength", "Wavelength estimate with confidence interval");
  wl->add_option("counts", o.counts_path, "Counts CSV")->required();
  wl->add_option("config", o.config_path, "Run configuration (JSON)")->required();
  wl->add_option("--alpha", o.alpha, "1 - confidence level");

  auto* cov = app.add_subcommand("coverage", "Monte Carlo coverage of the interval");
  cov->add_option("config", o.config_path, "Run configuration (JSON)")->required();
  cov->add_option("--alpha", o.alpha, "1 - confidence level");
  cov->add_option("--replicates", o.replicates, "Monte Carlo replicates");
  cov->add_flag("--chi-fixed", o.chi_fixed, "Treat chi as known (drop the cross-section term)");

  auto* sweep = app.add_subcommand("sweep", "Error terms over a parameter grid");
  sweep->add_option("config", o.config_path, "Run configuration (JSON)")->required();
  sweep->add_option("--variable", o.variable, "layers | intensity | runs");
  sweep->add_option("--grid", o.grid, "Comma-separated grid values")->required();
  sweep->add_option("--alpha", o.alpha, "1 - confidence level");
  sweep->add_option("--replicates", o.replicates, "Monte Carlo replicates per grid value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*estimate) return cmd_estimate(o);
    if (*wl) return cmd_wavelength(o);
    if (*cov) return cmd_coverage(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const IoFailure& e) {
    std::cerr << "mlnd: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    std::cerr << "mlnd: " << e.what() << "\n";
    if (o.json_output) std::cout << error_json(e).dump(2) << "\n";
    return kInputError;
  }
  return kInputError;
}
