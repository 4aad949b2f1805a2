#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "mlnd/error.hpp"
#include "mlnd/types.hpp"
#include "mlnd/wavelength.hpp"

namespace mlnd::io {

// Input problem with a location: a CSV line number or a JSON field path.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(Errc::invalid_argument, what, "input") {}
};

// ---------------------------------------------------------------------------
// Counts CSV: header layer_1,...,layer_k then one row per run, '\n' endings.

inline void write_counts_csv(std::ostream& os, const CountsMatrix& m) {
  for (int i = 0; i < m.layers(); ++i) os << (i ? "," : "") << "layer_" << (i + 1);
  os << '\n';
  for (std::size_t j = 0; j < m.runs(); ++j) {
    const auto row = m.row(j);
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline CountsMatrix read_counts_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("CSV line " + std::to_string(lineno) + ": " + msg);
  };
  auto next_line = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line()) throw ParseError("CSV line 1: missing header");
  const auto header = detail::split(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != "layer_" + std::to_string(i + 1))
      throw fail("expected header field 'layer_" + std::to_string(i + 1) + "', got '" +
                 std::string(header[i]) + "'");
  }
  const std::size_t k = header.size();

  std::vector<std::vector<count_t>> rows;
  while (next_line()) {
    if (line.empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != k)
      throw fail("expected " + std::to_string(k) + " fields, got " + std::to_string(cells.size()));
    std::vector<count_t> row(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto cell = cells[i];
      const auto* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, row[i]);
      if (cell.empty() || ec != std::errc{} || ptr != end)
        throw fail("field " + std::to_string(i + 1) + " is not an integer: '" + std::string(cell) +
                   "'");
      if (row[i] < 0) throw fail("field " + std::to_string(i + 1) + " is negative");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw fail("no data rows");
  return CountsMatrix::from_rows(rows);
}

// ---------------------------------------------------------------------------
// Run configuration (JSON, SI units spelled out in the field names).

struct RunConfig {
  DetectorConfig detector;
  std::optional<double> p;            // exactly one of p / mu_angstrom
  std::optional<double> mu_angstrom;
  double lambda_per_s = 1e5;
  wavelength::CrossSectionModel xsec = wavelength::CrossSectionModel::reference();
  std::size_t n = 10;
  double alpha = 0.01;
  std::uint64_t seed = 1;
  std::size_t replicates = 2000;

  // Beam with p resolved through the cross-section model when a wavelength
  // was given.
  BeamParams beam() const {
    BeamParams b;
    b.lambda = lambda_per_s;
    b.p = p ? *p : wavelength::p_from_mu(*mu_angstrom * wavelength::kAngstrom, xsec.chi_hat);
    return b;
  }
};

namespace detail {

using nlohmann::json;

template <typename T>
T get_field(const json& obj, const std::string& path, const char* key, std::optional<T> fallback) {
  const std::string where = path + "/" + key;
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ParseError("config " + where + ": missing required field");
  }
  const auto& v = obj.at(key);
  bool ok = v.is_number();
  if constexpr (std::is_unsigned_v<T>)
    ok = v.is_number_unsigned();
  else if constexpr (std::is_integral_v<T>)
    ok = v.is_number_integer();
  if (!ok) throw ParseError("config " + where + ": wrong type");
  return v.get<T>();
}

inline const json& get_object(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_object())
    throw ParseError("config " + path + "/" + key + ": missing or not an object");
  return obj.at(key);
}

inline void check(bool cond, const std::string& where, const std::string& msg) {
  if (!cond) throw ParseError("config " + where + ": " + msg);
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& doc) {
  using detail::check;
  using detail::get_field;
  check(doc.is_object(), "/", "top level must be an object");
  RunConfig rc;

  const auto& det = detail::get_object(doc, "", "detector");
  rc.detector.k = get_field<int>(det, "/detector", "k", std::nullopt);
  check(rc.detector.k >= 1, "/detector/k", "must be >= 1");
  rc.detector.t = get_field<double>(det, "/detector", "t_s", 1.0);
  check(rc.detector.t > 0, "/detector/t_s", "must be > 0");
  rc.detector.rho_at = get_field<double>(det, "/detector", "rho_at_per_m3", 1e29);
  check(rc.detector.rho_at > 0, "/detector/rho_at_per_m3", "must be > 0");
  rc.detector.d_l = get_field<double>(det, "/detector", "d_l_m", 1e-6);
  check(rc.detector.d_l > 0, "/detector/d_l_m", "must be > 0");

  if (doc.contains("xsec")) {
    const auto& xs = detail::get_object(doc, "", "xsec");
    const auto n_prime = get_field<std::size_t>(xs, "/xsec", "n_prime", std::size_t{45});
    check(n_prime >= 1, "/xsec/n_prime", "must be >= 1");
    if (xs.contains("varsigma_per_m2")) {
      check(!xs.contains("chi_per_m"), "/xsec", "give either chi_per_m or varsigma_per_m2");
      const auto vs = get_field<double>(xs, "/xsec", "varsigma_per_m2", std::nullopt);
      const auto v2 = get_field<double>(xs, "/xsec", "sigma2_varsigma", 0.0);
      check(vs > 0, "/xsec/varsigma_per_m2", "must be > 0");
      check(v2 >= 0, "/xsec/sigma2_varsigma", "must be >= 0");
      rc.xsec = wavelength::CrossSectionModel::from_varsigma(vs, v2, n_prime, rc.detector);
    } else {
      const auto chi = get_field<double>(xs, "/xsec", "chi_per_m", 2.142e8);
      const auto s2 = get_field<double>(xs, "/xsec", "sigma2_chi_per_m2", 0.021e8);
      check(chi > 0, "/xsec/chi_per_m", "must be > 0");
      check(s2 >= 0, "/xsec/sigma2_chi_per_m2", "must be >= 0");
      rc.xsec = wavelength::CrossSectionModel::from_chi(chi, s2, n_prime);
    }
  }

  if (doc.contains("beam")) {
    const auto& beam = detail::get_object(doc, "", "beam");
    const bool has_p = beam.contains("p");
    const bool has_mu = beam.contains("mu_angstrom");
    check(has_p != has_mu, "/beam", "give exactly one of p or mu_angstrom");
    if (has_p) {
      rc.p = get_field<double>(beam, "/beam", "p", std::nullopt);
      check(*rc.p >= 0.0 && *rc.p <= 1.0, "/beam/p", "must lie in [0, 1]");
    } else {
      rc.mu_angstrom = get_field<double>(beam, "/beam", "mu_angstrom", std::nullopt);
      check(*rc.mu_angstrom >= 0.0, "/beam/mu_angstrom", "must be >= 0");
    }
    rc.lambda_per_s = get_field<double>(beam, "/beam", "lambda_per_s", std::nullopt);
    check(rc.lambda_per_s >= 0.0, "/beam/lambda_per_s", "must be >= 0");
  }

  rc.n = get_field<std::size_t>(doc, "", "n", std::size_t{10});
  check(rc.n >= 1, "/n", "must be >= 1");
  rc.alpha = get_field<double>(doc, "", "alpha", 0.01);
  check(rc.alpha > 0.0 && rc.alpha < 1.0, "/alpha", "must lie in (0, 1)");
  rc.seed = get_field<std::uint64_t>(doc, "", "seed", std::uint64_t{1});
  rc.replicates = get_field<std::size_t>(doc, "", "replicates", std::size_t{2000});
  check(rc.replicates >= 1, "/replicates", "must be >= 1");
  return rc;
}

inline RunConfig parse_run_config(std::istream& is) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

inline nlohmann::json to_json(const RunConfig& rc) {
  nlohmann::json doc;
  doc["detector"] = {{"k", rc.detector.k},
                     {"t_s", rc.detector.t},
                     {"rho_at_per_m3", rc.detector.rho_at},
                     {"d_l_m", rc.detector.d_l}};
  nlohmann::json beam = {{"lambda_per_s", rc.lambda_per_s}};
  if (rc.p) beam["p"] = *rc.p;
  if (rc.mu_angstrom) beam["mu_angstrom"] = *rc.mu_angstrom;
  doc["beam"] = beam;
  if (rc.xsec.varsigma_hat > 0.0) {
    doc["xsec"] = {{"varsigma_per_m2", rc.xsec.varsigma_hat},
                   {"sigma2_varsigma", rc.xsec.sigma2_varsigma},
                   {"n_prime", rc.xsec.n_prime}};
  } else {
    doc["xsec"] = {{"chi_per_m", rc.xsec.chi_hat},
                   {"sigma2_chi_per_m2", rc.xsec.sigma2_chi},
                   {"n_prime", rc.xsec.n_prime}};
  }
  doc["n"] = rc.n;
  doc["alpha"] = rc.alpha;
  doc["seed"] = rc.seed;
  doc["replicates"] = rc.replicates;
  return doc;
}

}  // namespace mlnd::io
