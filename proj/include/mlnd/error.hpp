#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlnd {

enum class Errc {
  invalid_argument,
  domain_error,
  no_detections,
  not_identifiable,
  no_interior_root,
  numeric_failure,
  singular_information,
};

// Machine-readable names used in CLI JSON output.
constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "INVALID_ARGUMENT";
    case Errc::domain_error: return "DOMAIN_ERROR";
    case Errc::no_detections: return "NO_DETECTIONS";
    case Errc::not_identifiable: return "NOT_IDENTIFIABLE";
    case Errc::no_interior_root: return "NO_INTERIOR_ROOT";
    case Errc::numeric_failure: return "NUMERIC_FAILURE";
    case Errc::singular_information: return "SINGULAR_INFORMATION";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::string stage = {})
      : std::runtime_error(what), code_(code), stage_(std::move(stage)) {}

  Errc code() const noexcept { return code_; }

  // Pipeline stage that raised the error ("mle", "covariance", ...); may be empty.
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(code_, what(), std::move(stage)); }

 private:
  Errc code_;
  std::string stage_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(Errc::invalid_argument, msg);
}

inline void require_domain(bool cond, const std::string& msg) {
  if (!cond) throw Error(Errc::domain_error, msg);
}

}  // namespace detail
}  // namespace mlnd
