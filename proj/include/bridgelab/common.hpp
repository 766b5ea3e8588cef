#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bridgelab {

/// Thrown when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when a numerical procedure fails to reach its accuracy target.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for requests the toolkit deliberately does not implement.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Bridge construction from a shared driving Wiener path.
enum class Kind { AV, IR, ST };

inline constexpr Kind kAllKinds[] = {Kind::AV, Kind::IR, Kind::ST};

enum class Process { Wiener, OU };

constexpr std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::AV: return "av";
    case Kind::IR: return "ir";
    case Kind::ST: return "st";
  }
  return "?";
}

constexpr std::string_view to_string(Process p) {
  return p == Process::Wiener ? "wiener" : "ou";
}

inline Kind parse_kind(std::string_view s) {
  if (s == "av" || s == "AV") return Kind::AV;
  if (s == "ir" || s == "IR") return Kind::IR;
  if (s == "st" || s == "ST") return Kind::ST;
  throw DomainError("unknown bridge kind '" + std::string(s) + "'");
}

inline Process parse_process(std::string_view s) {
  if (s == "wiener") return Process::Wiener;
  if (s == "ou") return Process::OU;
  throw DomainError("unknown process '" + std::string(s) + "'");
}

inline int kind_index(Kind k) { return static_cast<int>(k); }

}  // namespace bridgelab
