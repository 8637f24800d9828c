#pragma once

#include <stdexcept>
#include <string>

namespace ctrace {

enum class ErrorKind {
  InvalidParams,
  SeriesDivergent,
  SeriesCapReached,
  EventCapExceeded,
  NoStraddle,
  NonMonotone,
  InvalidConfig,
};

const char* to_string(ErrorKind kind);

// Single exception type for every recoverable failure in the library; the
// kind lets callers (sweep cells, CLI) map failures onto status markers.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ctrace
