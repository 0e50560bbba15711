#pragma once

#include <stdexcept>
#include <string>

namespace susmap {

// Error taxonomy; the CLI maps each kind to a distinct exit code.
enum class errc {
  invalid_input,
  index,
  numerical,
  capacity,
  estimation_failed,
  io,
  config,
};

class error : public std::runtime_error {
 public:
  error(errc kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  errc kind() const { return kind_; }

 private:
  errc kind_;
};

[[noreturn]] inline void fail(errc kind, const std::string& msg) { throw error(kind, msg); }

inline const char* errc_name(errc k) {
  switch (k) {
    case errc::invalid_input: return "invalid-input";
    case errc::index: return "index";
    case errc::numerical: return "numerical";
    case errc::capacity: return "capacity";
    case errc::estimation_failed: return "estimation-failed";
    case errc::io: return "io";
    case errc::config: return "config";
  }
  return "unknown";
}

}  // namespace susmap
