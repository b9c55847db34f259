#pragma once

#include <stdexcept>
#include <string>

namespace lcr {

// Error categories, aligned with the process exit codes used by the CLI
// (0 success, 2 usage, 3 config, 4 data, 5 numeric).
enum class ErrorCode : int {
  kUsage = 2,
  kConfig = 3,
  kData = 4,
  kNumeric = 5,
  kInternal = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorCode::kUsage, msg);
}
[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorCode::kConfig, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorCode::kData, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorCode::kNumeric, msg);
}
[[noreturn]] inline void throw_internal(const std::string& msg) {
  throw Error(ErrorCode::kInternal, msg);
}

}  // namespace lcr
