#ifndef TVEM_ERROR_HPP
#define TVEM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tvem {

enum class ErrorCode {
  InvalidInput,
  InvalidParams,
  SpaceTooLarge,
  DegenerateSet,
  UnsupportedSpace,
  PoolTooLarge,
  SingularSystem,
  InsufficientData,
  MonotonicityViolation,
  ConfigError,
  IoError,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace tvem

#endif
