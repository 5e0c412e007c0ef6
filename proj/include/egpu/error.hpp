#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace egpu {

enum class ErrorCode {
  // encoding / decoding
  FieldRange,
  IllegalOpcode,
  IllegalFlags,
  IllegalOperands,
  BadImage,
  // assembler
  ParseError,
  UnknownMnemonic,
  UndefinedLabel,
  DuplicateLabel,
  OperandRange,
  GuardWithoutPredicates,
  PredicatesDisabled,
  // configuration / loading
  InvalidConfig,
  ReloadWhileRunning,
  // runtime traps
  RegisterOutOfRange,
  AddressOutOfRange,
  ScaleOutOfRange,
  ReturnStackUnderflow,
  ReturnStackOverflow,
  PcOutOfRange,
  InvalidLoop,
};

std::string_view to_string(ErrorCode code);

/// True for the codes that stop a running machine (reported as a TRAP).
bool is_trap(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail, std::uint32_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  /// 1-based source line for assembler diagnostics, 0 otherwise.
  std::uint32_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::uint32_t line_;
};

}  // namespace egpu
