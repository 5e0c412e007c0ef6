#include "egpu/error.hpp"

namespace egpu {

namespace {

std::string format_message(ErrorCode code, const std::string& detail, std::uint32_t line) {
  std::string msg;
  if (line != 0) msg = "line " + std::to_string(line) + ": ";
  msg += to_string(code);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FieldRange: return "FieldRange";
    case ErrorCode::IllegalOpcode: return "IllegalOpcode";
    case ErrorCode::IllegalFlags: return "IllegalFlags";
    case ErrorCode::IllegalOperands: return "IllegalOperands";
    case ErrorCode::BadImage: return "BadImage";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownMnemonic: return "UnknownMnemonic";
    case ErrorCode::UndefinedLabel: return "UndefinedLabel";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::OperandRange: return "OperandRange";
    case ErrorCode::GuardWithoutPredicates: return "GuardWithoutPredicates";
    case ErrorCode::PredicatesDisabled: return "PredicatesDisabled";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ReloadWhileRunning: return "ReloadWhileRunning";
    case ErrorCode::RegisterOutOfRange: return "RegisterOutOfRange";
    case ErrorCode::AddressOutOfRange: return "AddressOutOfRange";
    case ErrorCode::ScaleOutOfRange: return "ScaleOutOfRange";
    case ErrorCode::ReturnStackUnderflow: return "ReturnStackUnderflow";
    case ErrorCode::ReturnStackOverflow: return "ReturnStackOverflow";
    case ErrorCode::PcOutOfRange: return "PcOutOfRange";
    case ErrorCode::InvalidLoop: return "InvalidLoop";
  }
  return "Unknown";
}

bool is_trap(ErrorCode code) {
  switch (code) {
    case ErrorCode::RegisterOutOfRange:
    case ErrorCode::AddressOutOfRange:
    case ErrorCode::ScaleOutOfRange:
    case ErrorCode::ReturnStackUnderflow:
    case ErrorCode::ReturnStackOverflow:
    case ErrorCode::PcOutOfRange:
    case ErrorCode::InvalidLoop:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& detail, std::uint32_t line)
    : std::runtime_error(format_message(code, detail, line)),
      code_(code),
      detail_(detail),
      line_(line) {}

}  // namespace egpu
