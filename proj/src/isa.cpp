#include "egpu/isa.hpp"

#include <string>

#include "egpu/error.hpp"

namespace egpu {

namespace {

using enum Opcode;
using F = OperandForm;
using C = OpClass;

//                       op        mnemonic     class           form           sgn    guard  scale
constexpr std::array<OpcodeInfo, kNumOpcodes> kTable{{
    {NOP,      "NOP",       C::SingleCycle, F::None,      false, false, false},
    {ADD,      "ADD",       C::Operation,   F::DstSrcSrc, true,  true,  true},
    {SUB,      "SUB",       C::Operation,   F::DstSrcSrc, true,  true,  true},
    {ABS,      "ABS",       C::Operation,   F::DstSrc,    true,  true,  true},
    {MIN,      "MIN",       C::Operation,   F::DstSrcSrc, true,  true,  true},
    {MAX,      "MAX",       C::Operation,   F::DstSrcSrc, true,  true,  true},
    {MUL,      "MUL",       C::Operation,   F::DstSrcSrc, true,  true,  true},
    {AND,      "AND",       C::Operation,   F::DstSrcSrc, false, true,  true},
    {OR,       "OR",        C::Operation,   F::DstSrcSrc, false, true,  true},
    {XOR,      "XOR",       C::Operation,   F::DstSrcSrc, false, true,  true},
    {NOT,      "NOT",       C::Operation,   F::DstSrc,    false, true,  true},
    {CNOT,     "CNOT",      C::Operation,   F::DstSrc,    false, true,  true},
    {SHL,      "SHL",       C::Operation,   F::DstSrcSrc, false, true,  true},
    {SHR,      "SHR",       C::Operation,   F::DstSrcSrc, false, true,  true},
    {SAR,      "SAR",       C::Operation,   F::DstSrcSrc, false, true,  true},
    {MOV,      "MOV",       C::Operation,   F::DstSrc,    false, true,  true},
    {MOVI,     "MOVI",      C::Operation,   F::DstImm,    false, true,  false},
    {MOV_TID,  "MOV.TID",   C::Operation,   F::Dst,       false, true,  true},
    {MOV_NTID, "MOV.NTID",  C::Operation,   F::Dst,       false, true,  true},
    {LDS,      "LDS",       C::Load,        F::Load,      false, true,  true},
    {STS,      "STS",       C::Store,       F::Store,     false, true,  true},
    {SETP_EQ,  "SETP.EQ",   C::Operation,   F::SetPred,   true,  true,  true},
    {SETP_NE,  "SETP.NE",   C::Operation,   F::SetPred,   true,  true,  true},
    {SETP_LT,  "SETP.LT",   C::Operation,   F::SetPred,   true,  true,  true},
    {SETP_LE,  "SETP.LE",   C::Operation,   F::SetPred,   true,  true,  true},
    {SETP_GT,  "SETP.GT",   C::Operation,   F::SetPred,   true,  true,  true},
    {SETP_GE,  "SETP.GE",   C::Operation,   F::SetPred,   true,  true,  true},
    {SELP,     "SELP",      C::Operation,   F::Select,    false, true,  false},
    {BRA,      "BRA",       C::Control,     F::Target,    false, true,  false},
    {CALL,     "CALL",      C::Control,     F::Target,    false, false, false},
    {RET,      "RET",       C::Control,     F::None,      false, false, false},
    {LOOP,     "LOOP",      C::SingleCycle, F::Loop,      false, false, false},
    {HALT,     "HALT",      C::Control,     F::None,      false, false, false},
}};

constexpr bool table_is_indexed() {
  for (unsigned k = 0; k < kTable.size(); ++k)
    if (static_cast<unsigned>(kTable[k].op) != k) return false;
  return true;
}
static_assert(table_is_indexed(), "opcode table must be ordered by opcode value");
static_assert(kNumOpcodes <= 61);

constexpr unsigned kFlagSigned = 1u << 0;
constexpr unsigned kFlagHi = 1u << 1;
constexpr unsigned kFlagGuard = 1u << 2;
constexpr unsigned kFlagGuardNeg = 1u << 3;
constexpr unsigned kGuardIndexShift = 4;
constexpr unsigned kFlagScale = 1u << 7;

constexpr std::uint32_t kImmMask = 0xFFFFFF;

struct UsedFields {
  bool dst, src1, src2, imm;
};

UsedFields used_fields(OperandForm form) {
  switch (form) {
    case F::None: return {false, false, false, false};
    case F::DstSrcSrc: return {true, true, true, false};
    case F::DstSrc: return {true, true, false, false};
    case F::DstImm: return {true, false, false, true};
    case F::Dst: return {true, false, false, false};
    case F::Load: return {true, true, false, false};
    case F::Store: return {false, true, true, false};
    case F::SetPred: return {true, true, true, false};
    case F::Select: return {true, true, true, true};
    case F::Target: return {false, false, false, true};
    case F::Loop: return {false, true, true, true};
  }
  return {};
}

std::int32_t sign_extend24(std::uint32_t v) {
  v &= kImmMask;
  return (v & 0x800000) ? static_cast<std::int32_t>(v | 0xFF000000u) : static_cast<std::int32_t>(v);
}

}  // namespace

const OpcodeInfo& info(Opcode op) { return kTable[static_cast<unsigned>(op)]; }

std::span<const OpcodeInfo> all_opcodes() { return kTable; }

std::optional<Opcode> opcode_from_byte(std::uint8_t byte) {
  if (byte >= kNumOpcodes) return std::nullopt;
  return static_cast<Opcode>(byte);
}

std::string_view to_string(OpClass cls) {
  switch (cls) {
    case C::Operation: return "operation";
    case C::Load: return "load";
    case C::Store: return "store";
    case C::Control: return "control";
    case C::SingleCycle: return "single_cycle";
  }
  return "unknown";
}

void validate(const MachineConfig& cfg) {
  if (cfg.num_sps != kNumSps)
    throw Error(ErrorCode::InvalidConfig, "num_sps is fixed at 16");
  if (cfg.max_threads == 0 || cfg.max_threads > kMaxThreads)
    throw Error(ErrorCode::InvalidConfig, "max_threads must be in 1..4096");
  if (cfg.regs_per_thread == 0 || cfg.regs_per_thread > 256)
    throw Error(ErrorCode::InvalidConfig, "regs_per_thread must be in 1..256");
  if (static_cast<std::uint64_t>(cfg.max_threads) * cfg.regs_per_thread > kMaxRegisters)
    throw Error(ErrorCode::InvalidConfig,
                "max_threads x regs_per_thread exceeds 65536 (" + std::to_string(cfg.max_threads) +
                    " x " + std::to_string(cfg.regs_per_thread) + ")");
  if (cfg.shared_mem_words == 0)
    throw Error(ErrorCode::InvalidConfig, "shared_mem_words must be > 0");
  if (cfg.fetch_decode_stages == 0)
    throw Error(ErrorCode::InvalidConfig, "fetch_decode_stages must be > 0");
}

std::uint64_t encode_instruction(const Instr& i) {
  if (i.imm < kImmMin || i.imm > kImmMax)
    throw Error(ErrorCode::FieldRange, "immediate " + std::to_string(i.imm) + " exceeds 24 bits");
  if (i.guard && i.guard->index >= kNumPredicates)
    throw Error(ErrorCode::FieldRange, "guard predicate index exceeds 3 bits");
  if (i.scale) {
    if (*i.scale == 0 || *i.scale > kMaxThreads)
      throw Error(ErrorCode::FieldRange, "thread scale must be in 1..4096");
    if (i.imm != 0)
      throw Error(ErrorCode::FieldRange, "immediate field is occupied by the thread scale");
  }

  unsigned flags = 0;
  if (i.is_signed) flags |= kFlagSigned;
  if (i.hi) flags |= kFlagHi;
  if (i.guard) {
    flags |= kFlagGuard;
    if (i.guard->negated) flags |= kFlagGuardNeg;
    flags |= static_cast<unsigned>(i.guard->index) << kGuardIndexShift;
  }
  std::uint32_t imm_field = static_cast<std::uint32_t>(i.imm) & kImmMask;
  if (i.scale) {
    flags |= kFlagScale;
    imm_field = *i.scale;
  }

  return static_cast<std::uint64_t>(static_cast<std::uint8_t>(i.op)) |
         static_cast<std::uint64_t>(flags) << 8 |
         static_cast<std::uint64_t>(i.dst) << 16 |
         static_cast<std::uint64_t>(i.src1) << 24 |
         static_cast<std::uint64_t>(i.src2) << 32 |
         static_cast<std::uint64_t>(imm_field) << 40;
}

Instr decode_instruction(std::uint64_t word) {
  const auto op_byte = static_cast<std::uint8_t>(word & 0xFF);
  const auto op = opcode_from_byte(op_byte);
  if (!op) throw Error(ErrorCode::IllegalOpcode, "opcode field " + std::to_string(op_byte));
  const OpcodeInfo& oi = info(*op);

  const unsigned flags = static_cast<unsigned>((word >> 8) & 0xFF);
  Instr i;
  i.op = *op;
  i.dst = static_cast<std::uint8_t>(word >> 16);
  i.src1 = static_cast<std::uint8_t>(word >> 24);
  i.src2 = static_cast<std::uint8_t>(word >> 32);
  const auto imm_field = static_cast<std::uint32_t>(word >> 40) & kImmMask;

  const std::string mn(oi.mnemonic);
  i.is_signed = flags & kFlagSigned;
  i.hi = flags & kFlagHi;
  if (i.is_signed && !oi.allows_signed)
    throw Error(ErrorCode::IllegalFlags, "signed flag on " + mn);
  if (i.hi && *op != Opcode::MUL)
    throw Error(ErrorCode::IllegalFlags, "hi-half flag on " + mn);

  if (flags & kFlagGuard) {
    if (!oi.allows_guard) throw Error(ErrorCode::IllegalFlags, "guard on " + mn);
    i.guard = Guard{static_cast<std::uint8_t>((flags >> kGuardIndexShift) & 0x7),
                    (flags & kFlagGuardNeg) != 0};
  } else if (flags & (kFlagGuardNeg | (0x7u << kGuardIndexShift))) {
    throw Error(ErrorCode::IllegalFlags, "guard bits set without guard-present");
  }

  if (flags & kFlagScale) {
    if (!oi.allows_scale) throw Error(ErrorCode::IllegalFlags, "thread scale on " + mn);
    if (imm_field == 0 || imm_field > kMaxThreads)
      throw Error(ErrorCode::IllegalFlags, "thread scale " + std::to_string(imm_field));
    i.scale = static_cast<std::uint16_t>(imm_field);
  } else {
    i.imm = sign_extend24(imm_field);
  }

  const UsedFields used = used_fields(oi.form);
  if ((!used.dst && i.dst) || (!used.src1 && i.src1) || (!used.src2 && i.src2) ||
      (!used.imm && i.imm))
    throw Error(ErrorCode::IllegalOperands, "unused operand field set on " + mn);

  switch (oi.form) {
    case F::SetPred:
      if (i.dst >= kNumPredicates) throw Error(ErrorCode::IllegalOperands, "predicate index");
      break;
    case F::Select:
      if (i.imm < 0 || i.imm >= static_cast<std::int32_t>(kNumPredicates))
        throw Error(ErrorCode::IllegalOperands, "predicate index");
      break;
    case F::Target:
      if (i.imm < 0) throw Error(ErrorCode::IllegalOperands, "negative branch target");
      break;
    case F::Loop:
      if (i.imm < 0) throw Error(ErrorCode::IllegalOperands, "negative loop end");
      if (loop_count(i) == 0) throw Error(ErrorCode::IllegalOperands, "loop count 0");
      break;
    default:
      break;
  }
  return i;
}

void validate_for_config(const Instr& i, const MachineConfig& cfg) {
  if (!cfg.predicates_enabled) {
    if (i.guard)
      throw Error(ErrorCode::GuardWithoutPredicates, std::string(info(i.op).mnemonic));
    const OperandForm form = info(i.op).form;
    if (form == F::SetPred || form == F::Select)
      throw Error(ErrorCode::PredicatesDisabled, std::string(info(i.op).mnemonic));
  }
  if (i.scale && *i.scale > cfg.max_threads)
    throw Error(ErrorCode::ScaleOutOfRange,
                "scale " + std::to_string(*i.scale) + " > max_threads " +
                    std::to_string(cfg.max_threads));
}

}  // namespace egpu
