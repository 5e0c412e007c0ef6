#pragma once

// Instruction set of the 16-lane SIMT core: opcodes, the decoded instruction
// value, the machine configuration envelope, and the 64-bit word encoding.
//
// Word layout (bit ranges inclusive):
//   [7:0]    opcode
//   [8]      signed
//   [9]      hi half (MUL only)
//   [10]     guard present
//   [11]     guard negated (@!pN)
//   [14:12]  guard predicate index
//   [15]     thread-scale override present
//   [23:16]  dst
//   [31:24]  src1
//   [39:32]  src2
//   [63:40]  imm, 24-bit two's complement; holds the thread count when [15] is set

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace egpu {

inline constexpr unsigned kNumSps = 16;
inline constexpr unsigned kMaxThreads = 4096;
inline constexpr unsigned kMaxRegisters = 65536;
inline constexpr unsigned kNumPredicates = 8;
inline constexpr unsigned kReturnStackDepth = 16;

inline constexpr std::int32_t kImmMin = -(1 << 23);
inline constexpr std::int32_t kImmMax = (1 << 23) - 1;

enum class Opcode : std::uint8_t {
  NOP = 0,
  ADD,
  SUB,
  ABS,
  MIN,
  MAX,
  MUL,
  AND,
  OR,
  XOR,
  NOT,
  CNOT,
  SHL,
  SHR,
  SAR,
  MOV,
  MOVI,
  MOV_TID,
  MOV_NTID,
  LDS,
  STS,
  SETP_EQ,
  SETP_NE,
  SETP_LT,
  SETP_LE,
  SETP_GT,
  SETP_GE,
  SELP,
  BRA,
  CALL,
  RET,
  LOOP,
  HALT,
};

inline constexpr unsigned kNumOpcodes = static_cast<unsigned>(Opcode::HALT) + 1;

/// Selects the cycle-count rule the sequencer applies.
enum class OpClass : std::uint8_t { Operation, Load, Store, Control, SingleCycle };

/// Operand shape, shared by the assembler and disassembler.
enum class OperandForm : std::uint8_t {
  None,       // RET, HALT, NOP
  DstSrcSrc,  // ADD rd, ra, rb
  DstSrc,     // MOV rd, ra
  DstImm,     // MOVI rd, imm
  Dst,        // MOV.TID rd
  Load,       // LDS rd, [ra]
  Store,      // STS [ra], rb
  SetPred,    // SETP.cc pd, ra, rb
  Select,     // SELP rd, ra, rb, pN   (pN in imm)
  Target,     // BRA label
  Loop,       // LOOP count, label     (count in src2:src1, last body index in imm)
};

struct OpcodeInfo {
  Opcode op;
  std::string_view mnemonic;
  OpClass cls;
  OperandForm form;
  bool allows_signed;
  bool allows_guard;
  bool allows_scale;
};

const OpcodeInfo& info(Opcode op);
std::span<const OpcodeInfo> all_opcodes();
std::optional<Opcode> opcode_from_byte(std::uint8_t byte);

inline OpClass op_class(Opcode op) { return info(op).cls; }
std::string_view to_string(OpClass cls);

struct Guard {
  std::uint8_t index = 0;
  bool negated = false;
  auto operator<=>(const Guard&) const = default;
};

struct Instr {
  Opcode op = Opcode::NOP;
  std::uint8_t dst = 0;
  std::uint8_t src1 = 0;
  std::uint8_t src2 = 0;
  std::int32_t imm = 0;
  bool is_signed = false;
  bool hi = false;
  std::optional<Guard> guard;
  std::optional<std::uint16_t> scale;

  bool operator==(const Instr&) const = default;
};

/// LOOP iteration count lives in {src2, src1}.
inline std::uint16_t loop_count(const Instr& i) {
  return static_cast<std::uint16_t>(i.src1 | (i.src2 << 8));
}
inline void set_loop_count(Instr& i, std::uint16_t count) {
  i.src1 = static_cast<std::uint8_t>(count & 0xFF);
  i.src2 = static_cast<std::uint8_t>(count >> 8);
}

struct MachineConfig {
  unsigned num_sps = kNumSps;
  unsigned max_threads = kMaxThreads;
  unsigned regs_per_thread = 16;
  unsigned shared_mem_words = 4096;
  bool predicates_enabled = false;
  unsigned fetch_decode_stages = 4;
  bool strict_memory = true;
};

/// Throws Error(InvalidConfig) when the envelope is violated.
void validate(const MachineConfig& cfg);

/// Packs fields; throws Error(FieldRange) when a field does not fit.
std::uint64_t encode_instruction(const Instr& i);

/// Throws Error(IllegalOpcode | IllegalFlags | IllegalOperands).
Instr decode_instruction(std::uint64_t word);

/// Configuration-dependent checks: predicate use, scale ceiling.
void validate_for_config(const Instr& i, const MachineConfig& cfg);

}  // namespace egpu
