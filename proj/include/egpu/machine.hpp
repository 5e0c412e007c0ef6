#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egpu/error.hpp"
#include "egpu/image.hpp"
#include "egpu/isa.hpp"
#include "egpu/sequencer.hpp"

namespace egpu {

/// REFERENCE uses native C++ arithmetic; BIT_TRUE routes MUL and the three
/// shifts through the partial-product multiplier and multiplicative shifter.
enum class Backend : std::uint8_t { Reference, BitTrue };

struct LaneLocation {
  unsigned sp = 0;
  unsigned row = 0;
  bool operator==(const LaneLocation&) const = default;
};

LaneLocation lane_map(std::uint32_t tid);

struct MachineState {
  MachineConfig cfg;
  std::uint32_t declared_threads = 0;
  std::vector<std::uint32_t> regs;    // [tid * regs_per_thread + r]
  std::vector<std::uint32_t> shared;  // word addressed
  std::vector<std::uint8_t> preds;    // [tid * 8 + p]
  SequencerState seq;
  std::uint64_t cycles = 0;
  bool halted = false;

  std::uint32_t reg(std::uint32_t tid, unsigned r) const { return regs[tid * cfg.regs_per_thread + r]; }
  std::uint32_t& reg(std::uint32_t tid, unsigned r) { return regs[tid * cfg.regs_per_thread + r]; }
  bool pred(std::uint32_t tid, unsigned p) const { return preds[tid * kNumPredicates + p] != 0; }
};

/// Registers, predicates, shared memory, pc, cycles and halt flag.
bool same_architectural_state(const MachineState& a, const MachineState& b);

/// Fresh state for `img` under `cfg`; registers and predicates start at zero.
MachineState make_state(const ProgramImage& img, const MachineConfig& cfg);

/// Applies an OPERATION/LOAD/STORE instruction to every active thread.
/// All operands and addresses are checked before any lane writes, so a trap
/// (thrown as egpu::Error) leaves `st` untouched.
void exec_instruction(MachineState& st, const Instr& i, const ThreadShape& shape, Backend backend);

/// LDS/STS with the same all-or-nothing checking. Stores commit in ascending
/// tid order, so on an address collision the highest tid wins. Returns the
/// instruction's cycle cost.
std::uint64_t load_store(MachineState& st, const Instr& i, const ThreadShape& shape);

struct TraceRecord {
  std::uint32_t pc = 0;
  std::string mnemonic;
  OpClass cls = OpClass::Operation;
  ThreadShape shape;
  std::uint64_t cycles = 0;
  std::uint64_t cumulative = 0;
  std::uint32_t flush_bubbles = 0;
};

enum class StopReason : std::uint8_t { Halt, MaxCycles, Trap };
std::string_view to_string(StopReason reason);

struct TrapInfo {
  ErrorCode code = ErrorCode::PcOutOfRange;
  std::string detail;
  std::uint32_t pc = 0;
};

inline constexpr std::size_t kNumClasses = 5;

struct RunResult {
  MachineState final;
  std::uint64_t total_cycles = 0;
  std::uint64_t instructions_retired = 0;
  std::vector<TraceRecord> trace;
  StopReason stop = StopReason::Halt;
  std::optional<TrapInfo> trap;
  std::array<std::uint64_t, kNumClasses> cycles_by_class{};
  std::uint64_t flush_bubbles = 0;
  /// Clocks spent on an instruction cut off by max_cycles; not in the trace.
  std::uint64_t truncated_cycles = 0;
};

class Machine {
 public:
  enum class Status : std::uint8_t { Idle, Running, Halted, Trapped };

  Machine(const ProgramImage& img, const MachineConfig& cfg, Backend backend = Backend::Reference);

  /// Writes words into shared memory starting at `offset`.
  void load_shared(std::uint32_t offset, std::span<const std::uint32_t> words);

  /// Retires exactly one instruction. Throws egpu::Error on a trap.
  TraceRecord step();

  /// Steps until HALT, a trap, or `max_cycles` clocks counted in this call.
  RunResult run(std::uint64_t max_cycles, bool record_trace = true);

  /// Installs a new program; data state is kept. Throws ReloadWhileRunning
  /// unless the machine is idle, halted or trapped.
  void reload_imem(const ProgramImage& img);

  const MachineState& state() const { return state_; }
  Status status() const { return status_; }
  Backend backend() const { return backend_; }

 private:
  MachineState state_;
  Backend backend_;
  Status status_ = Status::Idle;
};

/// Convenience wrapper: fresh machine, optional initial shared memory at 0.
RunResult run(const ProgramImage& img, const MachineConfig& cfg,
              std::span<const std::uint32_t> init_shared, Backend backend, std::uint64_t max_cycles);

/// 64-bit FNV-1a over shared memory as little-endian bytes.
std::uint64_t shared_digest(std::span<const std::uint32_t> shared);

}  // namespace egpu
