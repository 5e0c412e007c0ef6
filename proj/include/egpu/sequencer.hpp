#pragma once

// Instruction sequencing and pipeline-advance control.
//
// Every instruction completes before the next one issues. Its cost comes from
// a pair of counters over the thread block: operations advance the depth
// counter once per row of 16 threads; loads spend four width phases per row
// (4 read ports, 16 lanes) and stores one phase per active lane (1 write
// port). The end-of-instruction signal is registered, so the comparator
// matches the counter state one clock before the final one. Instructions that
// need a single clock skip the counters entirely.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "egpu/image.hpp"
#include "egpu/isa.hpp"

namespace egpu {

struct ThreadShape {
  std::uint32_t active_threads = 0;
  std::uint32_t depth = 0;      // rows: ceil(active_threads / 16)
  std::uint32_t width = 0;      // active lanes in the final row, 1..16
  std::uint32_t full_rows = 0;  // rows with all 16 lanes active

  bool operator==(const ThreadShape&) const = default;
};

ThreadShape make_shape(std::uint32_t active_threads);

/// Shape of one instruction: the scale override if present, else the
/// program's thread count. Throws Error(ScaleOutOfRange) past max_threads.
ThreadShape shape_for(const Instr& i, std::uint32_t declared_threads, const MachineConfig& cfg);

struct CounterPoint {
  std::uint32_t depth = 0;
  std::uint32_t width = 0;
  bool operator==(const CounterPoint&) const = default;
};

/// Everything the pipeline-control block derives from (class, shape).
struct CounterPlan {
  OpClass cls = OpClass::Operation;
  std::uint32_t depth = 1;
  std::uint32_t phases_per_row = 1;
  std::uint32_t phases_last_row = 1;
  std::uint64_t cycles = 1;
  bool single_cycle = true;
  CounterPoint end_compare;  // meaningful only when !single_cycle
};

CounterPlan plan_for(OpClass cls, const ThreadShape& shape);

struct CounterState {
  std::uint32_t depth_count = 0;
  std::uint32_t width_count = 0;
  bool end = false;  // registered end-of-instruction flag
  bool single_cycle = false;

  bool operator==(const CounterState&) const = default;
};

CounterState counter_start(const CounterPlan& plan);

struct Tick {
  CounterState next;
  bool end = false;
};

/// One clock of the counters. The width counter wraps after its last phase
/// and bumps the depth counter; `end` is the comparator result just
/// registered, i.e. the flag seen on the following clock.
Tick advance(const CounterState& state, const CounterPlan& plan);

struct InstructionCycles {
  std::uint64_t cycles = 0;
  CounterPlan plan;
  std::vector<CounterState> trace;  // one entry per clock, when requested
};

InstructionCycles instruction_cycles(const Instr& i, const ThreadShape& shape, bool with_trace = false);

// ---------------------------------------------------------------------------
// Fetch / PC control

struct ShadowSlot {
  std::uint32_t pc = 0;
  std::optional<Instr> instr;  // empty when fetched past the end of I-Mem
  bool zeroed = false;

  bool operator==(const ShadowSlot&) const = default;
};

struct LoopState {
  std::uint32_t count_remaining = 0;
  std::uint32_t body_start = 0;
  std::uint32_t body_end = 0;

  bool operator==(const LoopState&) const = default;
};

struct SequencerState {
  std::shared_ptr<const std::vector<Instr>> imem;
  std::uint32_t pc = 0;
  unsigned fetch_decode_stages = 4;
  std::vector<ShadowSlot> shadow;  // instructions fetched behind pc
  std::vector<std::uint32_t> return_stack;
  std::optional<LoopState> loop;
  std::vector<ShadowSlot> flushed;  // bubbles zeroed by the most recent redirect
};

/// Decodes the image, sets pc to the entry point and primes the shadow.
SequencerState make_sequencer(const ProgramImage& img, unsigned fetch_decode_stages);

/// Throws Error(PcOutOfRange) when pc has run off I-Mem.
const Instr& current_instruction(const SequencerState& st);

/// Advances past `completed` (the instruction at st.pc whose end fired).
/// Taken BRA/CALL/RET zero every shadow slot; a loop back-edge does not.
SequencerState next_pc(SequencerState st, const Instr& completed, bool branch_taken);

}  // namespace egpu
