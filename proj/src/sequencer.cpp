#include "egpu/sequencer.hpp"

#include <string>

#include "egpu/error.hpp"

namespace egpu {

namespace {

constexpr std::uint32_t kLoadPhasesPerRow = kNumSps / 4;  // 4 read ports

std::uint32_t ceil_div(std::uint32_t a, std::uint32_t b) { return (a + b - 1) / b; }

// Predicted fetch successor: sequential, except the loop unit folds the
// back-edge in without a bubble.
std::uint32_t predict_next(std::uint32_t pc, std::optional<LoopState>& loop) {
  if (loop && pc == loop->body_end) {
    if (loop->count_remaining > 1) {
      --loop->count_remaining;
      return loop->body_start;
    }
    loop.reset();
  }
  return pc + 1;
}

std::vector<ShadowSlot> fetch_behind(const SequencerState& st) {
  std::vector<ShadowSlot> slots;
  slots.reserve(st.fetch_decode_stages);
  auto loop = st.loop;
  std::uint32_t p = st.pc;
  const auto& imem = *st.imem;
  for (unsigned k = 0; k < st.fetch_decode_stages; ++k) {
    p = predict_next(p, loop);
    ShadowSlot slot{p, std::nullopt, false};
    if (p < imem.size()) slot.instr = imem[p];
    slots.push_back(std::move(slot));
  }
  return slots;
}

}  // namespace

ThreadShape make_shape(std::uint32_t active_threads) {
  ThreadShape s;
  s.active_threads = active_threads;
  s.depth = ceil_div(active_threads, kNumSps);
  s.full_rows = active_threads / kNumSps;
  const std::uint32_t rem = active_threads % kNumSps;
  s.width = rem == 0 ? kNumSps : rem;
  return s;
}

ThreadShape shape_for(const Instr& i, std::uint32_t declared_threads, const MachineConfig& cfg) {
  const std::uint32_t t = i.scale ? *i.scale : declared_threads;
  if (t == 0 || t > cfg.max_threads)
    throw Error(ErrorCode::ScaleOutOfRange,
                std::to_string(t) + " threads, max " + std::to_string(cfg.max_threads));
  return make_shape(t);
}

CounterPlan plan_for(OpClass cls, const ThreadShape& shape) {
  CounterPlan p;
  p.cls = cls;
  p.depth = shape.depth;
  switch (cls) {
    case OpClass::Operation:
      p.phases_per_row = 1;
      p.phases_last_row = 1;
      break;
    case OpClass::Load:
      p.phases_per_row = kLoadPhasesPerRow;
      p.phases_last_row = ceil_div(shape.width, 4);
      break;
    case OpClass::Store:
      p.phases_per_row = kNumSps;
      p.phases_last_row = shape.width;
      break;
    case OpClass::Control:
    case OpClass::SingleCycle:
      p.depth = 1;
      p.phases_per_row = 1;
      p.phases_last_row = 1;
      break;
  }
  p.cycles = std::uint64_t{p.depth - 1} * p.phases_per_row + p.phases_last_row;
  p.single_cycle = p.cycles == 1;
  if (!p.single_cycle) {
    // The state one clock before the last.
    if (p.phases_last_row >= 2)
      p.end_compare = {p.depth - 1, p.phases_last_row - 2};
    else
      p.end_compare = {p.depth - 2, p.phases_per_row - 1};
  }
  return p;
}

CounterState counter_start(const CounterPlan& plan) {
  CounterState s;
  s.single_cycle = plan.single_cycle;
  s.end = plan.single_cycle;
  return s;
}

Tick advance(const CounterState& state, const CounterPlan& plan) {
  CounterState next = state;
  const std::uint32_t phases =
      state.depth_count + 1 == plan.depth ? plan.phases_last_row : plan.phases_per_row;
  if (state.width_count + 1 >= phases) {
    next.width_count = 0;
    ++next.depth_count;
  } else {
    ++next.width_count;
  }
  next.end = !plan.single_cycle && state.depth_count == plan.end_compare.depth &&
             state.width_count == plan.end_compare.width;
  return {next, next.end};
}

InstructionCycles instruction_cycles(const Instr& i, const ThreadShape& shape, bool with_trace) {
  InstructionCycles out;
  out.plan = plan_for(op_class(i.op), shape);
  out.cycles = out.plan.cycles;
  if (with_trace) {
    out.trace.reserve(out.cycles);
    CounterState s = counter_start(out.plan);
    out.trace.push_back(s);
    while (!s.end) {
      s = advance(s, out.plan).next;
      out.trace.push_back(s);
    }
  }
  return out;
}

SequencerState make_sequencer(const ProgramImage& img, unsigned fetch_decode_stages) {
  SequencerState st;
  st.imem = std::make_shared<const std::vector<Instr>>(decode_all(img));
  st.pc = img.entry;
  st.fetch_decode_stages = fetch_decode_stages;
  st.shadow = fetch_behind(st);
  return st;
}

const Instr& current_instruction(const SequencerState& st) {
  if (st.pc >= st.imem->size())
    throw Error(ErrorCode::PcOutOfRange,
                "pc " + std::to_string(st.pc) + ", program has " + std::to_string(st.imem->size()) +
                    " instructions");
  return (*st.imem)[st.pc];
}

SequencerState next_pc(SequencerState st, const Instr& completed, bool branch_taken) {
  st.flushed.clear();
  const std::uint32_t pc = st.pc;
  std::uint32_t next = pc + 1;
  bool redirect = false;

  switch (completed.op) {
    case Opcode::BRA:
      if (branch_taken) {
        next = static_cast<std::uint32_t>(completed.imm);
        redirect = true;
      }
      break;
    case Opcode::CALL:
      if (st.return_stack.size() >= kReturnStackDepth)
        throw Error(ErrorCode::ReturnStackOverflow, "depth " + std::to_string(kReturnStackDepth));
      st.return_stack.push_back(pc + 1);
      next = static_cast<std::uint32_t>(completed.imm);
      redirect = true;
      break;
    case Opcode::RET:
      if (st.return_stack.empty()) throw Error(ErrorCode::ReturnStackUnderflow, "RET at " + std::to_string(pc));
      next = st.return_stack.back();
      st.return_stack.pop_back();
      redirect = true;
      break;
    case Opcode::LOOP: {
      if (st.loop) throw Error(ErrorCode::InvalidLoop, "LOOP at " + std::to_string(pc) + " inside an active loop");
      const auto end = static_cast<std::uint32_t>(completed.imm);
      if (end <= pc) throw Error(ErrorCode::InvalidLoop, "loop end " + std::to_string(end) + " not after LOOP");
      st.loop = LoopState{loop_count(completed), pc + 1, end};
      break;
    }
    case Opcode::HALT:
      return st;
    default:
      break;
  }

  if (!redirect && completed.op != Opcode::LOOP && st.loop && pc == st.loop->body_end)
    next = predict_next(pc, st.loop);

  if (redirect) {
    st.flushed = std::move(st.shadow);
    for (auto& slot : st.flushed) slot.zeroed = true;
  }
  st.pc = next;
  st.shadow = fetch_behind(st);
  return st;
}

}  // namespace egpu
