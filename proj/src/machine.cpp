#include "egpu/machine.hpp"

#include <string>

#include "egpu/assembler.hpp"
#include "egpu/datapath.hpp"

namespace egpu {

namespace {

namespace dp = datapath;

bool guard_passes(const MachineState& st, const Instr& i, std::uint32_t tid) {
  if (!i.guard) return true;
  return st.pred(tid, i.guard->index) != i.guard->negated;
}

void check_registers(const MachineState& st, const Instr& i) {
  const unsigned limit = st.cfg.regs_per_thread;
  auto check = [&](std::uint8_t r) {
    if (r >= limit)
      throw Error(ErrorCode::RegisterOutOfRange,
                  "r" + std::to_string(r) + " with " + std::to_string(limit) + " registers per thread");
  };
  switch (info(i.op).form) {
    case OperandForm::DstSrcSrc:
    case OperandForm::Select:
      check(i.dst), check(i.src1), check(i.src2);
      break;
    case OperandForm::DstSrc:
    case OperandForm::Load:
      check(i.dst), check(i.src1);
      break;
    case OperandForm::DstImm:
    case OperandForm::Dst:
      check(i.dst);
      break;
    case OperandForm::Store:
    case OperandForm::SetPred:
      check(i.src1), check(i.src2);
      break;
    case OperandForm::None:
    case OperandForm::Target:
    case OperandForm::Loop:
      break;
  }
}

void check_active_threads(const MachineState& st, const ThreadShape& shape) {
  if (shape.active_threads > st.declared_threads)
    throw Error(ErrorCode::ScaleOutOfRange,
                std::to_string(shape.active_threads) + " active threads, program declares " +
                    std::to_string(st.declared_threads));
}

std::uint32_t multiply(const Instr& i, std::uint32_t a, std::uint32_t b, Backend backend) {
  if (backend == Backend::BitTrue) return dp::mul32(a, b, i.is_signed, i.hi);
  std::uint64_t p;
  if (i.is_signed)
    p = static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<std::int32_t>(a)) *
                                   static_cast<std::int32_t>(b));
  else
    p = std::uint64_t{a} * b;
  return static_cast<std::uint32_t>(i.hi ? p >> 32 : p);
}

std::uint32_t shift(Opcode op, std::uint32_t a, std::uint32_t b, Backend backend) {
  const std::uint32_t amount = b & 0x3F;
  if (backend == Backend::BitTrue) {
    const auto kind = op == Opcode::SHL   ? dp::ShiftKind::Left
                      : op == Opcode::SHR ? dp::ShiftKind::RightLogical
                                          : dp::ShiftKind::RightArith;
    return static_cast<std::uint32_t>(dp::multiplicative_shift({a, amount, kind, 32}));
  }
  if (op == Opcode::SAR) {
    const auto s = static_cast<std::int32_t>(a);
    if (amount >= 32) return s < 0 ? 0xFFFFFFFFu : 0u;
    return static_cast<std::uint32_t>(s >> amount);
  }
  if (amount >= 32) return 0;
  return op == Opcode::SHL ? a << amount : a >> amount;
}

dp::CompareOp compare_op(Opcode op) {
  switch (op) {
    case Opcode::SETP_EQ: return dp::CompareOp::Eq;
    case Opcode::SETP_NE: return dp::CompareOp::Ne;
    case Opcode::SETP_LT: return dp::CompareOp::Lt;
    case Opcode::SETP_LE: return dp::CompareOp::Le;
    case Opcode::SETP_GT: return dp::CompareOp::Gt;
    default: return dp::CompareOp::Ge;
  }
}

std::uint32_t resolve_address(const MachineState& st, std::uint32_t addr) {
  const std::uint32_t size = st.cfg.shared_mem_words;
  if (addr < size) return addr;
  if (st.cfg.strict_memory)
    throw Error(ErrorCode::AddressOutOfRange,
                "address " + std::to_string(addr) + ", shared memory has " + std::to_string(size) + " words");
  return addr % size;
}

void exec_lanes(MachineState& st, const Instr& i, const ThreadShape& shape, Backend backend) {
  for (std::uint32_t tid = 0; tid < shape.active_threads; ++tid) {
    if (!guard_passes(st, i, tid)) continue;
    const std::uint32_t a = st.reg(tid, i.src1);
    const std::uint32_t b = st.reg(tid, i.src2);
    std::uint32_t result = 0;
    switch (i.op) {
      case Opcode::ADD: result = dp::alu_addsub(dp::AddSubOp::Add, a, b, i.is_signed); break;
      case Opcode::SUB: result = dp::alu_addsub(dp::AddSubOp::Sub, a, b, i.is_signed); break;
      case Opcode::ABS: result = dp::alu_addsub(dp::AddSubOp::Abs, a, b, i.is_signed); break;
      case Opcode::MIN: result = dp::alu_addsub(dp::AddSubOp::Min, a, b, i.is_signed); break;
      case Opcode::MAX: result = dp::alu_addsub(dp::AddSubOp::Max, a, b, i.is_signed); break;
      case Opcode::MUL: result = multiply(i, a, b, backend); break;
      case Opcode::AND: result = dp::alu_logic(dp::LogicOp::And, a, b); break;
      case Opcode::OR: result = dp::alu_logic(dp::LogicOp::Or, a, b); break;
      case Opcode::XOR: result = dp::alu_logic(dp::LogicOp::Xor, a, b); break;
      case Opcode::NOT: result = dp::alu_logic(dp::LogicOp::Not, a, b); break;
      case Opcode::CNOT: result = dp::alu_logic(dp::LogicOp::CNot, a, b); break;
      case Opcode::SHL:
      case Opcode::SHR:
      case Opcode::SAR: result = shift(i.op, a, b, backend); break;
      case Opcode::MOV: result = a; break;
      case Opcode::MOVI: result = static_cast<std::uint32_t>(i.imm); break;
      case Opcode::MOV_TID: result = tid; break;
      case Opcode::MOV_NTID: result = st.declared_threads; break;
      case Opcode::SETP_EQ:
      case Opcode::SETP_NE:
      case Opcode::SETP_LT:
      case Opcode::SETP_LE:
      case Opcode::SETP_GT:
      case Opcode::SETP_GE:
        st.preds[tid * kNumPredicates + i.dst] = dp::alu_compare(compare_op(i.op), a, b, i.is_signed);
        continue;
      case Opcode::SELP: result = st.pred(tid, static_cast<unsigned>(i.imm)) ? a : b; break;
      default: continue;
    }
    st.reg(tid, i.dst) = result;
  }
}

}  // namespace

LaneLocation lane_map(std::uint32_t tid) { return {tid % kNumSps, tid / kNumSps}; }

bool same_architectural_state(const MachineState& a, const MachineState& b) {
  return a.regs == b.regs && a.shared == b.shared && a.preds == b.preds && a.seq.pc == b.seq.pc &&
         a.cycles == b.cycles && a.halted == b.halted && a.declared_threads == b.declared_threads;
}

MachineState make_state(const ProgramImage& img, const MachineConfig& cfg) {
  validate(cfg);
  validate_image(img, cfg);
  MachineState st;
  st.cfg = cfg;
  st.declared_threads = img.declared_threads;
  st.regs.assign(std::size_t{img.declared_threads} * cfg.regs_per_thread, 0);
  st.shared.assign(cfg.shared_mem_words, 0);
  st.preds.assign(std::size_t{img.declared_threads} * kNumPredicates, 0);
  st.seq = make_sequencer(img, cfg.fetch_decode_stages);
  return st;
}

std::uint64_t load_store(MachineState& st, const Instr& i, const ThreadShape& shape) {
  check_registers(st, i);
  check_active_threads(st, shape);

  std::vector<std::uint32_t> addr(shape.active_threads);
  for (std::uint32_t tid = 0; tid < shape.active_threads; ++tid)
    if (guard_passes(st, i, tid)) addr[tid] = resolve_address(st, st.reg(tid, i.src1));

  if (i.op == Opcode::LDS) {
    for (std::uint32_t tid = 0; tid < shape.active_threads; ++tid)
      if (guard_passes(st, i, tid)) st.reg(tid, i.dst) = st.shared[addr[tid]];
  } else {
    for (std::uint32_t tid = 0; tid < shape.active_threads; ++tid)
      if (guard_passes(st, i, tid)) st.shared[addr[tid]] = st.reg(tid, i.src2);
  }
  return plan_for(op_class(i.op), shape).cycles;
}

void exec_instruction(MachineState& st, const Instr& i, const ThreadShape& shape, Backend backend) {
  switch (op_class(i.op)) {
    case OpClass::Load:
    case OpClass::Store:
      load_store(st, i, shape);
      return;
    case OpClass::Operation:
      check_registers(st, i);
      check_active_threads(st, shape);
      exec_lanes(st, i, shape, backend);
      return;
    case OpClass::Control:
    case OpClass::SingleCycle:
      return;
  }
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Halt: return "halt";
    case StopReason::MaxCycles: return "max_cycles";
    case StopReason::Trap: return "trap";
  }
  return "unknown";
}

Machine::Machine(const ProgramImage& img, const MachineConfig& cfg, Backend backend)
    : state_(make_state(img, cfg)), backend_(backend) {}

void Machine::load_shared(std::uint32_t offset, std::span<const std::uint32_t> words) {
  if (std::size_t{offset} + words.size() > state_.shared.size())
    throw Error(ErrorCode::AddressOutOfRange,
                "initial image of " + std::to_string(words.size()) + " words at offset " +
                    std::to_string(offset) + " exceeds shared memory");
  std::copy(words.begin(), words.end(), state_.shared.begin() + offset);
}

TraceRecord Machine::step() {
  if (state_.halted) throw std::logic_error("step on a halted machine");
  status_ = Status::Running;
  try {
    const Instr& i = current_instruction(state_.seq);
    const ThreadShape shape = shape_for(i, state_.declared_threads, state_.cfg);
    const std::uint64_t cost = plan_for(op_class(i.op), shape).cycles;

    bool taken = false;
    if (i.op == Opcode::BRA) taken = guard_passes(state_, i, 0);

    // Both may throw; neither commits until both succeed.
    SequencerState next = next_pc(state_.seq, i, taken);
    exec_instruction(state_, i, shape, backend_);

    TraceRecord rec;
    rec.pc = state_.seq.pc;
    rec.mnemonic = format_mnemonic(i);
    rec.cls = op_class(i.op);
    rec.shape = shape;
    rec.cycles = cost;
    rec.flush_bubbles = static_cast<std::uint32_t>(next.flushed.size());

    if (i.op == Opcode::HALT) state_.halted = true;
    state_.seq = std::move(next);
    state_.cycles += cost;
    rec.cumulative = state_.cycles;
    if (state_.halted) status_ = Status::Halted;
    return rec;
  } catch (const Error& e) {
    if (is_trap(e.code())) status_ = Status::Trapped;
    throw;
  }
}

RunResult Machine::run(std::uint64_t max_cycles, bool record_trace) {
  RunResult out;
  std::uint64_t used = 0;
  while (!state_.halted) {
    std::uint64_t cost = 0;
    try {
      const Instr& i = current_instruction(state_.seq);
      cost = plan_for(op_class(i.op), shape_for(i, state_.declared_threads, state_.cfg)).cycles;
      if (used + cost > max_cycles) {
        out.stop = StopReason::MaxCycles;
        out.truncated_cycles = max_cycles - used;
        used = max_cycles;
        status_ = Status::Running;
        break;
      }
      TraceRecord rec = step();
      used += rec.cycles;
      ++out.instructions_retired;
      out.cycles_by_class[static_cast<std::size_t>(rec.cls)] += rec.cycles;
      out.flush_bubbles += rec.flush_bubbles;
      if (record_trace) out.trace.push_back(std::move(rec));
    } catch (const Error& e) {
      if (!is_trap(e.code())) throw;
      status_ = Status::Trapped;
      out.stop = StopReason::Trap;
      out.trap = TrapInfo{e.code(), e.detail(), state_.seq.pc};
      break;
    }
  }
  if (state_.halted) out.stop = StopReason::Halt;
  out.total_cycles = used;
  out.final = state_;
  return out;
}

void Machine::reload_imem(const ProgramImage& img) {
  if (status_ == Status::Running)
    throw Error(ErrorCode::ReloadWhileRunning, "machine has not halted");
  validate_image(img, state_.cfg);
  if (img.declared_threads != state_.declared_threads) {
    state_.declared_threads = img.declared_threads;
    state_.regs.resize(std::size_t{img.declared_threads} * state_.cfg.regs_per_thread, 0);
    state_.preds.resize(std::size_t{img.declared_threads} * kNumPredicates, 0);
  }
  state_.seq = make_sequencer(img, state_.cfg.fetch_decode_stages);
  state_.halted = false;
  status_ = Status::Idle;
}

RunResult run(const ProgramImage& img, const MachineConfig& cfg, std::span<const std::uint32_t> init_shared,
              Backend backend, std::uint64_t max_cycles) {
  Machine m(img, cfg, backend);
  if (!init_shared.empty()) m.load_shared(0, init_shared);
  return m.run(max_cycles);
}

std::uint64_t shared_digest(std::span<const std::uint32_t> shared) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint32_t w : shared) {
    for (int k = 0; k < 4; ++k) {
      h ^= (w >> (8 * k)) & 0xFF;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace egpu
