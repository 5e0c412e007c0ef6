// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "asm_cases.hpp"
#include "datapath_oracles.hpp"
#include "egpu/assembler.hpp"
#include "egpu/datapath.hpp"
#include "egpu/error.hpp"
#include "egpu/machine.hpp"
#include "egpu/sequencer.hpp"
#include "kernel_oracles.hpp"
#include "test_support.hpp"

using namespace egpu;
namespace dp = egpu::datapath;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream note;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) note << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

using Criterion = std::function<void(Verdict&)>;

// ---------------------------------------------------------------------------

void reference_shift_vector(Verdict& v) {
  const auto t = dp::multiplicative_shift_trace({0b110001101111, 5, dp::ShiftKind::RightArith, 12});
  v.expect(t.multiplicand == 0b111101100011, "bit-reversed input");
  v.expect(t.onehot == 0b000000100000, "one-hot");
  v.expect(t.result == 0b111111100011, "result");
  v.expect(dp::sign_extend(t.result, 12) == -29, "signed result -29");
  v.expect(dp::sign_extend(0b110001101111, 12) == -913, "input is -913");
  v.note << "result=0x" << std::hex << t.result << std::dec << " (" << dp::sign_extend(t.result, 12) << ")";
}

void multiplier(Verdict& v) {
  std::uint64_t mismatches = 0, checks = 0;
  auto check = [&](std::uint32_t a, std::uint32_t b) {
    for (int mode = 0; mode < 4; ++mode) {
      const bool sg = mode & 1, hi = mode & 2;
      mismatches += dp::mul32(a, b, sg, hi) != test::widening_mul(a, b, sg, hi);
      ++checks;
    }
  };
  for (std::uint32_t a = 0; a < 256; ++a)
    for (std::uint32_t b = 0; b < 256; ++b) {
      check(a, b);
      check(static_cast<std::uint32_t>(static_cast<std::int8_t>(a)), static_cast<std::uint32_t>(static_cast<std::int8_t>(b)));
    }
  const std::uint32_t corners[] = {0, 1, 0xFFFFFFFF, 0x80000000, 0x7FFFFFFF, 0x0000FFFF, 0x00008000, 0xFFFF0000};
  for (auto a : corners)
    for (auto b : corners) check(a, b);
  std::mt19937_64 rng(0xACE2);
  for (int n = 0; n < 1'000'000; ++n) check(static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()));
  v.expect(mismatches == 0, std::to_string(mismatches) + " mismatches");
  v.note << checks << " products, " << mismatches << " mismatches";
}

void segmented_adder(Verdict& v) {
  std::uint64_t mismatches = 0;
  std::mt19937_64 rng(0xACE3);
  std::uint64_t seen[2][2][2] = {};  // [g1][g2][p2] occurrences among random products
  for (int n = 0; n < 1'000'000; ++n) {
    const auto pp = dp::partial_products(
        dp::split_operands(static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()), rng() & 1));
    const auto vec = dp::compose(pp);
    const auto s = dp::segmented_add(vec);
    mismatches += dp::compose_and_add(pp) != test::wide_add(vec);
    mismatches += s.value != test::wide_add(vec);
    ++seen[s.seg1.g][s.seg2.g][s.seg2.p];
  }

  // Directed: force every (g, p) state of seg2, with and without a seg1 carry.
  struct Seg { std::uint32_t x, y; bool g, p; };
  const Seg seg2_states[] = {{0x1234, 0x0101, false, false}, {0xFFFF, 0x0000, false, true},
                             {0x8000, 0x8000, true, false}, {0xFFFF, 0x0001, true, true}};
  int directed = 0;
  for (const auto& st : seg2_states)
    for (bool g1 : {false, true}) {
      dp::Vec66Pair vec;
      const std::uint32_t x1 = g1 ? 0xF000 : 0x0F00, y1 = g1 ? 0x1000 : 0x00F0;
      const std::uint64_t x3 = 0x1357, y3 = 0x2468;
      vec.v1 = (dp::u128{x3} << 48) | (dp::u128{st.x} << 32) | (dp::u128{x1} << 16) | 0xBEEF;
      vec.v2 = (dp::u128{y3} << 48) | (dp::u128{st.y} << 32) | (dp::u128{y1} << 16);
      const auto s = dp::segmented_add(vec);
      const bool expect_c3 = st.g || (st.p && g1);
      v.expect(s.seg2 == dp::CarryGP{st.g, st.p}, "seg2 (g,p) not forced");
      v.expect(s.seg1.g == g1, "seg1 g not forced");
      v.expect(s.carry_into_seg3 == expect_c3, "carry into seg3");
      v.expect(s.carry_into_seg2 == g1, "carry into seg2");
      v.expect(s.value == test::wide_add(vec), "directed sum");
      ++directed;
    }
  v.expect(mismatches == 0, std::to_string(mismatches) + " random mismatches");
  v.note << "1000000 random, " << mismatches << " mismatches; " << directed << " directed vectors; random (g2,p2) states hit:";
  for (int g = 0; g < 2; ++g)
    for (int p = 0; p < 2; ++p) v.note << " (" << g << p << ")=" << seen[0][g][p] + seen[1][g][p];
}

void shifter(Verdict& v) {
  std::uint64_t mismatches = 0, checks = 0;
  const dp::ShiftKind kinds[] = {dp::ShiftKind::Left, dp::ShiftKind::RightLogical, dp::ShiftKind::RightArith};
  auto check = [&](std::uint64_t x, std::uint32_t s, unsigned w) {
    for (auto k : kinds) {
      mismatches += dp::multiplicative_shift({x, s, k, w}) != test::native_shift(x, s, k, w);
      ++checks;
    }
  };
  for (std::uint64_t x = 0; x < 4096; ++x)
    for (std::uint32_t s = 0; s < 12; ++s) check(x, s, 12);
  std::mt19937_64 rng(0xACE4);
  for (std::uint32_t s = 0; s < 32; ++s)
    for (int n = 0; n < 10'000; ++n) check(static_cast<std::uint32_t>(rng()), s, 32);
  // Saturation past the width.
  for (std::uint32_t s = 12; s < 64; ++s)
    for (std::uint64_t x = 0; x < 4096; x += 7) check(x, s, 12);
  for (std::uint32_t s = 32; s < 64; ++s)
    for (int n = 0; n < 100; ++n) check(static_cast<std::uint32_t>(rng()), s, 32);
  v.expect(mismatches == 0, std::to_string(mismatches) + " mismatches");
  v.note << checks << " shifts, " << mismatches << " mismatches";
}

void cycle_fidelity(Verdict& v) {
  const auto op = instruction_cycles(Instr{.op = Opcode::ADD}, make_shape(512), true);
  v.expect(op.cycles == 32, "OPERATION 512 != 32 clocks");
  v.expect(op.plan.end_compare == CounterPoint{30, 0}, "OPERATION comparand != 30");
  v.expect(op.trace.size() == 32 && op.trace[31].end && op.trace[30].depth_count == 30,
           "OPERATION end flag not registered after depth 30");

  const auto ld = instruction_cycles(Instr{.op = Opcode::LDS}, make_shape(512), true);
  v.expect(ld.cycles == 128, "LOAD 512 != 128 clocks");
  v.expect(ld.plan.end_compare == CounterPoint{31, 2}, "LOAD comparand != (31,2)");
  const auto& pre = ld.trace[ld.trace.size() - 2];
  v.expect(pre.depth_count == 31 && pre.width_count == 2 && ld.trace.back().end, "LOAD end not at (31,2)");

  bool sweep = true;
  for (std::uint32_t t = 1; t <= 4096; ++t)
    sweep = sweep && instruction_cycles(Instr{.op = Opcode::ADD}, make_shape(t)).cycles == (t + 15) / 16;
  v.expect(sweep, "OPERATION ceil(T/16) sweep");

  const auto img = assemble(".threads 512\nMOV.TID r0\nSTS.n16 [r0], r0\nSTS [r0], r0\nHALT\n");
  const auto r = run(img, MachineConfig{}, {}, Backend::Reference, 1'000'000);
  const bool ran = r.stop == StopReason::Halt && r.trace.size() == 4;
  v.expect(ran, "STORE program did not halt");
  if (ran) {
    v.expect(r.trace[1].cycles == 16, "STORE .n16 != 16 clocks");
    v.expect(r.trace[2].cycles == 512, "STORE unscaled != 512 clocks");
    v.note << "OP512=" << op.cycles << " cmp=" << op.plan.end_compare.depth << ", LD512=" << ld.cycles << " end=("
           << ld.plan.end_compare.depth << "," << ld.plan.end_compare.width << "), STS.n16=" << r.trace[1].cycles
           << " STS=" << r.trace[2].cycles;
  }
}

void backend_equivalence(Verdict& v) {
  int runs = 0;
  for (const auto& kc : test::corpus_cases()) {
    MachineConfig cfg;
    cfg.predicates_enabled = kc.predicates;
    const auto img = assemble(test::read_kernel(kc.file), AsmOptions{kc.predicates});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed * 7919 + 1);
      const auto mem = test::random_memory(rng, kc.live_words);
      const auto ref = run(img, cfg, mem, Backend::Reference, 10'000'000);
      const auto bit = run(img, cfg, mem, Backend::BitTrue, 10'000'000);
      const std::string tag = kc.file + " seed " + std::to_string(seed);
      v.expect(ref.stop == StopReason::Halt && bit.stop == StopReason::Halt, tag + " did not halt");
      v.expect(ref.final.shared == bit.final.shared, tag + " shared memory differs");
      v.expect(same_architectural_state(ref.final, bit.final), tag + " state differs");
      v.expect(ref.total_cycles == bit.total_cycles, tag + " cycle totals differ");
      v.expect(ref.final.shared == kc.expect(mem), tag + " disagrees with the C++ model");
      ++runs;
    }
  }
  v.note << test::corpus_cases().size() << " kernels x 20 seeds, " << runs << " paired runs";
}

void branch_shadow(Verdict& v) {
  for (unsigned stages : {4u, 2u, 7u}) {
    MachineConfig cfg;
    cfg.fetch_decode_stages = stages;
    Machine m(assemble(test::read_kernel("branch_shadow.s")), cfg);
    const std::uint32_t sentinel[] = {0xDEADBEEF};
    m.load_shared(100, sentinel);
    std::size_t zeroed = 0, poison = 0;
    std::uint64_t bubbles = 0;
    while (m.status() != Machine::Status::Halted) {
      const auto rec = m.step();
      bubbles += rec.flush_bubbles;
      for (const auto& slot : m.state().seq.flushed) {
        zeroed += slot.zeroed;
        poison += slot.instr && slot.instr->op == Opcode::STS && slot.pc >= 3 && slot.pc <= 6;
      }
    }
    const std::string tag = "stages=" + std::to_string(stages);
    v.expect(m.state().shared[100] == 0xDEADBEEF, tag + ": poison location written");
    v.expect(m.state().shared[5] == 7, tag + ": branch target did not run");
    v.expect(bubbles == stages && zeroed == stages, tag + ": bubble count");
    v.expect(poison == std::min(stages, 4u), tag + ": zeroed slots are not the poison stores");
    if (stages == 4) v.note << "mem[100] untouched, " << bubbles << " zeroed bubbles at 4 stages";
  }
}

void assembler_round_trip(Verdict& v) {
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(EGPU_KERNEL_DIR)) {
    if (entry.path().extension() != ".s") continue;
    const auto name = entry.path().filename().string();
    const AsmOptions opts{name == "clamp.s"};
    const auto first = serialize(assemble(test::read_text(entry.path()), opts));
    const auto second = serialize(assemble(disassemble(deserialize(first)), opts));
    v.expect(first == second, name + " not byte-identical");
    ++files;
  }
  int diags = 0;
  for (const auto& c : test::diagnostic_cases()) {
    bool ok = false;
    try {
      assemble(c.source, AsmOptions{c.predicates});
    } catch (const Error& e) {
      ok = e.code() == c.code && e.line() == c.line;
    }
    v.expect(ok, c.name);
    ++diags;
  }
  v.note << files << " corpus files round-tripped, " << diags << " diagnostics checked";
}

}  // namespace

int main() {
  struct Entry {
    const char* id;
    const char* title;
    Criterion fn;
    double budget_s;  // 0: no runtime limit
  };
  const Entry criteria[] = {
      {"AC1", "arithmetic shift of -913 by 5", reference_shift_vector, 1.0},
      {"AC2", "multiplier equivalence", multiplier, 60.0},
      {"AC3", "segmented adder equivalence", segmented_adder, 0.0},
      {"AC4", "shifter equivalence", shifter, 0.0},
      {"AC5", "cycle-count fidelity", cycle_fidelity, 0.0},
      {"AC6", "backend equivalence on the corpus", backend_equivalence, 60.0},
      {"AC7", "branch shadow", branch_shadow, 0.0},
      {"AC8", "assembler round trip and diagnostics", assembler_round_trip, 0.0},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.fn(v);
    } catch (const std::exception& e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0) v.expect(secs < c.budget_s, "over the runtime budget");
    std::printf("[%s] %s %s (%.2fs): %s\n", v.pass ? "PASS" : "FAIL", c.id, c.title, secs, v.note.str().c_str());
    failures += !v.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
