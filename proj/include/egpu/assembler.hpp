#pragma once

// Text assembly for the SIMT core.
//
//   # comment
//   .threads 64
//   .entry main
//   main:  MOV.TID r0
//          LDS r1, [r0]
//          MUL.hi.s32 r2, r1, r1
//          ADD.n16 r3, r2, r2        # per-instruction thread scale
//   @!p0   STS [r0], r3              # predicate guard
//          LOOP 4, body_end
//          SETP.LT.s32 p1, r1, r2
//          SELP r4, r1, r2, p1
//          BRA main
//
// Mnemonics and modifiers are case-insensitive. Immediates take decimal,
// 0x hex or 0b binary. Branch and loop targets are labels or instruction
// indices.

#include <string>
#include <string_view>

#include "egpu/image.hpp"

namespace egpu {

struct AsmOptions {
  bool predicates_enabled = false;
};

/// Two-pass assembly. Errors are egpu::Error with a 1-based line().
ProgramImage assemble(std::string_view source, const AsmOptions& opts = {});

/// Mnemonic plus modifiers, e.g. "MUL.hi.s32" or "STS.n16"; no guard or operands.
std::string format_mnemonic(const Instr& i);

/// Renders one instruction; `target_label` is used in place of a numeric
/// branch/loop target when non-empty.
std::string format_instruction(const Instr& i, std::string_view target_label = {});

/// Inverse of assemble up to labels, which are regenerated as L<index>.
std::string disassemble(const ProgramImage& img);

}  // namespace egpu
