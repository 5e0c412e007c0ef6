#pragma once

// Bit-true model of one SP's integer datapath.
//
// The 32x32 multiplier is a 33x33 signed unit built from four 18x19 DSP
// multipliers over 16-bit operand halves. Their three 37-bit outputs are
// arranged into two 66-bit vectors and summed by a segmented adder whose two
// upper 16-bit segments take their carries from {generate, propagate} pairs.
// Shifts reuse the multiplier: a left shift multiplies by one-hot(shift), a
// right shift does the same on bit-reversed data, and an arithmetic right
// shift ORs in a bit-reversed unary mask when the input is negative.
//
// Everything here is combinational and pure.

#include <cstdint>

namespace egpu::datapath {

__extension__ using u128 = unsigned __int128;

inline constexpr unsigned kHalfBits = 16;
inline constexpr std::uint32_t kLaneMask = 0x3FFFF;           // 18-bit multiplier lane
inline constexpr std::uint64_t kProductMask = (1ull << 37) - 1;  // 37-bit DSP output
inline constexpr u128 kVec66Mask = (u128{1} << 66) - 1;

/// 18-bit lane patterns fed to the multipliers (16 payload bits in the LSBs).
struct OperandHalves {
  std::uint32_t ah = 0, al = 0, bh = 0, bl = 0;
  bool operator==(const OperandHalves&) const = default;
};

/// 37-bit two's-complement DSP outputs: a = AH*BH, c = AL*BL, b = AH*BL + AL*BH.
struct PartialProducts {
  std::uint64_t a = 0, b = 0, c = 0;
  bool operator==(const PartialProducts&) const = default;
};

/// v1 = {A[33:0], C[31:0]}; v2 = sign-extended {B, 16'b0}. Both 66-bit.
struct Vec66Pair {
  u128 v1 = 0, v2 = 0;
};

struct CarryGP {
  bool g = false;
  bool p = false;
  bool operator==(const CarryGP&) const = default;
};

/// Result of the segmented 66-bit add plus the carry signals it used.
struct SegmentedSum {
  std::uint64_t value = 0;
  CarryGP seg1, seg2;
  bool carry_into_seg2 = false;
  bool carry_into_seg3 = false;
};

std::int64_t sign_extend(std::uint64_t value, unsigned bits);

OperandHalves split_operands(std::uint32_t a, std::uint32_t b, bool is_signed);
PartialProducts partial_products(const OperandHalves& h);
Vec66Pair compose(const PartialProducts& pp);

/// Generate/propagate of one 16-bit segment addition with zero carry-in.
CarryGP segment_gp(std::uint32_t x, std::uint32_t y);

SegmentedSum segmented_add(const Vec66Pair& v);
std::uint64_t compose_and_add(const PartialProducts& pp);

/// 64-bit product assembled through the full construction.
std::uint64_t mul64(std::uint32_t a, std::uint32_t b, bool is_signed);
std::uint32_t mul32(std::uint32_t a, std::uint32_t b, bool is_signed, bool hi);

// ---------------------------------------------------------------------------
// Multiplicative shifter

enum class ShiftKind : std::uint8_t { Left, RightLogical, RightArith };

struct ShiftRequest {
  std::uint64_t aa = 0;  // data, low `width` bits significant
  std::uint32_t bb = 0;  // shift amount, < 64
  ShiftKind kind = ShiftKind::Left;
  unsigned width = 32;   // 4..64
};

/// Every intermediate vector of one shift, all `width` bits wide.
struct ShiftTrace {
  std::uint64_t multiplicand = 0;  // aa, or reverse(aa) for right shifts
  std::uint64_t onehot = 0;
  std::uint64_t product_low = 0;   // low `width` bits of multiplicand * onehot
  std::uint64_t unary_mask = 0;    // bit-reversed unary(bb); 0 unless arith on negative data
  std::uint64_t result = 0;
};

std::uint64_t width_mask(unsigned width);
std::uint64_t bit_reverse(std::uint64_t x, unsigned width);
/// One-hot of the shift amount; all zeroes once bb >= width.
std::uint64_t onehot(std::uint32_t bb, unsigned width);
/// `bb` ones in the LSBs, saturating at `width` ones.
std::uint64_t unary(std::uint32_t bb, unsigned width);

ShiftTrace multiplicative_shift_trace(const ShiftRequest& req);
std::uint64_t multiplicative_shift(const ShiftRequest& req);

// ---------------------------------------------------------------------------
// Logic and add/sub ALU

enum class LogicOp : std::uint8_t { And, Or, Xor, Not, CNot };
enum class AddSubOp : std::uint8_t { Add, Sub, Abs, Min, Max };
enum class CompareOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

std::uint32_t alu_logic(LogicOp op, std::uint32_t a, std::uint32_t b);
std::uint32_t alu_addsub(AddSubOp op, std::uint32_t a, std::uint32_t b, bool is_signed);
bool alu_compare(CompareOp op, std::uint32_t a, std::uint32_t b, bool is_signed);

}  // namespace egpu::datapath
