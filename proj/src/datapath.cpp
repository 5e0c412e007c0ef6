#include "egpu/datapath.hpp"

#include <cassert>

namespace egpu::datapath {

namespace {

constexpr std::uint32_t kSegMask = 0xFFFF;

std::uint32_t segment(u128 v, unsigned index) {
  return static_cast<std::uint32_t>(v >> (kHalfBits * index)) & kSegMask;
}

std::uint32_t lane(std::uint32_t half16, bool sign_extend_lane) {
  if (sign_extend_lane && (half16 & 0x8000)) return (half16 | ~kSegMask) & kLaneMask;
  return half16;
}

std::uint64_t product_through_datapath(std::uint64_t multiplicand, std::uint64_t multiplier,
                                       unsigned width) {
  if (width <= 32)
    return mul32(static_cast<std::uint32_t>(multiplicand), static_cast<std::uint32_t>(multiplier),
                 false, false) &
           width_mask(width);
  return static_cast<std::uint64_t>(u128{multiplicand} * multiplier) & width_mask(width);
}

}  // namespace

std::int64_t sign_extend(std::uint64_t value, unsigned bits) {
  const std::uint64_t m = bits >= 64 ? ~0ull : (1ull << bits) - 1;
  value &= m;
  if (bits < 64 && (value >> (bits - 1)) & 1) value |= ~m;
  return static_cast<std::int64_t>(value);
}

OperandHalves split_operands(std::uint32_t a, std::uint32_t b, bool is_signed) {
  return {lane(a >> 16, is_signed), a & kSegMask, lane(b >> 16, is_signed), b & kSegMask};
}

PartialProducts partial_products(const OperandHalves& h) {
  const std::int64_t ah = sign_extend(h.ah, 18);
  const std::int64_t al = sign_extend(h.al, 18);
  const std::int64_t bh = sign_extend(h.bh, 18);
  const std::int64_t bl = sign_extend(h.bl, 18);
  // One DSP block runs two independent multipliers, the other sums a pair.
  const std::int64_t a = ah * bh;
  const std::int64_t c = al * bl;
  const std::int64_t b = ah * bl + al * bh;
  return {static_cast<std::uint64_t>(a) & kProductMask, static_cast<std::uint64_t>(b) & kProductMask,
          static_cast<std::uint64_t>(c) & kProductMask};
}

Vec66Pair compose(const PartialProducts& pp) {
  Vec66Pair v;
  v.v1 = (u128{pp.a & ((1ull << 34) - 1)} << 32) | (pp.c & 0xFFFFFFFFull);
  __extension__ const __int128 b = sign_extend(pp.b, 37);
  v.v2 = (static_cast<u128>(b) << 16) & kVec66Mask;
  return v;
}

CarryGP segment_gp(std::uint32_t x, std::uint32_t y) {
  x &= kSegMask;
  y &= kSegMask;
  return {((x + y) >> 16) != 0, ((x | y) & kSegMask) == kSegMask};
}

SegmentedSum segmented_add(const Vec66Pair& v) {
  assert(segment(v.v2, 0) == 0);
  SegmentedSum out;

  // [15:0] passes straight through from C.
  const std::uint32_t r0 = segment(v.v1, 0);

  // [31:16] has no carry-in.
  const std::uint32_t x1 = segment(v.v1, 1), y1 = segment(v.v2, 1);
  const std::uint32_t r1 = (x1 + y1) & kSegMask;
  out.seg1 = segment_gp(x1, y1);

  // [47:32] and [63:48] are summed independently, carries applied a stage later.
  const std::uint32_t x2 = segment(v.v1, 2), y2 = segment(v.v2, 2);
  const std::uint32_t x3 = segment(v.v1, 3), y3 = segment(v.v2, 3);
  const std::uint32_t s2 = (x2 + y2) & kSegMask;
  const std::uint32_t s3 = (x3 + y3) & kSegMask;
  out.seg2 = segment_gp(x2, y2);

  out.carry_into_seg2 = out.seg1.g;
  out.carry_into_seg3 = out.seg2.g || (out.seg2.p && out.seg1.g);

  const std::uint32_t r2 = (s2 + (out.carry_into_seg2 ? 1u : 0u)) & kSegMask;
  const std::uint32_t r3 = (s3 + (out.carry_into_seg3 ? 1u : 0u)) & kSegMask;

  out.value = std::uint64_t{r0} | std::uint64_t{r1} << 16 | std::uint64_t{r2} << 32 |
              std::uint64_t{r3} << 48;
  return out;
}

std::uint64_t compose_and_add(const PartialProducts& pp) { return segmented_add(compose(pp)).value; }

std::uint64_t mul64(std::uint32_t a, std::uint32_t b, bool is_signed) {
  return compose_and_add(partial_products(split_operands(a, b, is_signed)));
}

std::uint32_t mul32(std::uint32_t a, std::uint32_t b, bool is_signed, bool hi) {
  const std::uint64_t p = mul64(a, b, is_signed);
  return static_cast<std::uint32_t>(hi ? p >> 32 : p);
}

std::uint64_t width_mask(unsigned width) { return width >= 64 ? ~0ull : (1ull << width) - 1; }

std::uint64_t bit_reverse(std::uint64_t x, unsigned width) {
  std::uint64_t r = 0;
  for (unsigned k = 0; k < width; ++k)
    if ((x >> k) & 1) r |= 1ull << (width - 1 - k);
  return r;
}

std::uint64_t onehot(std::uint32_t bb, unsigned width) { return bb < width ? 1ull << bb : 0; }

std::uint64_t unary(std::uint32_t bb, unsigned width) {
  return bb >= width ? width_mask(width) : (1ull << bb) - 1;
}

ShiftTrace multiplicative_shift_trace(const ShiftRequest& req) {
  assert(req.width >= 4 && req.width <= 64);
  const unsigned w = req.width;
  const std::uint64_t data = req.aa & width_mask(w);
  const bool right = req.kind != ShiftKind::Left;

  ShiftTrace t;
  t.multiplicand = right ? bit_reverse(data, w) : data;
  t.onehot = onehot(req.bb, w);
  t.product_low = product_through_datapath(t.multiplicand, t.onehot, w);
  t.result = right ? bit_reverse(t.product_low, w) : t.product_low;

  const bool negative = (data >> (w - 1)) & 1;
  if (req.kind == ShiftKind::RightArith && negative) {
    t.unary_mask = bit_reverse(unary(req.bb, w), w);
    t.result |= t.unary_mask;
  }
  return t;
}

std::uint64_t multiplicative_shift(const ShiftRequest& req) {
  return multiplicative_shift_trace(req).result;
}

std::uint32_t alu_logic(LogicOp op, std::uint32_t a, std::uint32_t b) {
  switch (op) {
    case LogicOp::And: return a & b;
    case LogicOp::Or: return a | b;
    case LogicOp::Xor: return a ^ b;
    case LogicOp::Not: return ~a;
    case LogicOp::CNot: return a == 0 ? 1u : 0u;
  }
  return 0;
}

std::uint32_t alu_addsub(AddSubOp op, std::uint32_t a, std::uint32_t b, bool is_signed) {
  switch (op) {
    case AddSubOp::Add: return a + b;
    case AddSubOp::Sub: return a - b;
    // Always a two's-complement magnitude; the most negative value maps to itself.
    case AddSubOp::Abs: return (a & 0x80000000u) ? 0u - a : a;
    case AddSubOp::Min:
      if (is_signed) return static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b) ? a : b;
      return a < b ? a : b;
    case AddSubOp::Max:
      if (is_signed) return static_cast<std::int32_t>(a) > static_cast<std::int32_t>(b) ? a : b;
      return a > b ? a : b;
  }
  return 0;
}

bool alu_compare(CompareOp op, std::uint32_t a, std::uint32_t b, bool is_signed) {
  const auto sa = static_cast<std::int32_t>(a), sb = static_cast<std::int32_t>(b);
  const bool lt = is_signed ? sa < sb : a < b;
  const bool eq = a == b;
  switch (op) {
    case CompareOp::Eq: return eq;
    case CompareOp::Ne: return !eq;
    case CompareOp::Lt: return lt;
    case CompareOp::Le: return lt || eq;
    case CompareOp::Gt: return !lt && !eq;
    case CompareOp::Ge: return !lt;
  }
  return false;
}

}  // namespace egpu::datapath
