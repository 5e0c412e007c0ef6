#include <doctest.h>

#include <random>

#include "datapath_oracles.hpp"
#include "egpu/datapath.hpp"

using namespace egpu::datapath;
using egpu::test::native_shift;
using egpu::test::wide_add;
using egpu::test::widening_mul;

TEST_CASE("split_operands") {
  CHECK(split_operands(0, 0, true) == OperandHalves{});
  CHECK(split_operands(0, 0, false) == OperandHalves{});
  const auto s = split_operands(0xFFFFFFFF, 0, true);
  CHECK(s.ah == 0x3FFFF);
  CHECK(s.al == 0x0FFFF);
  const auto u = split_operands(0xFFFFFFFF, 0, false);
  CHECK(u.ah == 0x0FFFF);
  CHECK(u.al == 0x0FFFF);
  // Low lanes are never sign extended.
  CHECK(split_operands(0x00008000, 0x00008000, true).al == 0x8000);
  CHECK(split_operands(0x00008000, 0x00008000, true).bl == 0x8000);
}

TEST_CASE("partial_products") {
  CHECK(partial_products(OperandHalves{}) == PartialProducts{});
  const auto pp = partial_products(split_operands(0x00010001, 0x00010001, false));
  CHECK(pp.a == 1);
  CHECK(pp.c == 1);
  CHECK(pp.b == 2);
  // -1 x -1 in the high lanes gives +1; -1 x 0xFFFF cross terms are negative.
  const auto neg = partial_products(split_operands(0xFFFFFFFF, 0xFFFFFFFF, true));
  CHECK(neg.a == 1);
  CHECK(neg.c == 0xFFFFull * 0xFFFF);
  CHECK(sign_extend(neg.b, 37) == -2 * 0xFFFF);
}

TEST_CASE("partial products recombine to the widening product") {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 100000; ++n) {
    const auto a = static_cast<std::uint32_t>(rng()), b = static_cast<std::uint32_t>(rng());
    for (bool sg : {false, true}) {
      const auto pp = partial_products(split_operands(a, b, sg));
      const __int128 sum = (static_cast<__int128>(sign_extend(pp.a, 37)) << 32) +
                           (static_cast<__int128>(sign_extend(pp.b, 37)) << 16) + sign_extend(pp.c, 37);
      const std::uint64_t expect = sg ? static_cast<std::uint64_t>(std::int64_t{static_cast<std::int32_t>(a)} *
                                                                   static_cast<std::int32_t>(b))
                                      : std::uint64_t{a} * b;
      REQUIRE(static_cast<std::uint64_t>(sum) == expect);
    }
  }
}

TEST_CASE("compose keeps V2's low segment clear") {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 100000; ++n) {
    const auto v = compose(partial_products(
        split_operands(static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()), rng() & 1)));
    REQUIRE(static_cast<std::uint32_t>(v.v2 & 0xFFFF) == 0);
    REQUIRE((v.v1 >> 66) == 0);
    REQUIRE((v.v2 >> 66) == 0);
  }
}

TEST_CASE("segment generate and propagate") {
  CHECK(segment_gp(0xFFFF, 0x0000) == CarryGP{false, true});
  CHECK(segment_gp(0xFFFF, 0x0001) == CarryGP{true, true});
  CHECK(segment_gp(0x8000, 0x8000) == CarryGP{true, false});
  CHECK(segment_gp(0x1234, 0x0001) == CarryGP{false, false});
}

TEST_CASE("compose_and_add equals a plain 66-bit add") {
  CHECK(compose_and_add(PartialProducts{}) == 0);
  std::mt19937_64 rng(9);
  for (int n = 0; n < 200000; ++n) {
    const auto pp = partial_products(
        split_operands(static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()), rng() & 1));
    REQUIRE(compose_and_add(pp) == wide_add(compose(pp)));
  }
}

TEST_CASE("segmented add matches wide add on arbitrary vectors") {
  // Not only products: any V1 and any V2 with a clear low segment.
  std::mt19937_64 rng(10);
  for (int n = 0; n < 200000; ++n) {
    Vec66Pair v;
    v.v1 = ((u128{rng()} << 64) | rng()) & kVec66Mask;
    v.v2 = ((u128{rng()} << 64) | rng()) & kVec66Mask & ~u128{0xFFFF};
    REQUIRE(segmented_add(v).value == wide_add(v));
  }
}

TEST_CASE("mul32 examples") {
  for (bool sg : {false, true}) CHECK(mul32(0xDEADBEEF, 1, sg, false) == 0xDEADBEEF);
  CHECK(mul32(0xFFFFFFFF, 0xFFFFFFFF, true, true) == 0);
  CHECK(mul32(0xFFFFFFFF, 0xFFFFFFFF, false, true) == 0xFFFFFFFE);
  CHECK(mul32(0x80000000, 0x80000000, true, true) == 0x40000000);
  CHECK(mul32(0x80000000, 0xFFFFFFFF, true, true) == 0);
  CHECK(mul32(0x80000000, 0xFFFFFFFF, true, false) == 0x80000000);
}

TEST_CASE("mul32 exhaustive over 8-bit operands") {
  for (std::uint32_t a = 0; a < 256; ++a)
    for (std::uint32_t b = 0; b < 256; ++b)
      for (int mode = 0; mode < 4; ++mode) {
        const bool sg = mode & 1, hi = mode & 2;
        // Sign-extended 8-bit values exercise the negative paths too.
        const auto sa = static_cast<std::uint32_t>(static_cast<std::int8_t>(a));
        const auto sb = static_cast<std::uint32_t>(static_cast<std::int8_t>(b));
        REQUIRE(mul32(a, b, sg, hi) == widening_mul(a, b, sg, hi));
        REQUIRE(mul32(sa, sb, sg, hi) == widening_mul(sa, sb, sg, hi));
      }
}

TEST_CASE("arithmetic right shift of -913 by 5, W=12") {
  const auto t = multiplicative_shift_trace({0b110001101111, 5, ShiftKind::RightArith, 12});
  CHECK(t.multiplicand == 0b111101100011);
  CHECK(t.onehot == 0b000000100000);
  CHECK(t.result == 0b111111100011);
  CHECK(sign_extend(t.result, 12) == -29);
}

TEST_CASE("shifter examples") {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 100; ++n) {
    const auto x = static_cast<std::uint32_t>(rng());
    for (auto k : {ShiftKind::Left, ShiftKind::RightLogical, ShiftKind::RightArith})
      CHECK(multiplicative_shift({x, 0, k, 32}) == x);
  }
  CHECK(multiplicative_shift({0x80000000, 31, ShiftKind::RightLogical, 32}) == 1);
  CHECK(multiplicative_shift({0x80000000, 31, ShiftKind::RightArith, 32}) == 0xFFFFFFFF);
}

TEST_CASE("shifter saturates at and beyond the width") {
  for (std::uint32_t s : {32u, 33u, 63u}) {
    CHECK(multiplicative_shift({0xFFFFFFFF, s, ShiftKind::Left, 32}) == 0);
    CHECK(multiplicative_shift({0xFFFFFFFF, s, ShiftKind::RightLogical, 32}) == 0);
    CHECK(multiplicative_shift({0xFFFFFFFF, s, ShiftKind::RightArith, 32}) == 0xFFFFFFFF);
    CHECK(multiplicative_shift({0x7FFFFFFF, s, ShiftKind::RightArith, 32}) == 0);
  }
}

TEST_CASE("shifter matches native shifts for every width") {
  std::mt19937_64 rng(12);
  for (unsigned w = 4; w <= 64; ++w)
    for (std::uint32_t s = 0; s < 64; ++s)
      for (int n = 0; n < 20; ++n) {
        const std::uint64_t x = rng();
        for (auto k : {ShiftKind::Left, ShiftKind::RightLogical, ShiftKind::RightArith})
          REQUIRE(multiplicative_shift({x, s, k, w}) == native_shift(x, s, k, w));
      }
}

TEST_CASE("bit_reverse, onehot and unary") {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 10000; ++n) {
    const unsigned w = 4 + rng() % 61;
    const std::uint64_t x = rng() & width_mask(w);
    REQUIRE(bit_reverse(bit_reverse(x, w), w) == x);
    REQUIRE(__builtin_popcountll(bit_reverse(x, w)) == __builtin_popcountll(x));
  }
  for (unsigned w : {12u, 32u}) {
    for (std::uint32_t s = 0; s < w; ++s) {
      CHECK(__builtin_popcountll(onehot(s, w)) == 1);
      CHECK(__builtin_popcountll(unary(s, w)) == static_cast<int>(s));
    }
    CHECK(onehot(w, w) == 0);
    CHECK(unary(w, w) == width_mask(w));
  }
}

TEST_CASE("ALU examples") {
  CHECK(alu_logic(LogicOp::Xor, 0x1234, 0x1234) == 0);
  CHECK(alu_logic(LogicOp::CNot, 0, 99) == 1);
  CHECK(alu_logic(LogicOp::CNot, 5, 0) == 0);
  CHECK(alu_addsub(AddSubOp::Add, 0xFFFFFFFF, 1, false) == 0);
  CHECK(alu_addsub(AddSubOp::Min, 0x80000000, 0, true) == 0x80000000);
  CHECK(alu_addsub(AddSubOp::Min, 0x80000000, 0, false) == 0);
  CHECK(alu_addsub(AddSubOp::Abs, 0x80000000, 0, true) == 0x80000000);
  CHECK(alu_addsub(AddSubOp::Abs, static_cast<std::uint32_t>(-5), 0, false) == 5);
}

TEST_CASE("ALU matches native arithmetic") {
  std::mt19937_64 rng(14);
  for (int n = 0; n < 100000; ++n) {
    const auto a = static_cast<std::uint32_t>(rng()), b = static_cast<std::uint32_t>(rng());
    const auto sa = static_cast<std::int32_t>(a), sb = static_cast<std::int32_t>(b);
    REQUIRE(alu_logic(LogicOp::And, a, b) == (a & b));
    REQUIRE(alu_logic(LogicOp::Or, a, b) == (a | b));
    REQUIRE(alu_logic(LogicOp::Not, a, b) == ~a);
    REQUIRE(alu_addsub(AddSubOp::Sub, a, b, false) == a - b);
    REQUIRE(alu_addsub(AddSubOp::Max, a, b, false) == std::max(a, b));
    REQUIRE(alu_addsub(AddSubOp::Max, a, b, true) == static_cast<std::uint32_t>(std::max(sa, sb)));
    REQUIRE(alu_addsub(AddSubOp::Min, a, b, true) == static_cast<std::uint32_t>(std::min(sa, sb)));
    REQUIRE(alu_compare(CompareOp::Lt, a, b, true) == (sa < sb));
    REQUIRE(alu_compare(CompareOp::Lt, a, b, false) == (a < b));
    REQUIRE(alu_compare(CompareOp::Ge, a, b, true) == (sa >= sb));
    REQUIRE(alu_compare(CompareOp::Le, a, b, false) == (a <= b));
    REQUIRE(alu_compare(CompareOp::Gt, a, b, true) == (sa > sb));
    REQUIRE(alu_compare(CompareOp::Ne, a, a, false) == false);
  }
}
