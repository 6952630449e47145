#include <array>

#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "t2sim/isa/cond.hpp"
#include "t2sim/isa/encoding.hpp"
#include "t2sim/isa/ops.hpp"
#include "t2sim/isa/state.hpp"

using namespace t2sim;
using namespace t2sim::isa;

TEST(Cond, AlwaysIsTrueForEveryFlagState) {
    for (unsigned f = 0; f < 16; ++f) {
        EXPECT_TRUE(eval_cond(CondCode::AL, Flags{(f & 8) != 0, (f & 4) != 0, (f & 2) != 0, (f & 1) != 0}));
    }
}

TEST(Cond, EqFollowsZ) {
    EXPECT_TRUE(eval_cond(CondCode::EQ, Flags{false, true, false, false}));
    EXPECT_FALSE(eval_cond(CondCode::EQ, Flags{false, false, false, false}));
}

TEST(Cond, GtWithClearFlags) { EXPECT_TRUE(eval_cond(CondCode::GT, Flags{})); }

TEST(Cond, ParseAndInvertRoundTrip) {
    for (unsigned c = 0; c < 14; ++c) {
        const auto code = static_cast<CondCode>(c);
        EXPECT_EQ(parse_cond(to_string(code)), code);
        EXPECT_EQ(invert(invert(code)), code);
        EXPECT_NE(invert(code), code);
    }
    EXPECT_FALSE(parse_cond("zz"));
}

TEST(Bitfield, InsertZeroByteIntoOnes) {
    EXPECT_EQ(exec_bitfield(BitfieldKind::BFI, 0xFFFFFFFF, 0, 8, 8), 0xFFFF00FFu);
}

TEST(Bitfield, FullWidthClear) { EXPECT_EQ(exec_bitfield(BitfieldKind::BFC, 0xFFFFFFFF, 0, 0, 32), 0u); }

TEST(Bitfield, ExtractMiddleByte) {
    EXPECT_EQ(exec_bitfield(BitfieldKind::UBFX, 0, 0x12345678, 12, 8), 0x45u);
    EXPECT_EQ(exec_bitfield(BitfieldKind::UBFX, 0, 0x12345678, 12, 8), (0x12345678u >> 12) % 256u);
}

TEST(Bitfield, FullWidthExtractAndInsert) {
    EXPECT_EQ(exec_bitfield(BitfieldKind::UBFX, 0, 0xCAFEBABE, 0, 32), 0xCAFEBABEu);
    EXPECT_EQ(exec_bitfield(BitfieldKind::BFI, 0x11111111, 0xCAFEBABE, 0, 32), 0xCAFEBABEu);
    EXPECT_EQ(exec_bitfield(BitfieldKind::UBFX, 0, 0x80000000, 31, 1), 1u);
}

TEST(Rbit, FixedPointAndMirror) {
    EXPECT_EQ(exec_rbit(0), 0u);
    EXPECT_EQ(exec_rbit(1), 0x80000000u);
    EXPECT_EQ(exec_rbit(0x12345678), oracle::rbit(0x12345678));
    EXPECT_EQ(exec_rbit(0x12345678), 0x1E6A2C48u);
}

TEST(Divide, Examples) {
    EXPECT_EQ(exec_divide(false, 100, 7).quotient, 14u);
    EXPECT_EQ(exec_divide(true, static_cast<Word>(-7), 2).quotient, static_cast<Word>(-3));
    const auto z = exec_divide(false, 12345, 0);
    EXPECT_EQ(z.quotient, 0u);
    EXPECT_TRUE(z.divide_by_zero);
    EXPECT_TRUE(exec_divide(true, 5, 0).divide_by_zero);
    EXPECT_FALSE(exec_divide(false, 5, 1).divide_by_zero);
}

TEST(Divide, SignedOverflowWraps) {
    EXPECT_EQ(exec_divide(true, 0x80000000u, 0xFFFFFFFFu).quotient, 0x80000000u);
}

TEST(MovHalves, Examples) {
    EXPECT_EQ(exec_mov_halves(HalfMove::MOVW, 0xDEADBEEF, 0x1234), 0x00001234u);
    EXPECT_EQ(exec_mov_halves(HalfMove::MOVH, 0x00001234, 0x5678), 0x56781234u);
}

TEST(Shifts, AmountsOfThirtyTwoOrMoreGiveZero) {
    EXPECT_EQ(shift_left(0xFFFFFFFF, 32, false).value, 0u);
    EXPECT_EQ(shift_right(0xFFFFFFFF, 32, false).value, 0u);
    EXPECT_EQ(shift_left(0xFFFFFFFF, 40, true).value, 0u);
    EXPECT_EQ(shift_right(0x80000000, 31, false).value, 1u);
    EXPECT_EQ(shift_left(1, 31, false).value, 0x80000000u);
}

TEST(AddWithCarry, WrapsModulo32) {
    const auto r = add_with_carry(0xFFFFFFFF, 1, false);
    EXPECT_EQ(r.value, 0u);
    EXPECT_TRUE(r.flags.z);
    EXPECT_TRUE(r.flags.c);
    const auto v = add_with_carry(0x7FFFFFFF, 1, false);
    EXPECT_TRUE(v.flags.v);
    EXPECT_TRUE(v.flags.n);
}

TEST(It, SingleThenExecutesWhenConditionHolds) {
    const std::array<ItSlot, 1> slots{ItSlot::Then};
    auto it = it_begin(CondCode::EQ, slots);
    ASSERT_TRUE(it);
    EXPECT_TRUE(it->active);
    EXPECT_EQ(it->remaining, 1);
    EXPECT_TRUE(eval_cond(it->current_cond(), Flags{false, true, false, false}));
    it->advance();
    EXPECT_FALSE(it->active);
    EXPECT_EQ(it->remaining, 0);
}

TEST(It, ThenElseWithZClearSkipsFirstRunsSecond) {
    const std::array<ItSlot, 2> slots{ItSlot::Then, ItSlot::Else};
    auto it = it_begin(CondCode::EQ, slots);
    ASSERT_TRUE(it);
    const Flags z0{};
    EXPECT_FALSE(eval_cond(it->current_cond(), z0));
    it->advance();
    EXPECT_TRUE(eval_cond(it->current_cond(), z0));
    it->advance();
    EXPECT_FALSE(it->active);
}

TEST(It, RejectsBadPatterns) {
    const std::array<ItSlot, 1> else_first{ItSlot::Else};
    EXPECT_FALSE(it_begin(CondCode::EQ, else_first));
    const std::array<ItSlot, 5> too_long{};
    EXPECT_FALSE(it_begin(CondCode::EQ, too_long));
    EXPECT_FALSE(it_begin(CondCode::EQ, std::span<const ItSlot>{}));
}

TEST(It, RemainingCountsDownOnePerSlot) {
    const std::array<ItSlot, 4> slots{ItSlot::Then, ItSlot::Else, ItSlot::Then, ItSlot::Else};
    auto it = it_begin(CondCode::CS, slots);
    ASSERT_TRUE(it);
    for (int left = 4; left > 0; --left) {
        EXPECT_EQ(it->remaining, left);
        EXPECT_TRUE(it->active);
        it->advance();
    }
    EXPECT_FALSE(it->active);
}

TEST(TableBranch, FirstAndLastEntries) {
    const std::array<Address, 3> table{0x100, 0x120, 0x140};
    EXPECT_EQ(exec_table_branch(table, 0), 0x100u);
    EXPECT_EQ(exec_table_branch(table, 2), 0x140u);
    EXPECT_FALSE(exec_table_branch(table, 3));
}

TEST(Status, PackUnpackRoundTrip) {
    const std::array<ItSlot, 3> slots{ItSlot::Then, ItSlot::Else, ItSlot::Else};
    auto it = it_begin(CondCode::LT, slots);
    ASSERT_TRUE(it);
    it->advance();
    const Flags f{true, false, true, false};
    Flags f2;
    ItState it2;
    unpack_status(pack_status(f, *it), f2, it2);
    EXPECT_EQ(f2, f);
    EXPECT_EQ(it2, *it);
}

TEST(Encoding, WideFramingAndRoundTrip) {
    Instruction movw;
    movw.op = Opcode::MOVW;
    movw.form = Form::Imm;
    movw.rd = 3;
    movw.imm = 0xBEEF;
    movw.width_bits = 32;
    ASSERT_FALSE(fits_narrow(movw));
    ASSERT_TRUE(fits_wide(movw));
    const auto e = encode(movw);
    ASSERT_EQ(e.count, 2u);
    EXPECT_TRUE(is_wide_prefix(e.halfwords[0]));
    EXPECT_EQ(decode(e.halfwords[0], e.halfwords[1]), movw);

    Instruction add;
    add.op = Opcode::ADD;
    add.form = Form::RegImm;
    add.rd = 1;
    add.rn = 1;
    add.imm = 3;
    ASSERT_TRUE(fits_narrow(add));
    const auto n = encode(add);
    ASSERT_EQ(n.count, 1u);
    EXPECT_FALSE(is_wide_prefix(n.halfwords[0]));
    EXPECT_EQ(decode(n.halfwords[0], 0), add);
}

TEST(Encoding, BitfieldIsWideOnly) {
    Instruction bfi;
    bfi.op = Opcode::BFI;
    bfi.form = Form::Bitfield;
    bfi.rd = 0;
    bfi.rn = 1;
    bfi.lsb = 4;
    bfi.width = 8;
    EXPECT_FALSE(fits_narrow(bfi));
    bfi.width_bits = 16;
    EXPECT_THROW(encode(bfi), EncodeError);
}
