#include "t2sim/isa/ops.hpp"

#include <cstdint>
#include <limits>

namespace t2sim::isa {

namespace {
Word field_mask(unsigned width) {
    return width >= 32 ? 0xFFFFFFFFu : ((1u << width) - 1u);
}
} // namespace

Word exec_bitfield(BitfieldKind kind, Word rd_old, Word rn, unsigned lsb, unsigned width) {
    const Word mask = field_mask(width);
    switch (kind) {
    case BitfieldKind::BFI:
        return (rd_old & ~(mask << lsb)) | ((rn & mask) << lsb);
    case BitfieldKind::BFC:
        return rd_old & ~(mask << lsb);
    case BitfieldKind::UBFX:
        return (rn >> lsb) & mask;
    }
    return rd_old;
}

Word exec_rbit(Word x) {
    x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
    x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
    x = ((x >> 4) & 0x0F0F0F0Fu) | ((x & 0x0F0F0F0Fu) << 4);
    x = ((x >> 8) & 0x00FF00FFu) | ((x & 0x00FF00FFu) << 8);
    return (x >> 16) | (x << 16);
}

DivideResult exec_divide(bool is_signed, Word rn, Word rm) {
    if (rm == 0) return {0, true};
    if (!is_signed) return {rn / rm, false};
    const auto n = static_cast<std::int32_t>(rn);
    const auto m = static_cast<std::int32_t>(rm);
    if (n == std::numeric_limits<std::int32_t>::min() && m == -1) return {rn, false};
    return {static_cast<Word>(n / m), false};
}

Word exec_mov_halves(HalfMove kind, Word rd_old, std::uint16_t imm16) {
    if (kind == HalfMove::MOVW) return imm16;
    return (static_cast<Word>(imm16) << 16) | (rd_old & 0xFFFFu);
}

std::optional<ItState> it_begin(CondCode base_cond, std::span<const ItSlot> slots) {
    if (slots.empty() || slots.size() > 4) return std::nullopt;
    if (slots[0] != ItSlot::Then) return std::nullopt;
    ItState it;
    it.active = true;
    it.base_cond = base_cond;
    it.count = static_cast<std::uint8_t>(slots.size());
    it.remaining = it.count;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i] == ItSlot::Else) {
            if (base_cond == CondCode::AL) return std::nullopt;
            it.else_bits = static_cast<std::uint8_t>(it.else_bits | (1u << i));
        }
    }
    return it;
}

std::optional<Address> exec_table_branch(std::span<const Address> table, Word index) {
    if (index >= table.size()) return std::nullopt;
    return table[index];
}

ShiftResult shift_left(Word value, unsigned amount, bool carry_in) {
    if (amount == 0) return {value, carry_in};
    if (amount < 32) return {value << amount, ((value >> (32 - amount)) & 1u) != 0};
    if (amount == 32) return {0, (value & 1u) != 0};
    return {0, false};
}

ShiftResult shift_right(Word value, unsigned amount, bool carry_in) {
    if (amount == 0) return {value, carry_in};
    if (amount < 32) return {value >> amount, ((value >> (amount - 1)) & 1u) != 0};
    if (amount == 32) return {0, (value >> 31) != 0};
    return {0, false};
}

AddResult add_with_carry(Word a, Word b, bool carry_in) {
    const std::uint64_t usum = std::uint64_t{a} + std::uint64_t{b} + (carry_in ? 1u : 0u);
    const std::int64_t ssum = std::int64_t{static_cast<std::int32_t>(a)} +
                              std::int64_t{static_cast<std::int32_t>(b)} + (carry_in ? 1 : 0);
    AddResult r;
    r.value = static_cast<Word>(usum);
    r.flags.n = (r.value >> 31) != 0;
    r.flags.z = r.value == 0;
    r.flags.c = (usum >> 32) != 0;
    r.flags.v = ssum != static_cast<std::int32_t>(r.value);
    return r;
}

} // namespace t2sim::isa
