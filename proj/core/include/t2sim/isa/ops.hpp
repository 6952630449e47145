#pragma once

#include <optional>
#include <span>
#include <vector>

#include "t2sim/common.hpp"
#include "t2sim/isa/instruction.hpp"
#include "t2sim/isa/state.hpp"

namespace t2sim::isa {

// Datapath primitives. None of these touch N/Z/C/V.

enum class BitfieldKind : std::uint8_t { BFI, BFC, UBFX };

// Requires 1 <= width and lsb + width <= 32 (enforced by the assembler).
Word exec_bitfield(BitfieldKind kind, Word rd_old, Word rn, unsigned lsb, unsigned width);

Word exec_rbit(Word rn);

struct DivideResult {
    Word quotient = 0;
    bool divide_by_zero = false;
};

// Truncates toward zero. A zero divisor yields 0 and reports the event;
// signed INT_MIN / -1 wraps to INT_MIN.
DivideResult exec_divide(bool is_signed, Word rn, Word rm);

enum class HalfMove : std::uint8_t { MOVW, MOVH };

// MOVW zero-extends; MOVH writes the top half and keeps the bottom half.
Word exec_mov_halves(HalfMove kind, Word rd_old, std::uint16_t imm16);

// Builds the predication state for an IT header. `slots` holds 1..4 entries
// and slots[0] must be Then; anything else is rejected by returning nullopt.
std::optional<ItState> it_begin(CondCode base_cond, std::span<const ItSlot> slots);

// Looks up the dispatch target for `index`. Out-of-range indices return
// nullopt; at run time that is a simulator fault because the assembler-emitted
// guard should have caught it.
std::optional<Address> exec_table_branch(std::span<const Address> table, Word index);

// Logical shifts with architectural edge behaviour: amounts >= 32 give 0.
struct ShiftResult {
    Word value = 0;
    bool carry = false;
};
ShiftResult shift_left(Word value, unsigned amount, bool carry_in);
ShiftResult shift_right(Word value, unsigned amount, bool carry_in);

struct AddResult {
    Word value = 0;
    Flags flags{};
};
// a + b + carry with the full N/Z/C/V result.
AddResult add_with_carry(Word a, Word b, bool carry_in);

} // namespace t2sim::isa
