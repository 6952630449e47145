#pragma once

#include <array>
#include <optional>

#include "t2sim/common.hpp"
#include "t2sim/isa/cond.hpp"

namespace t2sim::isa {

enum class ItSlot : std::uint8_t { Then, Else };

// Predication state for an IT block in flight. The pattern is kept whole;
// `remaining` counts the slots not yet consumed.
struct ItState {
    bool active = false;
    CondCode base_cond = CondCode::AL;
    std::uint8_t count = 0;     // pattern length 1..4 while active
    std::uint8_t else_bits = 0; // bit i set: slot i is an else slot
    std::uint8_t remaining = 0;

    unsigned current_index() const { return static_cast<unsigned>(count - remaining); }
    ItSlot current_slot() const {
        return ((else_bits >> current_index()) & 1u) ? ItSlot::Else : ItSlot::Then;
    }
    // Condition the next instruction inside the block is predicated on.
    CondCode current_cond() const;
    // Consume one slot; clears the block after the last one.
    void advance();

    friend bool operator==(const ItState&, const ItState&) = default;
};

struct MachineState {
    std::array<Word, kRegCount> regs{};
    Flags flags{};
    ItState it{};
    bool privileged = true; // thread-mode privilege; handlers always run privileged
    std::optional<Address> restart_pc;

    Word& sp() { return regs[kSP]; }
    Word& lr() { return regs[kLR]; }
    Word& pc() { return regs[kPC]; }
    Word pc() const { return regs[kPC]; }

    friend bool operator==(const MachineState&, const MachineState&) = default;
};

// Program status word as stacked on exception entry:
//   [31:28] N Z C V   [27:24] IT base cond   [23:20] IT else bits
//   [19:17] IT count  [16:14] IT remaining
Word pack_status(const Flags& flags, const ItState& it);
void unpack_status(Word status, Flags& flags, ItState& it);

} // namespace t2sim::isa
