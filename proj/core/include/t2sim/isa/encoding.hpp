#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "t2sim/isa/instruction.hpp"

namespace t2sim::isa {

// Private binary form of the instruction IR. It is not Thumb-2 binary, but it
// keeps the same framing: a first halfword whose top five bits are 0b11101,
// 0b11110 or 0b11111 announces a 32-bit instruction, everything else is a
// 16-bit instruction. Images hold these bytes little-endian, so the simulator
// really fetches, caches, patches and decodes instruction bits.

class EncodeError : public std::invalid_argument {
public:
    explicit EncodeError(const std::string& what) : std::invalid_argument(what) {}
};

inline bool is_wide_prefix(std::uint16_t hw1) { return (hw1 >> 11) >= 0x1Du; }

// True when `insn` (with width_bits ignored) has a 16-bit encoding.
bool fits_narrow(const Instruction& insn);
// True when `insn` has a 32-bit encoding.
bool fits_wide(const Instruction& insn);

struct Encoded {
    std::array<std::uint16_t, 2> halfwords{};
    unsigned count = 0; // 1 or 2
};

// Encodes at insn.width_bits; throws EncodeError if the instruction has no
// encoding at that width.
Encoded encode(const Instruction& insn);

// Decodes one instruction. hw2 is only consulted for wide prefixes.
// Returns nullopt for undefined bit patterns.
std::optional<Instruction> decode(std::uint16_t hw1, std::uint16_t hw2);

} // namespace t2sim::isa
