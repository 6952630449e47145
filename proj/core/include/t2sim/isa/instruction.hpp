#pragma once

#include <cstdint>
#include <string>

#include "t2sim/isa/cond.hpp"

namespace t2sim::isa {

enum class Opcode : std::uint8_t {
    MOV, MOVW, MOVH, ADD, SUB, AND, ORR, EOR, LSL, LSR, CMP,
    UDIV, SDIV, BFI, BFC, UBFX, RBIT,
    B, BL, IT, TB,
    LDR, STR, LDRB, STRB, LDRH, STRH, LDM, STM,
    NOP, HALT,
};

std::string_view to_string(Opcode op);

// Operand shape. Which shapes are legal for which opcode is enforced by the
// assembler; the encoder rejects anything else.
enum class Form : std::uint8_t {
    None,     // NOP, HALT
    Imm,      // MOV/MOVW/MOVH rd,#imm ; CMP rn,#imm
    Reg,      // MOV rd,rm ; CMP rn,rm ; RBIT rd,rm
    RegImm,   // ADD/SUB/AND/ORR/EOR rd,rn,#imm ; LSL/LSR rd,rn,#shift
    RegReg,   // ALU rd,rn,rm ; UDIV/SDIV
    Bitfield, // BFI rd,rn,#lsb,#w ; BFC rd,#lsb,#w ; UBFX rd,rn,#lsb,#w
    Branch,   // B/BL with pc-relative offset
    It,       // IT block header
    Table,    // TB rn, followed in the image by `imm` halfword entries
    MemImm,   // LDR* rt,[rn,#imm]
    MemReg,   // LDR* rt,[rn,rm]
    Literal,  // LDR rt,[pc,#imm]
    Multi,    // LDM/STM rn{!},{list}
};

inline constexpr std::uint8_t kNoReg = 0xFF;

// IR for one instruction. Register fields hold 0..15 or kNoReg.
//   rd   destination (rt for loads/stores)
//   rn   first source / base
//   rm   second source / offset register
//   imm  immediate, shift amount, memory offset, or TB table length
//   offset  branch displacement in bytes, relative to the instruction address
//   it_count / it_else  IT pattern: slots 0..it_count-1, bit i of it_else set
//                       means slot i is an "else" slot (slot 0 is always "then")
struct Instruction {
    Opcode op = Opcode::NOP;
    Form form = Form::None;
    CondCode cond = CondCode::AL;
    bool set_flags = false;
    bool writeback = false;
    std::uint8_t rd = kNoReg;
    std::uint8_t rn = kNoReg;
    std::uint8_t rm = kNoReg;
    std::uint8_t lsb = 0;
    std::uint8_t width = 0;
    std::uint8_t it_count = 0;
    std::uint8_t it_else = 0;
    std::uint16_t reglist = 0;
    std::uint32_t imm = 0;
    std::int32_t offset = 0;
    std::uint8_t width_bits = 16;

    unsigned size_bytes() const { return width_bits / 8u; }
    bool is_branch_op() const { return op == Opcode::B || op == Opcode::BL || op == Opcode::TB; }

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

std::string disassemble(const Instruction& insn);

inline bool is_low(std::uint8_t reg) { return reg < 8; }

} // namespace t2sim::isa
