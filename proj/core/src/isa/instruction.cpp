#include "t2sim/isa/instruction.hpp"

#include <array>
#include <sstream>

namespace t2sim::isa {

namespace {

constexpr std::array<std::string_view, 31> kOpNames = {
    "mov", "movw", "movh", "add", "sub", "and", "orr", "eor", "lsl", "lsr", "cmp",
    "udiv", "sdiv", "bfi", "bfc", "ubfx", "rbit",
    "b", "bl", "it", "tb",
    "ldr", "str", "ldrb", "strb", "ldrh", "strh", "ldm", "stm",
    "nop", "halt",
};

std::string reg(std::uint8_t r) {
    switch (r) {
    case 13: return "sp";
    case 14: return "lr";
    case 15: return "pc";
    case kNoReg: return "?";
    default: return "r" + std::to_string(r);
    }
}

std::string hex(std::uint32_t v) {
    std::ostringstream os;
    os << "#0x" << std::hex << v;
    return os.str();
}

} // namespace

std::string_view to_string(Opcode op) {
    return kOpNames[static_cast<unsigned>(op)];
}

std::string disassemble(const Instruction& i) {
    std::ostringstream os;
    os << to_string(i.op);
    if (i.set_flags && i.op != Opcode::CMP) os << 's';
    if (i.op == Opcode::B && i.cond != CondCode::AL) os << to_string(i.cond);
    if (i.op == Opcode::IT) {
        for (unsigned s = 1; s < i.it_count; ++s) os << (((i.it_else >> s) & 1u) ? 'e' : 't');
    }
    if (i.width_bits == 32 && i.op != Opcode::B && i.op != Opcode::BL) os << ".w";
    os << ' ';
    switch (i.form) {
    case Form::None:
        break;
    case Form::Imm:
        os << reg(i.op == Opcode::CMP ? i.rn : i.rd) << ", " << hex(i.imm);
        break;
    case Form::Reg:
        os << reg(i.op == Opcode::CMP ? i.rn : i.rd) << ", " << reg(i.rm);
        break;
    case Form::RegImm:
        os << reg(i.rd) << ", " << reg(i.rn) << ", " << hex(i.imm);
        break;
    case Form::RegReg:
        os << reg(i.rd) << ", " << reg(i.rn) << ", " << reg(i.rm);
        break;
    case Form::Bitfield:
        os << reg(i.rd) << ", ";
        if (i.op != Opcode::BFC) os << reg(i.rn) << ", ";
        os << '#' << unsigned{i.lsb} << ", #" << unsigned{i.width};
        break;
    case Form::Branch:
        os << (i.offset >= 0 ? ".+" : ".-") << (i.offset >= 0 ? i.offset : -i.offset);
        break;
    case Form::It:
        os << to_string(i.cond);
        break;
    case Form::Table:
        os << reg(i.rn) << ", <" << i.imm << " entries>";
        break;
    case Form::MemImm:
        os << reg(i.rd) << ", [" << reg(i.rn) << ", " << hex(i.imm) << ']';
        break;
    case Form::MemReg:
        os << reg(i.rd) << ", [" << reg(i.rn) << ", " << reg(i.rm) << ']';
        break;
    case Form::Literal:
        os << reg(i.rd) << ", [pc, " << hex(i.imm) << ']';
        break;
    case Form::Multi: {
        os << reg(i.rn) << (i.writeback ? "!" : "") << ", {";
        bool first = true;
        for (unsigned r = 0; r < 16; ++r) {
            if ((i.reglist >> r) & 1u) {
                if (!first) os << ", ";
                os << reg(static_cast<std::uint8_t>(r));
                first = false;
            }
        }
        os << '}';
        break;
    }
    }
    std::string out = os.str();
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

} // namespace t2sim::isa
