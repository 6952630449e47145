#include "t2sim/isa/encoding.hpp"

namespace t2sim::isa {

namespace {

// 16-bit major opcodes (bits [15:11]).
enum Narrow : unsigned {
    kMovImm = 0, kMovsImm = 1, kMovCmpReg = 2,
    kAddImm8 = 3, kAddsImm8 = 4, kSubImm8 = 5, kSubsImm8 = 6,
    kAddSubReg = 7, kAluReg = 8,
    kLslImm = 9, kLslsImm = 10, kLsrImm = 11, kLsrsImm = 12,
    kCmpImm = 13,
    kLdrImm = 14, kStrImm = 15, kLdrbImm = 16, kStrbImm = 17, kLdrhImm = 18, kStrhImm = 19,
    kLoadReg = 20, kStoreReg = 21, kLdrLit = 22,
    kBcondLo = 23, kBcondHi = 24, kB = 25,
    kLdm = 26, kStm = 27, kMisc = 28,
};

// 32-bit sub-opcodes under prefix 0b11110 (bits [10:5] of the first halfword).
enum Wide : unsigned {
    kWMovw = 0, kWMovh = 1, kWMovImm = 2, kWAddImm = 3, kWSubImm = 4, kWAndImm = 5,
    kWOrrImm = 6, kWEorImm = 7, kWCmpImm = 8, kWAluReg = 9, kWLslImm = 10, kWLsrImm = 11,
    kWBfi = 12, kWBfc = 13, kWUbfx = 14, kWTb = 15,
    kWLdrImm = 16, kWStrImm = 17, kWLdrbImm = 18, kWStrbImm = 19, kWLdrhImm = 20, kWStrhImm = 21,
    kWMemReg = 22, kWLdrLit = 23, kWLdm = 24, kWStm = 25,
};

constexpr unsigned kPrefixData = 0x1E;
constexpr unsigned kPrefixBranch = 0x1F;

// opsel values for kAluReg (narrow) and kWAluReg (wide).
enum NarrowAlu : unsigned { kNAnd = 0, kNOrr, kNEor, kNLsl, kNLsr };
enum WideAlu : unsigned {
    kAAdd = 0, kASub, kAAnd, kAOrr, kAEor, kALsl, kALsr, kACmp, kAMov, kAUdiv, kASdiv, kARbit,
};

bool low(std::uint8_t r) { return r < 8; }
bool reg_ok(std::uint8_t r) { return r < 16; }

std::optional<unsigned> narrow_alu_sel(Opcode op) {
    switch (op) {
    case Opcode::AND: return kNAnd;
    case Opcode::ORR: return kNOrr;
    case Opcode::EOR: return kNEor;
    case Opcode::LSL: return kNLsl;
    case Opcode::LSR: return kNLsr;
    default: return std::nullopt;
    }
}

std::optional<unsigned> wide_alu_sel(Opcode op) {
    switch (op) {
    case Opcode::ADD: return kAAdd;
    case Opcode::SUB: return kASub;
    case Opcode::AND: return kAAnd;
    case Opcode::ORR: return kAOrr;
    case Opcode::EOR: return kAEor;
    case Opcode::LSL: return kALsl;
    case Opcode::LSR: return kALsr;
    case Opcode::CMP: return kACmp;
    case Opcode::MOV: return kAMov;
    case Opcode::UDIV: return kAUdiv;
    case Opcode::SDIV: return kASdiv;
    case Opcode::RBIT: return kARbit;
    default: return std::nullopt;
    }
}

bool is_store(Opcode op) {
    return op == Opcode::STR || op == Opcode::STRB || op == Opcode::STRH;
}

// 0 word, 1 byte, 2 halfword
unsigned size_sel(Opcode op) {
    switch (op) {
    case Opcode::LDRB: case Opcode::STRB: return 1;
    case Opcode::LDRH: case Opcode::STRH: return 2;
    default: return 0;
    }
}

Opcode mem_op(bool store, unsigned sel) {
    static constexpr Opcode kLoads[] = {Opcode::LDR, Opcode::LDRB, Opcode::LDRH};
    static constexpr Opcode kStores[] = {Opcode::STR, Opcode::STRB, Opcode::STRH};
    return store ? kStores[sel] : kLoads[sel];
}

bool narrow_mem_imm_ok(Opcode op, std::uint32_t imm) {
    switch (size_sel(op)) {
    case 0: return imm % 4 == 0 && imm <= 124;
    case 1: return imm <= 31;
    default: return imm % 2 == 0 && imm <= 62;
    }
}

unsigned narrow_mem_imm_field(Opcode op, std::uint32_t imm) {
    switch (size_sel(op)) {
    case 0: return imm / 4;
    case 1: return imm;
    default: return imm / 2;
    }
}

bool branch_in(std::int32_t offset, std::int32_t lo, std::int32_t hi) {
    return offset % 2 == 0 && offset >= lo && offset <= hi;
}

std::uint32_t sign_extend(std::uint32_t value, unsigned bits) {
    const std::uint32_t m = 1u << (bits - 1);
    value &= (bits == 32) ? 0xFFFFFFFFu : ((1u << bits) - 1u);
    return (value ^ m) - m;
}

std::uint16_t h(unsigned v) { return static_cast<std::uint16_t>(v & 0xFFFFu); }

Encoded one(unsigned op5, unsigned payload) {
    return {{h((op5 << 11) | (payload & 0x7FFu)), 0}, 1};
}

Encoded wide_data(unsigned op6, std::uint32_t payload) {
    const unsigned hw1 = (kPrefixData << 11) | ((op6 & 0x3Fu) << 5) | ((payload >> 16) & 0x1Fu);
    return {{h(hw1), h(payload)}, 2};
}

Encoded wide_branch(std::uint32_t payload) {
    const unsigned hw1 = (kPrefixBranch << 11) | ((payload >> 16) & 0x7FFu);
    return {{h(hw1), h(payload)}, 2};
}

[[noreturn]] void fail(const Instruction& insn, const char* why) {
    throw EncodeError(std::string("cannot encode '") + disassemble(insn) + "' at " +
                      std::to_string(insn.width_bits) + " bits: " + why);
}

Encoded encode_narrow(const Instruction& i) {
    if (!fits_narrow(i)) fail(i, "operands out of range for the narrow form");
    const auto rd = static_cast<unsigned>(i.rd);
    const auto rn = static_cast<unsigned>(i.rn);
    const auto rm = static_cast<unsigned>(i.rm);
    switch (i.op) {
    case Opcode::MOV:
        if (i.form == Form::Imm) return one(i.set_flags ? kMovsImm : kMovImm, (rd << 8) | i.imm);
        return one(kMovCmpReg, ((i.set_flags ? 1u : 0u) << 9) | (rd << 4) | rm);
    case Opcode::CMP:
        if (i.form == Form::Imm) return one(kCmpImm, (rn << 8) | i.imm);
        return one(kMovCmpReg, (2u << 9) | (rn << 4) | rm);
    case Opcode::ADD:
    case Opcode::SUB:
        if (i.form == Form::RegImm) {
            unsigned op5 = i.op == Opcode::ADD ? (i.set_flags ? kAddsImm8 : kAddImm8)
                                               : (i.set_flags ? kSubsImm8 : kSubImm8);
            return one(op5, (rd << 8) | i.imm);
        }
        return one(kAddSubReg, ((i.op == Opcode::SUB ? 1u : 0u) << 10) | ((i.set_flags ? 1u : 0u) << 9) |
                                   (rm << 6) | (rn << 3) | rd);
    case Opcode::LSL:
    case Opcode::LSR:
        if (i.form == Form::RegImm) {
            unsigned op5 = i.op == Opcode::LSL ? (i.set_flags ? kLslsImm : kLslImm)
                                               : (i.set_flags ? kLsrsImm : kLsrImm);
            return one(op5, (i.imm << 6) | (rn << 3) | rd);
        }
        [[fallthrough]];
    case Opcode::AND:
    case Opcode::ORR:
    case Opcode::EOR:
        return one(kAluReg, (*narrow_alu_sel(i.op) << 7) | ((i.set_flags ? 1u : 0u) << 6) | (rm << 3) | rd);
    case Opcode::LDR:
    case Opcode::STR:
    case Opcode::LDRB:
    case Opcode::STRB:
    case Opcode::LDRH:
    case Opcode::STRH: {
        if (i.form == Form::Literal) return one(kLdrLit, (rd << 8) | (i.imm / 4));
        if (i.form == Form::MemReg) {
            return one(is_store(i.op) ? kStoreReg : kLoadReg, (size_sel(i.op) << 9) | (rm << 6) | (rn << 3) | rd);
        }
        static constexpr unsigned kOps[] = {kLdrImm, kStrImm, kLdrbImm, kStrbImm, kLdrhImm, kStrhImm};
        const unsigned idx = size_sel(i.op) * 2 + (is_store(i.op) ? 1 : 0);
        return one(kOps[idx], (narrow_mem_imm_field(i.op, i.imm) << 6) | (rn << 3) | rd);
    }
    case Opcode::B: {
        const auto half = static_cast<std::uint32_t>(i.offset / 2);
        if (i.cond == CondCode::AL) return one(kB, half & 0x7FFu);
        const auto c = static_cast<unsigned>(i.cond);
        return one(c < 8 ? kBcondLo : kBcondHi, ((c & 7u) << 8) | (half & 0xFFu));
    }
    case Opcode::LDM:
        return one(kLdm, (rn << 8) | (i.reglist & 0xFFu));
    case Opcode::STM:
        return one(kStm, (rn << 8) | (i.reglist & 0xFFu));
    case Opcode::IT: {
        const unsigned else_rest = (static_cast<unsigned>(i.it_else) >> 1) & 0x7u;
        return one(kMisc, (0u << 9) | (static_cast<unsigned>(i.cond) << 5) |
                              ((static_cast<unsigned>(i.it_count) - 1u) << 3) | else_rest);
    }
    case Opcode::NOP:
        return one(kMisc, 1u << 9);
    case Opcode::HALT:
        return one(kMisc, 2u << 9);
    default:
        fail(i, "no narrow form");
    }
}

Encoded encode_wide(const Instruction& i) {
    if (!fits_wide(i)) fail(i, "operands out of range for the wide form");
    const std::uint32_t rd = i.rd;
    const std::uint32_t rn = i.rn;
    const std::uint32_t rm = i.rm;
    const std::uint32_t s = i.set_flags ? 1u : 0u;
    switch (i.op) {
    case Opcode::MOVW: return wide_data(kWMovw, (rd << 16) | i.imm);
    case Opcode::MOVH: return wide_data(kWMovh, (rd << 16) | i.imm);
    case Opcode::MOV:
        if (i.form == Form::Imm) return wide_data(kWMovImm, (s << 20) | (rd << 16) | i.imm);
        break;
    case Opcode::CMP:
        if (i.form == Form::Imm) return wide_data(kWCmpImm, (rn << 16) | i.imm);
        break;
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::AND:
    case Opcode::ORR:
    case Opcode::EOR:
        if (i.form == Form::RegImm) {
            static constexpr unsigned kOps[] = {kWAddImm, kWSubImm, kWAndImm, kWOrrImm, kWEorImm};
            const unsigned idx = i.op == Opcode::ADD ? 0 : i.op == Opcode::SUB ? 1 : i.op == Opcode::AND ? 2
                               : i.op == Opcode::ORR ? 3 : 4;
            return wide_data(kOps[idx], (s << 20) | (rd << 16) | (rn << 12) | i.imm);
        }
        break;
    case Opcode::LSL:
    case Opcode::LSR:
        if (i.form == Form::RegImm) {
            return wide_data(i.op == Opcode::LSL ? kWLslImm : kWLsrImm, (s << 20) | (rd << 16) | (rn << 12) | i.imm);
        }
        break;
    case Opcode::BFI:
        return wide_data(kWBfi, (rd << 16) | (rn << 12) | (std::uint32_t{i.lsb} << 5) | (i.width - 1u));
    case Opcode::BFC:
        return wide_data(kWBfc, (rd << 16) | (std::uint32_t{i.lsb} << 5) | (i.width - 1u));
    case Opcode::UBFX:
        return wide_data(kWUbfx, (rd << 16) | (rn << 12) | (std::uint32_t{i.lsb} << 5) | (i.width - 1u));
    case Opcode::TB:
        return wide_data(kWTb, (rn << 16) | i.imm);
    case Opcode::LDR:
    case Opcode::STR:
    case Opcode::LDRB:
    case Opcode::STRB:
    case Opcode::LDRH:
    case Opcode::STRH:
        if (i.form == Form::Literal) return wide_data(kWLdrLit, (rd << 16) | i.imm);
        if (i.form == Form::MemReg) {
            return wide_data(kWMemReg, ((is_store(i.op) ? 1u : 0u) << 20) | (std::uint32_t{size_sel(i.op)} << 16) |
                                           (rd << 8) | (rn << 4) | rm);
        }
        {
            static constexpr unsigned kOps[] = {kWLdrImm, kWStrImm, kWLdrbImm, kWStrbImm, kWLdrhImm, kWStrhImm};
            const unsigned idx = size_sel(i.op) * 2 + (is_store(i.op) ? 1 : 0);
            return wide_data(kOps[idx], (rd << 16) | (rn << 12) | i.imm);
        }
    case Opcode::LDM:
    case Opcode::STM:
        return wide_data(i.op == Opcode::LDM ? kWLdm : kWStm,
                         ((i.writeback ? 1u : 0u) << 20) | (rn << 16) | i.reglist);
    case Opcode::B:
    case Opcode::BL: {
        const std::uint32_t link = i.op == Opcode::BL ? 1u : 0u;
        const auto half = static_cast<std::uint32_t>(i.offset / 2) & 0x3FFFFFu;
        return wide_branch((link << 26) | (static_cast<std::uint32_t>(i.cond) << 22) | half);
    }
    default:
        break;
    }
    if (i.form == Form::Reg || i.form == Form::RegReg) {
        if (auto sel = wide_alu_sel(i.op)) {
            const std::uint32_t d = i.rd == kNoReg ? 0u : rd;
            const std::uint32_t n = i.rn == kNoReg ? 0u : rn;
            return wide_data(kWAluReg, (s << 20) | (*sel << 16) | (d << 8) | (n << 4) | rm);
        }
    }
    fail(i, "no wide form");
}

Instruction make(Opcode op, Form form, std::uint8_t width_bits) {
    Instruction i;
    i.op = op;
    i.form = form;
    i.width_bits = width_bits;
    return i;
}

std::uint8_t r8(unsigned v) { return static_cast<std::uint8_t>(v & 0xFu); }

std::optional<Instruction> decode_narrow(std::uint16_t hw) {
    const unsigned op5 = hw >> 11;
    const unsigned p = hw & 0x7FFu;
    switch (op5) {
    case kMovImm:
    case kMovsImm: {
        auto i = make(Opcode::MOV, Form::Imm, 16);
        i.set_flags = op5 == kMovsImm;
        i.rd = r8((p >> 8) & 7u);
        i.imm = p & 0xFFu;
        return i;
    }
    case kMovCmpReg: {
        const unsigned kind = (p >> 9) & 3u;
        if (kind == 3 || ((p >> 8) & 1u)) return std::nullopt;
        if (kind == 2) {
            auto i = make(Opcode::CMP, Form::Reg, 16);
            i.set_flags = true;
            i.rn = r8(p >> 4);
            i.rm = r8(p);
            return i;
        }
        auto i = make(Opcode::MOV, Form::Reg, 16);
        i.set_flags = kind == 1;
        i.rd = r8(p >> 4);
        i.rm = r8(p);
        return i;
    }
    case kAddImm8: case kAddsImm8: case kSubImm8: case kSubsImm8: {
        auto i = make(op5 <= kAddsImm8 ? Opcode::ADD : Opcode::SUB, Form::RegImm, 16);
        i.set_flags = op5 == kAddsImm8 || op5 == kSubsImm8;
        i.rd = i.rn = r8((p >> 8) & 7u);
        i.imm = p & 0xFFu;
        return i;
    }
    case kAddSubReg: {
        auto i = make(((p >> 10) & 1u) ? Opcode::SUB : Opcode::ADD, Form::RegReg, 16);
        i.set_flags = (p >> 9) & 1u;
        i.rm = r8((p >> 6) & 7u);
        i.rn = r8((p >> 3) & 7u);
        i.rd = r8(p & 7u);
        return i;
    }
    case kAluReg: {
        static constexpr Opcode kOps[] = {Opcode::AND, Opcode::ORR, Opcode::EOR, Opcode::LSL, Opcode::LSR};
        const unsigned sel = (p >> 7) & 0xFu;
        if (sel > kNLsr) return std::nullopt;
        auto i = make(kOps[sel], Form::RegReg, 16);
        i.set_flags = (p >> 6) & 1u;
        i.rm = r8((p >> 3) & 7u);
        i.rd = i.rn = r8(p & 7u);
        return i;
    }
    case kLslImm: case kLslsImm: case kLsrImm: case kLsrsImm: {
        auto i = make(op5 <= kLslsImm ? Opcode::LSL : Opcode::LSR, Form::RegImm, 16);
        i.set_flags = op5 == kLslsImm || op5 == kLsrsImm;
        i.imm = (p >> 6) & 0x1Fu;
        i.rn = r8((p >> 3) & 7u);
        i.rd = r8(p & 7u);
        return i;
    }
    case kCmpImm: {
        auto i = make(Opcode::CMP, Form::Imm, 16);
        i.set_flags = true;
        i.rn = r8((p >> 8) & 7u);
        i.imm = p & 0xFFu;
        return i;
    }
    case kLdrImm: case kStrImm: case kLdrbImm: case kStrbImm: case kLdrhImm: case kStrhImm: {
        const unsigned idx = op5 - kLdrImm;
        auto i = make(mem_op(idx & 1u, idx / 2), Form::MemImm, 16);
        const unsigned field = (p >> 6) & 0x1Fu;
        i.imm = idx / 2 == 0 ? field * 4 : idx / 2 == 1 ? field : field * 2;
        i.rn = r8((p >> 3) & 7u);
        i.rd = r8(p & 7u);
        return i;
    }
    case kLoadReg:
    case kStoreReg: {
        const unsigned sel = (p >> 9) & 3u;
        if (sel == 3) return std::nullopt;
        auto i = make(mem_op(op5 == kStoreReg, sel), Form::MemReg, 16);
        i.rm = r8((p >> 6) & 7u);
        i.rn = r8((p >> 3) & 7u);
        i.rd = r8(p & 7u);
        return i;
    }
    case kLdrLit: {
        auto i = make(Opcode::LDR, Form::Literal, 16);
        i.rd = r8((p >> 8) & 7u);
        i.imm = (p & 0xFFu) * 4;
        return i;
    }
    case kBcondLo:
    case kBcondHi: {
        const unsigned c = ((p >> 8) & 7u) + (op5 == kBcondHi ? 8u : 0u);
        if (c >= static_cast<unsigned>(CondCode::AL)) return std::nullopt;
        auto i = make(Opcode::B, Form::Branch, 16);
        i.cond = static_cast<CondCode>(c);
        i.offset = static_cast<std::int32_t>(sign_extend(p & 0xFFu, 8)) * 2;
        return i;
    }
    case kB: {
        auto i = make(Opcode::B, Form::Branch, 16);
        i.offset = static_cast<std::int32_t>(sign_extend(p, 11)) * 2;
        return i;
    }
    case kLdm:
    case kStm: {
        auto i = make(op5 == kLdm ? Opcode::LDM : Opcode::STM, Form::Multi, 16);
        i.rn = r8((p >> 8) & 7u);
        i.reglist = static_cast<std::uint16_t>(p & 0xFFu);
        if (i.reglist == 0) return std::nullopt;
        i.writeback = op5 == kStm ? true : ((i.reglist >> i.rn) & 1u) == 0;
        return i;
    }
    case kMisc: {
        const unsigned sub = (p >> 9) & 3u;
        if (sub == 1 && (p & 0x1FFu) == 0) return make(Opcode::NOP, Form::None, 16);
        if (sub == 2 && (p & 0x1FFu) == 0) return make(Opcode::HALT, Form::None, 16);
        if (sub != 0) return std::nullopt;
        auto i = make(Opcode::IT, Form::It, 16);
        const unsigned c = (p >> 5) & 0xFu;
        if (c > static_cast<unsigned>(CondCode::AL)) return std::nullopt;
        i.cond = static_cast<CondCode>(c);
        i.it_count = static_cast<std::uint8_t>(((p >> 3) & 3u) + 1u);
        i.it_else = static_cast<std::uint8_t>((p & 7u) << 1);
        if ((i.it_else >> i.it_count) != 0) return std::nullopt;
        if (i.cond == CondCode::AL && i.it_else != 0) return std::nullopt;
        return i;
    }
    default:
        return std::nullopt;
    }
}

std::optional<Instruction> decode_wide(std::uint16_t hw1, std::uint16_t hw2) {
    const unsigned prefix = hw1 >> 11;
    if (prefix == kPrefixBranch) {
        const std::uint32_t p = (static_cast<std::uint32_t>(hw1 & 0x7FFu) << 16) | hw2;
        const bool link = (p >> 26) & 1u;
        const unsigned c = (p >> 22) & 0xFu;
        if (c > static_cast<unsigned>(CondCode::AL)) return std::nullopt;
        if (link && c != static_cast<unsigned>(CondCode::AL)) return std::nullopt;
        auto i = make(link ? Opcode::BL : Opcode::B, Form::Branch, 32);
        i.cond = static_cast<CondCode>(c);
        i.offset = static_cast<std::int32_t>(sign_extend(p & 0x3FFFFFu, 22)) * 2;
        return i;
    }
    if (prefix != kPrefixData) return std::nullopt;
    const unsigned op6 = (hw1 >> 5) & 0x3Fu;
    const std::uint32_t p = (static_cast<std::uint32_t>(hw1 & 0x1Fu) << 16) | hw2;
    const bool s = (p >> 20) & 1u;
    switch (op6) {
    case kWMovw:
    case kWMovh: {
        if ((p >> 20) & 1u) return std::nullopt;
        auto i = make(op6 == kWMovw ? Opcode::MOVW : Opcode::MOVH, Form::Imm, 32);
        i.rd = r8(p >> 16);
        i.imm = p & 0xFFFFu;
        return i;
    }
    case kWMovImm: {
        if ((p >> 12) & 0xFu) return std::nullopt;
        auto i = make(Opcode::MOV, Form::Imm, 32);
        i.set_flags = s;
        i.rd = r8(p >> 16);
        i.imm = p & 0xFFFu;
        return i;
    }
    case kWAddImm: case kWSubImm: case kWAndImm: case kWOrrImm: case kWEorImm: {
        static constexpr Opcode kOps[] = {Opcode::ADD, Opcode::SUB, Opcode::AND, Opcode::ORR, Opcode::EOR};
        auto i = make(kOps[op6 - kWAddImm], Form::RegImm, 32);
        i.set_flags = s;
        i.rd = r8(p >> 16);
        i.rn = r8(p >> 12);
        i.imm = p & 0xFFFu;
        return i;
    }
    case kWCmpImm: {
        if (s || ((p >> 12) & 0xFu)) return std::nullopt;
        auto i = make(Opcode::CMP, Form::Imm, 32);
        i.set_flags = true;
        i.rn = r8(p >> 16);
        i.imm = p & 0xFFFu;
        return i;
    }
    case kWAluReg: {
        const unsigned sel = (p >> 16) & 0xFu;
        if ((p >> 12) & 0xFu) return std::nullopt;
        static constexpr Opcode kOps[] = {Opcode::ADD, Opcode::SUB, Opcode::AND, Opcode::ORR, Opcode::EOR,
                                          Opcode::LSL, Opcode::LSR, Opcode::CMP, Opcode::MOV, Opcode::UDIV,
                                          Opcode::SDIV, Opcode::RBIT};
        if (sel > kARbit) return std::nullopt;
        const Opcode op = kOps[sel];
        const bool two_operand = op == Opcode::CMP || op == Opcode::MOV || op == Opcode::RBIT;
        auto i = make(op, two_operand ? Form::Reg : Form::RegReg, 32);
        i.set_flags = s;
        i.rm = r8(p);
        if (op == Opcode::CMP) {
            if (!s || ((p >> 8) & 0xFu)) return std::nullopt;
            i.rn = r8(p >> 4);
        } else if (two_operand) {
            if ((p >> 4) & 0xFu) return std::nullopt;
            if (op == Opcode::RBIT && s) return std::nullopt;
            i.rd = r8(p >> 8);
        } else {
            if ((op == Opcode::UDIV || op == Opcode::SDIV) && s) return std::nullopt;
            i.rd = r8(p >> 8);
            i.rn = r8(p >> 4);
        }
        return i;
    }
    case kWLslImm:
    case kWLsrImm: {
        if ((p >> 5) & 0x7Fu) return std::nullopt;
        auto i = make(op6 == kWLslImm ? Opcode::LSL : Opcode::LSR, Form::RegImm, 32);
        i.set_flags = s;
        i.rd = r8(p >> 16);
        i.rn = r8(p >> 12);
        i.imm = p & 0x1Fu;
        return i;
    }
    case kWBfi: case kWBfc: case kWUbfx: {
        if (s || ((p >> 10) & 3u)) return std::nullopt;
        static constexpr Opcode kOps[] = {Opcode::BFI, Opcode::BFC, Opcode::UBFX};
        auto i = make(kOps[op6 - kWBfi], Form::Bitfield, 32);
        i.rd = r8(p >> 16);
        if (op6 != kWBfc) i.rn = r8(p >> 12);
        else if ((p >> 12) & 0xFu) return std::nullopt;
        i.lsb = static_cast<std::uint8_t>((p >> 5) & 0x1Fu);
        i.width = static_cast<std::uint8_t>((p & 0x1Fu) + 1u);
        if (i.lsb + i.width > 32) return std::nullopt;
        return i;
    }
    case kWTb: {
        if (s) return std::nullopt;
        auto i = make(Opcode::TB, Form::Table, 32);
        i.rn = r8(p >> 16);
        i.imm = p & 0xFFFFu;
        if (i.imm == 0) return std::nullopt;
        return i;
    }
    case kWLdrImm: case kWStrImm: case kWLdrbImm: case kWStrbImm: case kWLdrhImm: case kWStrhImm: {
        if (s) return std::nullopt;
        const unsigned idx = op6 - kWLdrImm;
        auto i = make(mem_op(idx & 1u, idx / 2), Form::MemImm, 32);
        i.rd = r8(p >> 16);
        i.rn = r8(p >> 12);
        i.imm = p & 0xFFFu;
        return i;
    }
    case kWMemReg: {
        const unsigned sel = (p >> 16) & 0xFu;
        if (sel > 2 || ((p >> 12) & 0xFu)) return std::nullopt;
        auto i = make(mem_op(s, sel), Form::MemReg, 32);
        i.rd = r8(p >> 8);
        i.rn = r8(p >> 4);
        i.rm = r8(p);
        return i;
    }
    case kWLdrLit: {
        if (s || ((p >> 12) & 0xFu)) return std::nullopt;
        auto i = make(Opcode::LDR, Form::Literal, 32);
        i.rd = r8(p >> 16);
        i.imm = p & 0xFFFu;
        return i;
    }
    case kWLdm:
    case kWStm: {
        auto i = make(op6 == kWLdm ? Opcode::LDM : Opcode::STM, Form::Multi, 32);
        i.writeback = s;
        i.rn = r8(p >> 16);
        i.reglist = static_cast<std::uint16_t>(p & 0xFFFFu);
        if (i.reglist == 0) return std::nullopt;
        return i;
    }
    default:
        return std::nullopt;
    }
}

} // namespace

bool fits_narrow(const Instruction& i) {
    switch (i.op) {
    case Opcode::MOV:
        if (i.form == Form::Imm) return low(i.rd) && i.imm <= 0xFF;
        return i.form == Form::Reg && reg_ok(i.rd) && reg_ok(i.rm);
    case Opcode::CMP:
        if (i.form == Form::Imm) return low(i.rn) && i.imm <= 0xFF;
        return i.form == Form::Reg && reg_ok(i.rn) && reg_ok(i.rm);
    case Opcode::ADD:
    case Opcode::SUB:
        if (i.form == Form::RegImm) return low(i.rd) && i.rd == i.rn && i.imm <= 0xFF;
        return i.form == Form::RegReg && low(i.rd) && low(i.rn) && low(i.rm);
    case Opcode::AND:
    case Opcode::ORR:
    case Opcode::EOR:
        return i.form == Form::RegReg && low(i.rd) && i.rd == i.rn && low(i.rm);
    case Opcode::LSL:
    case Opcode::LSR:
        if (i.form == Form::RegImm) return low(i.rd) && low(i.rn) && i.imm <= 31;
        return i.form == Form::RegReg && low(i.rd) && i.rd == i.rn && low(i.rm);
    case Opcode::LDR:
    case Opcode::STR:
    case Opcode::LDRB:
    case Opcode::STRB:
    case Opcode::LDRH:
    case Opcode::STRH:
        if (i.form == Form::Literal) return i.op == Opcode::LDR && low(i.rd) && i.imm % 4 == 0 && i.imm <= 1020;
        if (i.form == Form::MemReg) return low(i.rd) && low(i.rn) && low(i.rm);
        return i.form == Form::MemImm && low(i.rd) && low(i.rn) && narrow_mem_imm_ok(i.op, i.imm);
    case Opcode::B:
        if (i.form != Form::Branch) return false;
        if (i.cond == CondCode::AL) return branch_in(i.offset, -2048, 2046);
        return branch_in(i.offset, -256, 254);
    case Opcode::LDM:
        return i.form == Form::Multi && low(i.rn) && i.reglist != 0 && (i.reglist & 0xFF00u) == 0 &&
               i.writeback == (((i.reglist >> i.rn) & 1u) == 0);
    case Opcode::STM:
        return i.form == Form::Multi && low(i.rn) && i.reglist != 0 && (i.reglist & 0xFF00u) == 0 && i.writeback;
    case Opcode::IT:
        return i.form == Form::It && i.it_count >= 1 && i.it_count <= 4 && (i.it_else & 1u) == 0 &&
               (i.it_else >> i.it_count) == 0 && !(i.cond == CondCode::AL && i.it_else != 0);
    case Opcode::NOP:
    case Opcode::HALT:
        return i.form == Form::None;
    default:
        return false;
    }
}

bool fits_wide(const Instruction& i) {
    switch (i.op) {
    case Opcode::MOVW:
    case Opcode::MOVH:
        return i.form == Form::Imm && reg_ok(i.rd) && i.imm <= 0xFFFF && !i.set_flags;
    case Opcode::MOV:
        if (i.form == Form::Imm) return reg_ok(i.rd) && i.imm <= 0xFFF;
        return i.form == Form::Reg && reg_ok(i.rd) && reg_ok(i.rm);
    case Opcode::CMP:
        if (i.form == Form::Imm) return reg_ok(i.rn) && i.imm <= 0xFFF;
        return i.form == Form::Reg && reg_ok(i.rn) && reg_ok(i.rm);
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::AND:
    case Opcode::ORR:
    case Opcode::EOR:
        if (i.form == Form::RegImm) return reg_ok(i.rd) && reg_ok(i.rn) && i.imm <= 0xFFF;
        return i.form == Form::RegReg && reg_ok(i.rd) && reg_ok(i.rn) && reg_ok(i.rm);
    case Opcode::LSL:
    case Opcode::LSR:
        if (i.form == Form::RegImm) return reg_ok(i.rd) && reg_ok(i.rn) && i.imm <= 31;
        return i.form == Form::RegReg && reg_ok(i.rd) && reg_ok(i.rn) && reg_ok(i.rm);
    case Opcode::UDIV:
    case Opcode::SDIV:
        return i.form == Form::RegReg && !i.set_flags && reg_ok(i.rd) && reg_ok(i.rn) && reg_ok(i.rm);
    case Opcode::RBIT:
        return i.form == Form::Reg && !i.set_flags && reg_ok(i.rd) && reg_ok(i.rm);
    case Opcode::BFI:
    case Opcode::BFC:
    case Opcode::UBFX:
        return i.form == Form::Bitfield && !i.set_flags && reg_ok(i.rd) &&
               (i.op == Opcode::BFC || reg_ok(i.rn)) && i.width >= 1 && i.lsb + i.width <= 32;
    case Opcode::TB:
        return i.form == Form::Table && reg_ok(i.rn) && i.imm >= 1 && i.imm <= 0xFFFF;
    case Opcode::LDR:
    case Opcode::STR:
    case Opcode::LDRB:
    case Opcode::STRB:
    case Opcode::LDRH:
    case Opcode::STRH:
        if (i.form == Form::Literal) return i.op == Opcode::LDR && reg_ok(i.rd) && i.imm <= 0xFFF;
        if (i.form == Form::MemReg) return reg_ok(i.rd) && reg_ok(i.rn) && reg_ok(i.rm);
        return i.form == Form::MemImm && reg_ok(i.rd) && reg_ok(i.rn) && i.imm <= 0xFFF;
    case Opcode::LDM:
    case Opcode::STM:
        return i.form == Form::Multi && reg_ok(i.rn) && i.reglist != 0;
    case Opcode::B:
        return i.form == Form::Branch && branch_in(i.offset, -(1 << 22), (1 << 22) - 2);
    case Opcode::BL:
        return i.form == Form::Branch && i.cond == CondCode::AL && branch_in(i.offset, -(1 << 22), (1 << 22) - 2);
    default:
        return false;
    }
}

Encoded encode(const Instruction& insn) {
    if (insn.width_bits == 16) return encode_narrow(insn);
    if (insn.width_bits == 32) return encode_wide(insn);
    fail(insn, "width must be 16 or 32");
}

std::optional<Instruction> decode(std::uint16_t hw1, std::uint16_t hw2) {
    if (is_wide_prefix(hw1)) return decode_wide(hw1, hw2);
    return decode_narrow(hw1);
}

} // namespace t2sim::isa
