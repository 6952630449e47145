#pragma once

// Random straight-line IT blocks and their branch-form equivalents.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace oracle {

struct ItOp {
    std::string mnemonic; // without condition suffix
    std::string operands;
};

struct ItBlock {
    unsigned cond = 0;      // index into kCondNames
    unsigned count = 1;     // 1..4
    unsigned else_bits = 0; // bit i: slot i is an else slot; bit 0 always clear
    std::vector<ItOp> ops;
};

inline std::string reg_name(unsigned r) { return "r" + std::to_string(r); }

// Data-processing instructions that never touch the flags.
inline ItOp random_op(std::mt19937_64& rng) {
    auto pick = [&](unsigned lo, unsigned hi) { return static_cast<unsigned>(lo + rng() % (hi - lo + 1)); };
    const auto rd = reg_name(pick(0, 12));
    const auto rn = reg_name(pick(0, 12));
    const auto rm = reg_name(pick(0, 12));
    switch (pick(0, 15)) {
    case 0: return {"mov", rd + ", #" + std::to_string(pick(0, 255))};
    case 1: return {"mov", rd + ", " + rm};
    case 2: return {"add", rd + ", " + rn + ", #" + std::to_string(pick(0, 255))};
    case 3: return {"sub", rd + ", " + rn + ", #" + std::to_string(pick(0, 255))};
    case 4: return {"add", rd + ", " + rn + ", " + rm};
    case 5: return {"sub", rd + ", " + rn + ", " + rm};
    case 6: return {"and", rd + ", " + rn + ", " + rm};
    case 7: return {"orr", rd + ", " + rn + ", " + rm};
    case 8: return {"eor", rd + ", " + rn + ", " + rm};
    case 9: return {pick(0, 1) ? "lsl" : "lsr", rd + ", " + rn + ", #" + std::to_string(pick(1, 31))};
    case 10: return {"movw", rd + ", #" + std::to_string(pick(0, 0xFFFF))};
    case 11: return {"movh", rd + ", #" + std::to_string(pick(0, 0xFFFF))};
    case 12: {
        const unsigned lsb = pick(0, 31);
        const unsigned w = pick(1, 32 - lsb);
        const auto f = "#" + std::to_string(lsb) + ", #" + std::to_string(w);
        switch (pick(0, 2)) {
        case 0: return {"bfi", rd + ", " + rn + ", " + f};
        case 1: return {"bfc", rd + ", " + f};
        default: return {"ubfx", rd + ", " + rn + ", " + f};
        }
    }
    case 13: return {"rbit", rd + ", " + rm};
    case 14: return {"udiv", rd + ", " + rn + ", " + rm};
    default: return {"sdiv", rd + ", " + rn + ", " + rm};
    }
}

inline ItBlock random_block(std::mt19937_64& rng) {
    ItBlock b;
    b.cond = static_cast<unsigned>(rng() % 15);
    b.count = 1 + static_cast<unsigned>(rng() % 4);
    b.else_bits = b.cond == 14 ? 0u : static_cast<unsigned>(rng() % 16) & ((1u << b.count) - 2u);
    for (unsigned i = 0; i < b.count; ++i) b.ops.push_back(random_op(rng));
    return b;
}

inline unsigned inverse_cond(unsigned c) { return c ^ 1u; }

inline std::string predicated_source(const ItBlock& b) {
    std::ostringstream s;
    s << "start:\n    it";
    for (unsigned i = 1; i < b.count; ++i) s << (((b.else_bits >> i) & 1u) ? 'e' : 't');
    s << " " << kCondNames[b.cond] << "\n";
    for (unsigned i = 0; i < b.count; ++i) {
        const bool is_else = ((b.else_bits >> i) & 1u) != 0;
        const unsigned c = is_else ? inverse_cond(b.cond) : b.cond;
        s << "    " << b.ops[i].mnemonic << kCondNames[c] << " " << b.ops[i].operands << "\n";
    }
    s << "    halt\n";
    return s.str();
}

// Each slot guarded by a conditional branch around it.
inline std::string branch_source(const ItBlock& b) {
    std::ostringstream s;
    s << "start:\n";
    for (unsigned i = 0; i < b.count; ++i) {
        const bool is_else = ((b.else_bits >> i) & 1u) != 0;
        if (b.cond != 14) {
            const unsigned skip_if = is_else ? b.cond : inverse_cond(b.cond);
            s << "    b" << kCondNames[skip_if] << " skip_" << i << "\n";
        }
        s << "    " << b.ops[i].mnemonic << " " << b.ops[i].operands << "\n";
        s << "skip_" << i << ":\n";
    }
    s << "    halt\n";
    return s.str();
}

} // namespace oracle
