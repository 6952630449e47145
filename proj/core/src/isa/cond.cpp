#include "t2sim/isa/cond.hpp"

#include <array>
#include <cctype>
#include <string>

namespace t2sim::isa {

namespace {
constexpr std::array<std::string_view, kCondCount> kNames = {
    "eq", "ne", "cs", "cc", "mi", "pl", "vs", "vc", "hi", "ls", "ge", "lt", "gt", "le", "al",
};
} // namespace

bool eval_cond(CondCode cond, Flags f) {
    switch (cond) {
    case CondCode::EQ: return f.z;
    case CondCode::NE: return !f.z;
    case CondCode::CS: return f.c;
    case CondCode::CC: return !f.c;
    case CondCode::MI: return f.n;
    case CondCode::PL: return !f.n;
    case CondCode::VS: return f.v;
    case CondCode::VC: return !f.v;
    case CondCode::HI: return f.c && !f.z;
    case CondCode::LS: return !f.c || f.z;
    case CondCode::GE: return f.n == f.v;
    case CondCode::LT: return f.n != f.v;
    case CondCode::GT: return !f.z && f.n == f.v;
    case CondCode::LE: return f.z || f.n != f.v;
    case CondCode::AL: return true;
    }
    return true;
}

CondCode invert(CondCode cond) {
    // Codes come in complementary pairs (EQ/NE, CS/CC, ...).
    return static_cast<CondCode>(static_cast<unsigned>(cond) ^ 1u);
}

std::string_view to_string(CondCode cond) {
    return kNames[static_cast<unsigned>(cond)];
}

std::optional<CondCode> parse_cond(std::string_view text) {
    std::string lower(text);
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (lower == "hs") return CondCode::CS;
    if (lower == "lo") return CondCode::CC;
    for (unsigned i = 0; i < kCondCount; ++i) {
        if (kNames[i] == lower) return static_cast<CondCode>(i);
    }
    return std::nullopt;
}

} // namespace t2sim::isa
