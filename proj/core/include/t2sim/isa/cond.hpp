#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace t2sim::isa {

enum class CondCode : std::uint8_t {
    EQ = 0, NE, CS, CC, MI, PL, VS, VC, HI, LS, GE, LT, GT, LE, AL,
};

inline constexpr unsigned kCondCount = 15;

struct Flags {
    bool n = false;
    bool z = false;
    bool c = false;
    bool v = false;

    friend bool operator==(const Flags&, const Flags&) = default;
};

bool eval_cond(CondCode cond, Flags flags);

// Logical inverse; undefined for AL (there is no "never" code), callers
// reject AL before asking.
CondCode invert(CondCode cond);

std::string_view to_string(CondCode cond);
std::optional<CondCode> parse_cond(std::string_view text);

} // namespace t2sim::isa
