#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace t2sim {

using Word = std::uint32_t;
using Address = std::uint32_t;
using Cycles = std::uint64_t;

inline constexpr unsigned kRegCount = 16;
inline constexpr unsigned kSP = 13;
inline constexpr unsigned kLR = 14;
inline constexpr unsigned kPC = 15;

// Raised for malformed simulator configuration (region layout, MPU slots,
// interrupt lines, FPB capacity). Simulated-program faults are values, not
// exceptions; see Fault in trace.hpp.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Privilege : std::uint8_t { Unprivileged, Privileged };

enum class AccessKind : std::uint8_t { Read, Write, Execute };

inline const char* to_string(AccessKind k) {
    switch (k) {
    case AccessKind::Read: return "read";
    case AccessKind::Write: return "write";
    case AccessKind::Execute: return "execute";
    }
    return "?";
}

} // namespace t2sim
