#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "t2sim/common.hpp"

namespace t2sim::mpu {

inline constexpr unsigned kRegionCount = 8;
inline constexpr std::uint64_t kMinRegionSize = 32;
inline constexpr std::uint64_t kMaxRegionSize = 1ull << 32;

struct Perms {
    bool read = false;
    bool write = false;
    bool execute = false;

    // bit0 read, bit1 write, bit2 execute
    static Perms from_bits(unsigned bits) { return {(bits & 1u) != 0, (bits & 2u) != 0, (bits & 4u) != 0}; }
    unsigned bits() const { return (read ? 1u : 0u) | (write ? 2u : 0u) | (execute ? 4u : 0u); }
    bool allows(AccessKind kind) const {
        switch (kind) {
        case AccessKind::Read: return read;
        case AccessKind::Write: return write;
        case AccessKind::Execute: return execute;
        }
        return false;
    }
    friend bool operator==(const Perms&, const Perms&) = default;
};

struct MpuRegion {
    Address base = 0;
    std::uint64_t size = kMinRegionSize; // power of two, 32 B .. 4 GiB
    Perms privileged{};
    Perms unprivileged{};
    bool enabled = false;

    bool contains(Address addr) const { return addr >= base && std::uint64_t{addr} < std::uint64_t{base} + size; }
    friend bool operator==(const MpuRegion&, const MpuRegion&) = default;
};

struct MpuConfig {
    std::array<MpuRegion, kRegionCount> regions{};
    bool background_privileged_allowed = true; // privileged accesses outside every region are allowed
    bool enabled = false;
};

enum class Decision : std::uint8_t { Allow, NoRegion, PermDenied };

struct CheckResult {
    Decision decision = Decision::Allow;
    std::optional<unsigned> region; // deciding region, if any

    bool allowed() const { return decision == Decision::Allow; }
};

// The highest-indexed enabled region containing `addr` decides. Pure.
CheckResult check_access(const MpuConfig& config, Address addr, unsigned size, AccessKind kind, bool privileged);

// Throws ConfigError for a size that is not a power of two in [32 B, 4 GiB]
// or a base not aligned to the size.
void validate_region(const MpuRegion& region);

enum class ConfigureOutcome : std::uint8_t { Ok, PermDenied };

// Replaces slot `index`. An unprivileged caller is refused without touching
// the slot; malformed geometry or an index >= 8 throws ConfigError.
ConfigureOutcome configure_region(MpuConfig& config, unsigned index, const MpuRegion& region, bool privileged_caller);

} // namespace t2sim::mpu
