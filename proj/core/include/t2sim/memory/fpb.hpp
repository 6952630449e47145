#pragma once

#include <array>
#include <optional>

#include "t2sim/common.hpp"

namespace t2sim::memory {

inline constexpr unsigned kFpbEntries = 8;

enum class FpbMode : std::uint8_t { Remap, Breakpoint };

struct FpbEntry {
    Address match_address = 0; // word aligned, inside flash
    FpbMode mode = FpbMode::Breakpoint;
    Word remap_value = 0;      // replaces the flash word at match_address
};

// Flash patch and breakpoint unit: eight comparators over flash word
// addresses. Entries may be placed anywhere in flash, adjacent or not.
class FlashPatchUnit {
public:
    // Throws ConfigError for an index outside 0..7, a misaligned address or a
    // match address already used by another entry. Flash membership is
    // checked by MemorySystem, which knows the map.
    void configure(unsigned entry, const FpbEntry& config);
    void clear(unsigned entry);
    void clear_all() { entries_ = {}; }

    const std::optional<FpbEntry>& entry(unsigned index) const { return entries_.at(index); }
    unsigned enabled_count() const;

    // Entry whose match word contains `addr`, if any.
    const FpbEntry* lookup(Address addr) const;
    bool breakpoint_at(Address insn_addr) const;

private:
    std::array<std::optional<FpbEntry>, kFpbEntries> entries_{};
};

} // namespace t2sim::memory
