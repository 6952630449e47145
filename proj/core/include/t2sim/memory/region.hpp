#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "t2sim/common.hpp"

namespace t2sim::memory {

enum class RegionKind : std::uint8_t { Flash, Ram, Tcm, BitbandTarget, BitbandAlias, Device };

std::string_view to_string(RegionKind kind);
std::optional<RegionKind> parse_region_kind(std::string_view text);

inline constexpr std::uint64_t kMaxBitbandTarget = 1u << 20; // 1 MiB
inline constexpr unsigned kAliasBytesPerTargetByte = 8;

struct RegionDescriptor {
    std::string name;
    Address base = 0;
    std::uint64_t length = 0;
    RegionKind kind = RegionKind::Ram;
    bool writable = true;
    bool executable = true;
    bool cached = false;           // fronted by the I/D caches when they are enabled
    Cycles access_cycles = 0;      // wait states per access (flash uses FlashTiming instead)
    std::string alias_of;          // bitband_alias only: name of the paired target

    std::uint64_t end() const { return std::uint64_t{base} + length; }
    bool contains(Address a) const { return a >= base && std::uint64_t{a} < end(); }
    bool contains(Address a, unsigned size) const {
        return a >= base && std::uint64_t{a} + size <= end();
    }
    bool has_storage() const { return kind != RegionKind::BitbandAlias; }
};

struct BitbandLocation {
    Address target_byte = 0;
    unsigned bit = 0;
    friend bool operator==(const BitbandLocation&, const BitbandLocation&) = default;
};

// Ordered, validated set of regions. Construction enforces: non-zero lengths,
// no overlaps, every alias paired with exactly one target of at most 1 MiB,
// and alias length exactly 8x the target length.
class MemoryMap {
public:
    MemoryMap() = default;
    explicit MemoryMap(std::vector<RegionDescriptor> regions);

    const std::vector<RegionDescriptor>& regions() const { return regions_; }

    // Index of the region containing `addr`, or nullopt if unmapped.
    std::optional<std::size_t> find(Address addr) const;
    const RegionDescriptor* region_at(Address addr) const;
    const RegionDescriptor* by_name(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;

    // Byte-per-bit aliasing: alias offset k addresses bit (k mod 8) of
    // target byte (k div 8).
    std::optional<BitbandLocation> translate_bitband(Address addr) const;

private:
    std::vector<RegionDescriptor> regions_; // sorted by base
    std::vector<std::size_t> alias_target_; // per region: paired target index (aliases only)
};

} // namespace t2sim::memory
