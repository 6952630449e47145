#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "t2sim/common.hpp"

namespace t2sim::memory {

inline constexpr unsigned kLineWords = 8;
inline constexpr unsigned kLineBytes = kLineWords * 4;

struct CacheConfig {
    bool enabled = false;
    unsigned line_count = 64; // power of two
    Cycles fill_cycles_per_line = 12;
    Cycles hit_cycles = 0;
};

// Parity is kept as shadow bits next to the stored bits: a flip recorded by
// inject() marks the tag or the word so the next access that reads it knows
// the stored value is untrustworthy.
struct CacheLine {
    bool valid = false;
    std::uint32_t tag = 0;
    std::array<Word, kLineWords> data{};
    bool tag_parity = false;
    std::uint8_t word_parity = 0; // bit i: word i is marked
};

// Direct-mapped, 8-word lines. Policy (allocate on read miss, write-through,
// error recovery) lives in MemorySystem; this class only stores lines.
class Cache {
public:
    Cache() = default;
    explicit Cache(CacheConfig config);

    const CacheConfig& config() const { return config_; }
    bool enabled() const { return config_.enabled; }

    unsigned index_of(Address addr) const { return (addr / kLineBytes) & (config_.line_count - 1); }
    std::uint32_t tag_of(Address addr) const { return addr / kLineBytes / config_.line_count; }
    static Address line_base(Address addr) { return addr & ~Address{kLineBytes - 1}; }
    Address address_of(unsigned index, std::uint32_t tag) const {
        return (tag * config_.line_count + index) * kLineBytes;
    }

    CacheLine& line(unsigned index) { return lines_[index]; }
    const CacheLine& line(unsigned index) const { return lines_[index]; }
    unsigned line_count() const { return static_cast<unsigned>(lines_.size()); }

    // Exact-match lookup ignoring parity state.
    bool holds(Address addr) const;

    void fill(unsigned index, std::uint32_t tag, const std::array<Word, kLineWords>& data);
    void invalidate(unsigned index) { lines_[index] = CacheLine{}; }
    void invalidate_all();

    std::vector<unsigned> valid_lines() const;

private:
    CacheConfig config_{};
    std::vector<CacheLine> lines_;
};

} // namespace t2sim::memory
