#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "t2sim/common.hpp"
#include "t2sim/memory/cache.hpp"
#include "t2sim/memory/flash.hpp"
#include "t2sim/memory/fpb.hpp"
#include "t2sim/memory/region.hpp"
#include "t2sim/memory/soft_error.hpp"
#include "t2sim/trace.hpp"

namespace t2sim::memory {

struct MemoryConfig {
    std::vector<RegionDescriptor> regions;
    FlashTiming flash{};
    CacheConfig icache{};
    CacheConfig dcache{};
    Cycles tcm_repair_stall_cycles = 4;
};

// Default desk-scale map: 256 KiB flash at 0, 16 KiB TCM at 0x10000000,
// 64 KiB bit-banded SRAM at 0x20000000 with its 512 KiB alias at 0x22000000,
// and the system-control device page at 0xE000E000.
MemoryConfig default_memory_config();

enum class MemFault : std::uint8_t { None, Bus, DcacheParity };

struct MemResult {
    Word value = 0;
    Cycles cycles = 0;
    MemFault fault = MemFault::None;
    bool filled_line = false; // a cache line fill happened during this access
};

struct FetchResult {
    std::array<std::uint16_t, 2> halfwords{};
    unsigned count = 0;
    Cycles cycles = 0;
    bool breakpoint = false;
    bool nonsequential = false;
    MemFault fault = MemFault::None;
};

// A memory-side event produced while servicing an access. `offset` is the
// number of cycles into the access at which the event completed; the core
// turns it into an absolute trace stamp.
struct MemEvent {
    EventKind kind = EventKind::Miss;
    Address address = 0;
    Cycles offset = 0;
    Cycles cost = 0;
    std::vector<TraceField> detail;
};

// Registers for device regions with side effects (the system-control page).
class DeviceHandler {
public:
    virtual ~DeviceHandler() = default;
    struct Access {
        Word value = 0;
        bool fault = false;
        bool handled = true; // false: fall through to plain storage
    };
    virtual Access device_read(Address addr, unsigned size) = 0;
    virtual Access device_write(Address addr, unsigned size, Word value) = 0;
};

class MemorySystem {
public:
    explicit MemorySystem(MemoryConfig config);

    const MemoryMap& map() const { return map_; }
    const MemoryConfig& config() const { return config_; }

    // Instruction fetch at `pc`: FPB first (breakpoint stops before any
    // timing is charged, remap substitutes the word), then the I-cache for
    // cached regions, otherwise the region's own timing.
    FetchResult fetch(Address pc, bool honor_breakpoints = true);

    // Data side. Callers have already passed the MPU and alignment checks.
    MemResult read(Address addr, unsigned size);
    MemResult write(Address addr, unsigned size, Word value);

    // Timing-free access for loaders, assertions and debuggers. No caches,
    // no FPB, no device side effects.
    bool load(Address addr, std::span<const std::uint8_t> bytes);
    std::optional<Word> peek(Address addr, unsigned size) const;
    bool poke(Address addr, unsigned size, Word value);

    FlashPatchUnit& fpb() { return fpb_; }
    const FlashPatchUnit& fpb() const { return fpb_; }
    // Validates that the match address lies in a flash region, then programs the unit.
    void fpb_configure(unsigned entry, const FpbEntry& config);

    InjectOutcome inject(const SoftErrorInjection& injection);

    Cache& icache() { return icache_; }
    Cache& dcache() { return dcache_; }
    const Cache& icache() const { return icache_; }
    const Cache& dcache() const { return dcache_; }
    FlashStream& flash() { return flash_; }

    void set_device_handler(DeviceHandler* handler) { device_ = handler; }
    void set_counters(Counters* counters) { counters_ = counters; }

    // Events accumulated since the last drain, in occurrence order.
    std::vector<MemEvent> drain_events();

    bool is_device(Address addr) const;
    bool range_touches_device(Address addr, std::uint64_t bytes) const;

private:
    struct Storage {
        std::vector<std::uint8_t> bytes;
        std::vector<std::uint8_t> golden;      // TCM only
        std::vector<std::uint8_t> word_parity; // TCM only, one flag per word
    };

    std::optional<Word> raw_read(std::size_t region, Address addr, unsigned size) const;
    void raw_write(std::size_t region, Address addr, unsigned size, Word value);
    Word line_word_from_backing(Address addr) const;

    MemResult cached_read(std::size_t region, Address addr, unsigned size, Cycles start_offset);
    MemResult tcm_read(std::size_t region, Address addr, unsigned size, Cycles start_offset);
    // Fetch one halfword through the I-cache; appends cycles to `cycles`.
    std::uint16_t icache_halfword(Address addr, Cycles& cycles);
    std::uint16_t plain_halfword(std::size_t region, Address addr, Cycles& cycles);

    void note(EventKind kind, Address addr, Cycles offset, Cycles cost, std::vector<TraceField> detail = {});
    void bump(std::uint64_t Counters::*field, std::uint64_t by = 1);

    MemoryConfig config_;
    MemoryMap map_;
    std::vector<Storage> storage_;
    FlashStream flash_;
    Cache icache_;
    Cache dcache_;
    FlashPatchUnit fpb_;
    DeviceHandler* device_ = nullptr;
    Counters* counters_ = nullptr;
    std::vector<MemEvent> events_;
};

} // namespace t2sim::memory
