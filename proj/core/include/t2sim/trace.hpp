#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "t2sim/common.hpp"

namespace t2sim {

enum class EventKind : std::uint8_t {
    Retire,
    FetchNonseq,
    Miss,
    Fill,
    IrqEntry,
    TailChain,
    IrqExit,
    Abort,
    Repair,
    BitbandWrite,
    MpuFault,
    Breakpoint,
    Pend,
    LdmInterrupted,
    DivByZero,
    SoftErrorInjected,
    Warning,
    Halt,
    Timeout,
};

const char* to_string(EventKind k);

struct TraceField {
    std::string key;
    std::variant<std::int64_t, std::string> value;
};

// One trace line. `cycle` is the simulator time at which the record is
// emitted; records carrying a non-zero `cost` are emitted when the costed
// activity completes, so stamps never decrease. Summing `cost` over a full
// trace reproduces the run's total cycle count.
struct TraceRecord {
    Cycles cycle = 0;
    Address pc = 0;
    EventKind kind = EventKind::Retire;
    Cycles cost = 0;
    std::vector<TraceField> detail;
};

enum class FaultKind : std::uint8_t {
    Bus,
    Alignment,
    MpuNoRegion,
    MpuPermDenied,
    DcacheParity,
    Undefined,
    TableBounds,
    Lockup,
    VectorFetch,
    MpuConfig,
    ExceptionReturn,
};

const char* to_string(FaultKind k);

struct Fault {
    FaultKind kind = FaultKind::Bus;
    Address address = 0;
    Address pc = 0;
    AccessKind access = AccessKind::Read;
    Cycles cycle = 0;
};

// Running totals maintained by the core regardless of whether a trace is kept.
struct Counters {
    std::uint64_t retired = 0;
    std::uint64_t skipped = 0; // predicated-off instructions (also counted in retired)
    std::uint64_t fetch_nonseq = 0;
    std::uint64_t icache_misses = 0;
    std::uint64_t icache_fills = 0;
    std::uint64_t icache_parity_invalidations = 0;
    std::uint64_t icache_tag_errors = 0;
    std::uint64_t dcache_misses = 0;
    std::uint64_t dcache_fills = 0;
    std::uint64_t dcache_tag_errors = 0;
    std::uint64_t stackings = 0;
    std::uint64_t unstackings = 0;
    std::uint64_t tail_chains = 0;
    std::uint64_t aborts = 0;
    std::uint64_t repairs = 0;
    std::uint64_t bitband_writes = 0;
    std::uint64_t mpu_faults = 0;
    std::uint64_t breakpoints = 0;
    std::uint64_t ldm_interrupted = 0;
    std::uint64_t div_by_zero = 0;
    std::uint64_t soft_errors_injected = 0;
    std::uint64_t warnings = 0;
};

} // namespace t2sim
