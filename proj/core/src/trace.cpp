#include "t2sim/trace.hpp"

namespace t2sim {

const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::Retire: return "retire";
    case EventKind::FetchNonseq: return "fetch_nonseq";
    case EventKind::Miss: return "miss";
    case EventKind::Fill: return "fill";
    case EventKind::IrqEntry: return "irq_entry";
    case EventKind::TailChain: return "tail_chain";
    case EventKind::IrqExit: return "irq_exit";
    case EventKind::Abort: return "abort";
    case EventKind::Repair: return "repair";
    case EventKind::BitbandWrite: return "bitband_write";
    case EventKind::MpuFault: return "mpu_fault";
    case EventKind::Breakpoint: return "breakpoint";
    case EventKind::Pend: return "pend";
    case EventKind::LdmInterrupted: return "ldm_interrupted";
    case EventKind::DivByZero: return "div_by_zero";
    case EventKind::SoftErrorInjected: return "soft_error_injected";
    case EventKind::Warning: return "warning";
    case EventKind::Halt: return "halt";
    case EventKind::Timeout: return "timeout";
    }
    return "?";
}

const char* to_string(FaultKind k) {
    switch (k) {
    case FaultKind::Bus: return "bus";
    case FaultKind::Alignment: return "alignment";
    case FaultKind::MpuNoRegion: return "mpu_no_region";
    case FaultKind::MpuPermDenied: return "mpu_perm_denied";
    case FaultKind::DcacheParity: return "dcache_parity";
    case FaultKind::Undefined: return "undefined";
    case FaultKind::TableBounds: return "table_bounds";
    case FaultKind::Lockup: return "lockup";
    case FaultKind::VectorFetch: return "vector_fetch";
    case FaultKind::MpuConfig: return "mpu_config";
    case FaultKind::ExceptionReturn: return "exception_return";
    }
    return "?";
}

} // namespace t2sim
