#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "t2sim/common.hpp"
#include "t2sim/isa/instruction.hpp"
#include "t2sim/isa/state.hpp"
#include "t2sim/memory/memory_system.hpp"
#include "t2sim/mpu/mpu.hpp"
#include "t2sim/nvic/nvic.hpp"
#include "t2sim/trace.hpp"

namespace t2sim {

// System-control page. Privileged-only; any unprivileged access aborts.
//   0x000 MPU_CTRL   bit0 enable, bit1 privileged background access
//   0x004 MPU_RNR    region number; writing it loads RBAR/RSIZE/RATTR from the slot
//   0x008 MPU_RBAR   staged base
//   0x00C MPU_RSIZE  staged size in bytes
//   0x010 MPU_RATTR  [2:0] privileged rwx, [5:3] unprivileged rwx, [31] enable; a write commits the slot
//   0x100 NVIC_ISPR  write a line id to pend it; reads give pending lines 0..31 as a mask
//   0x104 NVIC_ISER  write a line id to enable it
//   0x108 NVIC_ICER  write a line id to disable it
//   0x10C PRIMASK    bit0 masks every line except NMI
//   0x110 NVIC_ICPR  write a line id to clear its pending bit
//   0x200 CONTROL    bit0 set: thread mode unprivileged
//   0x300 FAULT_ADDR address of the last abort (read only)
//   0x304 FAULT_KIND 1 + FaultKind of the last abort, 0 if none (read only)
//   0x400 CACHE_CTRL bit0 invalidate I-cache, bit1 invalidate D-cache
inline constexpr Address kSysCtlBase = 0xE000E000u;
inline constexpr Address kSysCtlSize = 0x1000u;

namespace sysctl {
inline constexpr Address kMpuCtrl = 0x000;
inline constexpr Address kMpuRnr = 0x004;
inline constexpr Address kMpuRbar = 0x008;
inline constexpr Address kMpuRsize = 0x00C;
inline constexpr Address kMpuRattr = 0x010;
inline constexpr Address kIspr = 0x100;
inline constexpr Address kIser = 0x104;
inline constexpr Address kIcer = 0x108;
inline constexpr Address kPrimask = 0x10C;
inline constexpr Address kIcpr = 0x110;
inline constexpr Address kControl = 0x200;
inline constexpr Address kFaultAddr = 0x300;
inline constexpr Address kFaultKind = 0x304;
inline constexpr Address kCacheCtrl = 0x400;
} // namespace sysctl

struct CpuConfig {
    Address entry = 0;
    Word initial_sp = 0;
    bool privileged = true;
    bool ldm_interruptible = true;
    Cycles branch_refill_cycles = 2;
    Address vector_table_base = 0;
    std::optional<Address> data_abort_handler;
    std::optional<Address> prefetch_abort_handler;
};

struct SimConfig {
    memory::MemoryConfig memory = memory::default_memory_config();
    mpu::MpuConfig mpu{};
    std::vector<nvic::InterruptLine> lines;
    nvic::NvicCosts nvic_costs{};
    CpuConfig cpu{};
    bool record_trace = true;
};

struct Stimulus {
    Cycles cycle = 0;
    unsigned line = 0;
};

// A soft error fired when the cycle count reaches `at_cycle` (checked at
// instruction boundaries), or just before the `occurrence`-th fetch of `at_pc`.
struct ScheduledInjection {
    std::optional<Cycles> at_cycle;
    std::optional<Address> at_pc;
    unsigned occurrence = 1;
    memory::SoftErrorInjection injection;
};

struct InjectionRecord {
    std::size_t index = 0;
    Cycles cycle = 0;
    Address pc = 0;
    memory::InjectOutcome outcome;
};

enum class RunStatus : std::uint8_t { Running, Halted, Breakpoint, Fault, Lockup, Timeout };
const char* to_string(RunStatus s);

enum class StepKind : std::uint8_t {
    Retired,        // executed, including predicated-off instructions
    ExceptionTaken, // entry, tail-chain or an abort taken instead of retiring
    Stopped,        // halt, breakpoint, unrecoverable fault or lockup
};

// One simulated system: core state plus its memory system, MPU and interrupt
// controller. Not copyable or movable; the memory system holds pointers back
// into it.
class Simulator {
public:
    explicit Simulator(SimConfig config);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    // Registers to their reset values, PC at the entry point, stack pointer loaded.
    void reset();

    StepKind step();
    // Steps until the run stops or the cycle count reaches `cycle_limit`; the
    // limit is checked at instruction boundaries.
    RunStatus run(Cycles cycle_limit);
    // Leaves the breakpoint state; the next fetch steps over the breakpoint.
    void resume();

    void add_stimulus(Stimulus s);
    void schedule_injection(ScheduledInjection inj);

    isa::MachineState& state() { return state_; }
    const isa::MachineState& state() const { return state_; }
    memory::MemorySystem& memory() { return mem_; }
    const memory::MemorySystem& memory() const { return mem_; }
    nvic::Nvic& nvic() { return nvic_; }
    const nvic::Nvic& nvic() const { return nvic_; }
    mpu::MpuConfig& mpu() { return mpu_; }
    const mpu::MpuConfig& mpu() const { return mpu_; }
    const CpuConfig& cpu_config() const { return config_.cpu; }

    Cycles now() const { return now_; }
    RunStatus status() const { return status_; }
    const Counters& counters() const { return counters_; }
    const std::vector<TraceRecord>& trace() const { return trace_; }
    const std::vector<Fault>& faults() const { return faults_; }
    const std::vector<InjectionRecord>& injections() const { return injection_log_; }

    bool privileged_now() const { return nvic_.in_handler() || state_.privileged; }

private:
    class SysCtl;
    struct Exec;

    enum class Outcome : std::uint8_t { Done, Aborted, Interrupted, Stopped };
    enum class AbortSide : std::uint8_t { Data, Prefetch };

    void emit(TraceRecord rec);
    void drain_memory_events(Cycles base);
    void apply_due(Cycles t);
    void fire_pc_injections(Address pc);
    void apply_injection(std::size_t index, Address pc);

    Word reg(const Exec& x, unsigned r) const;
    void write_reg(Exec& x, unsigned r, Word value);
    std::optional<Fault> data_access(Exec& x, Address addr, unsigned size, AccessKind kind, Word& value);

    Outcome execute(Exec& x);
    Outcome exec_multi(Exec& x);

    StepKind raise_abort(AbortSide side, Fault fault, Cycles cost, Address pc);
    StepKind stop(RunStatus status, Address pc);
    bool push_frame(Address return_address);
    void pop_frame();
    bool enter_line(unsigned id);
    void exception_return();

    SimConfig config_;
    isa::MachineState state_;
    memory::MemorySystem mem_;
    mpu::MpuConfig mpu_;
    nvic::Nvic nvic_;
    Counters counters_{};
    Cycles now_ = 0;
    RunStatus status_ = RunStatus::Running;
    bool resume_pending_ = false;

    std::vector<TraceRecord> trace_;
    std::vector<Fault> faults_;
    std::vector<Stimulus> stimuli_;
    std::size_t next_stimulus_ = 0;
    std::vector<ScheduledInjection> injections_;
    std::vector<unsigned> injection_seen_;
    std::vector<bool> injection_done_;
    std::vector<InjectionRecord> injection_log_;

    // Fault information published through the system-control page.
    Address last_fault_address_ = 0;
    Word last_fault_kind_ = 0;
    std::optional<FaultKind> device_fault_;
    unsigned mpu_rnr_ = 0;
    Address mpu_rbar_ = 0;
    std::uint64_t mpu_rsize_ = mpu::kMinRegionSize;

    std::unique_ptr<SysCtl> sysctl_;
};

} // namespace t2sim
