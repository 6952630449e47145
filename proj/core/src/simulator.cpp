#include "t2sim/simulator.hpp"

#include <algorithm>
#include <bit>
#include <string>
#include <utility>

#include "t2sim/isa/encoding.hpp"
#include "t2sim/isa/ops.hpp"

namespace t2sim {

using isa::Opcode;
using isa::Form;

const char* to_string(RunStatus s) {
    switch (s) {
    case RunStatus::Running: return "running";
    case RunStatus::Halted: return "halted";
    case RunStatus::Breakpoint: return "breakpoint";
    case RunStatus::Fault: return "fault";
    case RunStatus::Lockup: return "lockup";
    case RunStatus::Timeout: return "timeout";
    }
    return "?";
}

namespace {

std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

std::string hex(Word v) {
    static const char* digits = "0123456789abcdef";
    std::string s = "0x00000000";
    for (int i = 0; i < 8; ++i) s[9 - i] = digits[(v >> (4 * i)) & 0xFu];
    return s;
}

FaultKind mpu_fault_kind(mpu::Decision d) {
    return d == mpu::Decision::NoRegion ? FaultKind::MpuNoRegion : FaultKind::MpuPermDenied;
}

} // namespace

// In-flight instruction.
struct Simulator::Exec {
    Address pc = 0;
    isa::Instruction insn;
    Cycles cost = 0;
    isa::ItState it_before;
    std::optional<Address> branch_target;
    std::optional<Fault> fault;
    bool halt = false;
    bool filled_line = false;
};

// ------------------------------------------------------------------ sysctl

class Simulator::SysCtl : public memory::DeviceHandler {
public:
    explicit SysCtl(Simulator& sim) : sim_(sim) {}

    Access device_read(Address addr, unsigned size) override {
        if (addr < kSysCtlBase || addr - kSysCtlBase >= kSysCtlSize) return {0, false, false};
        if (size != 4) return fault(FaultKind::Bus);
        const Address off = addr - kSysCtlBase;
        auto& mpu = sim_.mpu_;
        switch (off) {
        case sysctl::kMpuCtrl: return ok((mpu.enabled ? 1u : 0u) | (mpu.background_privileged_allowed ? 2u : 0u));
        case sysctl::kMpuRnr: return ok(sim_.mpu_rnr_);
        case sysctl::kMpuRbar: return ok(sim_.mpu_rbar_);
        case sysctl::kMpuRsize: return ok(static_cast<Word>(sim_.mpu_rsize_));
        case sysctl::kMpuRattr: {
            const auto& r = mpu.regions[sim_.mpu_rnr_];
            return ok(r.privileged.bits() | (r.unprivileged.bits() << 3) | (r.enabled ? 0x80000000u : 0u));
        }
        case sysctl::kIspr: {
            Word mask = 0;
            for (const auto& l : sim_.nvic_.lines()) {
                if (l.id < 32 && sim_.nvic_.has_line(l.id) && l.pending) mask |= 1u << l.id;
            }
            return ok(mask);
        }
        case sysctl::kPrimask: return ok(sim_.nvic_.primask() ? 1u : 0u);
        case sysctl::kControl: return ok(sim_.state_.privileged ? 0u : 1u);
        case sysctl::kFaultAddr: return ok(sim_.last_fault_address_);
        case sysctl::kFaultKind: return ok(sim_.last_fault_kind_);
        default: return fault(FaultKind::Bus);
        }
    }

    Access device_write(Address addr, unsigned size, Word value) override {
        if (addr < kSysCtlBase || addr - kSysCtlBase >= kSysCtlSize) return {0, false, false};
        if (size != 4) return fault(FaultKind::Bus);
        const Address off = addr - kSysCtlBase;
        auto& mpu = sim_.mpu_;
        auto& nv = sim_.nvic_;
        switch (off) {
        case sysctl::kMpuCtrl:
            mpu.enabled = (value & 1u) != 0;
            mpu.background_privileged_allowed = (value & 2u) != 0;
            return ok(0);
        case sysctl::kMpuRnr:
            if (value >= mpu::kRegionCount) return fault(FaultKind::MpuConfig);
            sim_.mpu_rnr_ = value;
            sim_.mpu_rbar_ = mpu.regions[value].base;
            sim_.mpu_rsize_ = mpu.regions[value].size;
            return ok(0);
        case sysctl::kMpuRbar: sim_.mpu_rbar_ = value; return ok(0);
        case sysctl::kMpuRsize: sim_.mpu_rsize_ = value == 0 ? mpu::kMaxRegionSize : value; return ok(0);
        case sysctl::kMpuRattr: {
            mpu::MpuRegion r;
            r.base = sim_.mpu_rbar_;
            r.size = sim_.mpu_rsize_;
            r.privileged = mpu::Perms::from_bits(value & 7u);
            r.unprivileged = mpu::Perms::from_bits((value >> 3) & 7u);
            r.enabled = (value & 0x80000000u) != 0;
            try {
                if (mpu::configure_region(mpu, sim_.mpu_rnr_, r, sim_.privileged_now()) !=
                    mpu::ConfigureOutcome::Ok) {
                    return fault(FaultKind::MpuPermDenied);
                }
            } catch (const ConfigError&) {
                return fault(FaultKind::MpuConfig);
            }
            return ok(0);
        }
        case sysctl::kIspr:
        case sysctl::kIser:
        case sysctl::kIcer:
        case sysctl::kIcpr:
            if (!nv.has_line(value)) return fault(FaultKind::Bus);
            if (off == sysctl::kIspr) {
                nv.pend(value);
                sim_.emit({sim_.now_, sim_.state_.pc(), EventKind::Pend, 0, {{"line", i64(value)}, {"source", std::string("software")}}});
            } else if (off == sysctl::kIser) {
                nv.set_enabled(value, true);
            } else if (off == sysctl::kIcer) {
                nv.set_enabled(value, false);
            } else {
                nv.clear_pending(value);
            }
            return ok(0);
        case sysctl::kPrimask: nv.set_primask((value & 1u) != 0); return ok(0);
        case sysctl::kControl: sim_.state_.privileged = (value & 1u) == 0; return ok(0);
        case sysctl::kCacheCtrl:
            if (value & 1u) sim_.mem_.icache().invalidate_all();
            if (value & 2u) sim_.mem_.dcache().invalidate_all();
            return ok(0);
        default: return fault(FaultKind::Bus);
        }
    }

private:
    static Access ok(Word v) { return {v, false, true}; }
    Access fault(FaultKind kind) {
        sim_.device_fault_ = kind;
        return {0, true, true};
    }

    Simulator& sim_;
};

// ------------------------------------------------------------ construction

Simulator::Simulator(SimConfig config)
    : config_(std::move(config)),
      mem_(config_.memory),
      mpu_(config_.mpu),
      nvic_(config_.lines, config_.nvic_costs),
      sysctl_(std::make_unique<SysCtl>(*this)) {
    for (const auto& r : mpu_.regions) {
        if (r.enabled) mpu::validate_region(r);
    }
    mem_.set_counters(&counters_);
    mem_.set_device_handler(sysctl_.get());
    reset();
}

Simulator::~Simulator() = default;

void Simulator::reset() {
    state_ = isa::MachineState{};
    state_.pc() = config_.cpu.entry & ~Address{1};
    state_.sp() = config_.cpu.initial_sp;
    state_.privileged = config_.cpu.privileged;
    status_ = RunStatus::Running;
}

void Simulator::add_stimulus(Stimulus s) {
    if (!nvic_.has_line(s.line)) throw ConfigError("stimulus names unknown interrupt line " + std::to_string(s.line));
    auto pos = std::upper_bound(stimuli_.begin() + static_cast<std::ptrdiff_t>(next_stimulus_), stimuli_.end(), s,
                                [](const Stimulus& a, const Stimulus& b) { return a.cycle < b.cycle; });
    stimuli_.insert(pos, s);
}

void Simulator::schedule_injection(ScheduledInjection inj) {
    if (!inj.at_cycle && !inj.at_pc) throw ConfigError("soft-error injection needs at_cycle or at_pc");
    if (inj.occurrence == 0) throw ConfigError("soft-error occurrence counts from 1");
    injections_.push_back(std::move(inj));
    injection_seen_.push_back(0);
    injection_done_.push_back(false);
}

void Simulator::resume() {
    if (status_ == RunStatus::Breakpoint) {
        status_ = RunStatus::Running;
        resume_pending_ = true;
    }
}

// ------------------------------------------------------------------ events

void Simulator::emit(TraceRecord rec) {
    if (config_.record_trace) trace_.push_back(std::move(rec));
}

void Simulator::drain_memory_events(Cycles base) {
    for (auto& ev : mem_.drain_events()) {
        if (ev.cost != 0) ev.detail.push_back({"cycles", i64(ev.cost)});
        ev.detail.insert(ev.detail.begin(), {"address", hex(ev.address)});
        emit({base + ev.offset, state_.pc(), ev.kind, 0, std::move(ev.detail)});
    }
}

void Simulator::apply_due(Cycles t) {
    while (next_stimulus_ < stimuli_.size() && stimuli_[next_stimulus_].cycle <= t) {
        const auto& s = stimuli_[next_stimulus_++];
        nvic_.pend(s.line);
        emit({t, state_.pc(), EventKind::Pend, 0, {{"line", i64(s.line)}, {"requested", i64(s.cycle)}}});
    }
    for (std::size_t i = 0; i < injections_.size(); ++i) {
        if (!injection_done_[i] && injections_[i].at_cycle && *injections_[i].at_cycle <= t && !injections_[i].at_pc) {
            apply_injection(i, state_.pc());
        }
    }
}

void Simulator::fire_pc_injections(Address pc) {
    for (std::size_t i = 0; i < injections_.size(); ++i) {
        const auto& inj = injections_[i];
        if (injection_done_[i] || !inj.at_pc || *inj.at_pc != pc) continue;
        if (inj.at_cycle && now_ < *inj.at_cycle) continue;
        if (++injection_seen_[i] >= inj.occurrence) apply_injection(i, pc);
    }
}

void Simulator::apply_injection(std::size_t index, Address pc) {
    injection_done_[index] = true;
    const auto& inj = injections_[index].injection;
    auto out = mem_.inject(inj);
    if (out.applied) {
        emit({now_, pc, EventKind::SoftErrorInjected, 0,
              {{"target", std::string(memory::to_string(inj.target))},
               {"line", i64(out.line)},
               {"address", hex(out.address)},
               {"word", i64(inj.word)},
               {"bit", i64(inj.bit)}}});
    } else {
        emit({now_, pc, EventKind::Warning, 0, {{"message", out.warning}}});
    }
    injection_log_.push_back({index, now_, pc, std::move(out)});
}

// ---------------------------------------------------------------- stepping

RunStatus Simulator::run(Cycles cycle_limit) {
    while (status_ == RunStatus::Running) {
        if (now_ >= cycle_limit) {
            status_ = RunStatus::Timeout;
            emit({now_, state_.pc(), EventKind::Timeout, 0, {{"limit", i64(cycle_limit)}}});
            break;
        }
        step();
    }
    return status_;
}

StepKind Simulator::stop(RunStatus status, Address pc) {
    status_ = status;
    emit({now_, pc, EventKind::Halt, 0, {{"status", std::string(to_string(status))}}});
    return StepKind::Stopped;
}

StepKind Simulator::step() {
    if (status_ != RunStatus::Running) return StepKind::Stopped;

    apply_due(now_);
    if (auto id = nvic_.arbitrate(nvic_.current_priority())) {
        enter_line(*id);
        return StepKind::ExceptionTaken;
    }

    const Address pc = state_.pc();
    fire_pc_injections(pc);

    const bool honor_breakpoints = !resume_pending_;
    resume_pending_ = false;
    if (honor_breakpoints && mem_.fpb().breakpoint_at(pc)) {
        ++counters_.breakpoints;
        emit({now_, pc, EventKind::Breakpoint, 0, {}});
        status_ = RunStatus::Breakpoint;
        return StepKind::Stopped;
    }

    const auto exec_check = mpu::check_access(mpu_, pc, 2, AccessKind::Execute, privileged_now());
    if (!exec_check.allowed()) {
        ++counters_.mpu_faults;
        emit({now_, pc, EventKind::MpuFault, 0,
              {{"address", hex(pc)}, {"access", std::string("execute")}, {"privileged", i64(privileged_now())}}});
        return raise_abort(AbortSide::Prefetch, {mpu_fault_kind(exec_check.decision), pc, pc, AccessKind::Execute, now_},
                           0, pc);
    }

    const auto fetched = mem_.fetch(pc, false);
    drain_memory_events(now_);
    if (fetched.fault != memory::MemFault::None) {
        return raise_abort(AbortSide::Prefetch, {FaultKind::Bus, pc, pc, AccessKind::Execute, now_}, fetched.cycles, pc);
    }
    auto decoded = isa::decode(fetched.halfwords[0], fetched.halfwords[1]);
    if (!decoded || (decoded->op == Opcode::IT && state_.it.active)) {
        faults_.push_back({FaultKind::Undefined, pc, pc, AccessKind::Execute, now_});
        now_ += fetched.cycles;
        return stop(RunStatus::Fault, pc);
    }

    Exec x;
    x.pc = pc;
    x.insn = *decoded;
    x.cost = fetched.cycles + 1;
    x.it_before = state_.it;
    const isa::MachineState snapshot = state_;

    bool pass = true;
    if (state_.it.active) {
        const auto cond = state_.it.current_cond();
        state_.it.advance();
        pass = isa::eval_cond(cond, state_.flags);
    }
    if (!pass) {
        ++counters_.skipped;
        ++counters_.retired;
        state_.pc() = pc + x.insn.size_bytes();
        now_ += x.cost;
        emit({now_, pc, EventKind::Retire, x.cost, {{"insn", isa::disassemble(x.insn)}, {"skipped", i64(1)}}});
        return StepKind::Retired;
    }

    switch (execute(x)) {
    case Outcome::Interrupted:
        return StepKind::ExceptionTaken;
    case Outcome::Stopped:
        now_ += x.cost;
        state_ = snapshot;
        return stop(RunStatus::Fault, pc);
    case Outcome::Aborted:
        state_ = snapshot;
        return raise_abort(AbortSide::Data, *x.fault, x.cost, pc);
    case Outcome::Done:
        break;
    }

    bool exc_return = false;
    if (x.branch_target) {
        x.cost += config_.cpu.branch_refill_cycles;
        if (nvic_.in_handler() && nvic::is_exc_return(*x.branch_target)) {
            exc_return = true;
        } else {
            state_.pc() = *x.branch_target & ~Address{1};
        }
    } else {
        state_.pc() = pc + x.insn.size_bytes();
    }
    if (state_.restart_pc && *state_.restart_pc == pc &&
        (x.insn.op == Opcode::LDM || x.insn.op == Opcode::STM)) {
        state_.restart_pc.reset();
    }
    ++counters_.retired;
    now_ += x.cost;
    emit({now_, pc, EventKind::Retire, x.cost, {{"insn", isa::disassemble(x.insn)}}});

    if (x.halt) return stop(RunStatus::Halted, pc);
    if (exc_return) exception_return();
    return StepKind::Retired;
}

// --------------------------------------------------------------- operands

Word Simulator::reg(const Exec& x, unsigned r) const {
    return r == kPC ? x.pc + 4 : state_.regs[r];
}

void Simulator::write_reg(Exec& x, unsigned r, Word value) {
    if (r == kPC) {
        x.branch_target = value;
    } else {
        state_.regs[r] = value;
    }
}

std::optional<Fault> Simulator::data_access(Exec& x, Address addr, unsigned size, AccessKind kind, Word& value) {
    if (addr % size != 0) return Fault{FaultKind::Alignment, addr, x.pc, kind, now_ + x.cost};
    const bool priv = privileged_now();
    if (!priv && addr >= kSysCtlBase && addr - kSysCtlBase < kSysCtlSize) {
        ++counters_.mpu_faults;
        emit({now_ + x.cost, x.pc, EventKind::MpuFault, 0,
              {{"address", hex(addr)}, {"access", std::string(to_string(kind))}, {"privileged", i64(0)},
               {"reason", std::string("system_control")}}});
        return Fault{FaultKind::MpuPermDenied, addr, x.pc, kind, now_ + x.cost};
    }
    const auto chk = mpu::check_access(mpu_, addr, size, kind, priv);
    if (!chk.allowed()) {
        ++counters_.mpu_faults;
        std::vector<TraceField> detail{{"address", hex(addr)},
                                       {"access", std::string(to_string(kind))},
                                       {"privileged", i64(priv)},
                                       {"reason", std::string(to_string(mpu_fault_kind(chk.decision)))}};
        if (chk.region) detail.push_back({"region", i64(*chk.region)});
        emit({now_ + x.cost, x.pc, EventKind::MpuFault, 0, std::move(detail)});
        return Fault{mpu_fault_kind(chk.decision), addr, x.pc, kind, now_ + x.cost};
    }

    device_fault_.reset();
    const Cycles start = now_ + x.cost;
    const auto res = kind == AccessKind::Write ? mem_.write(addr, size, value) : mem_.read(addr, size);
    drain_memory_events(start);
    x.cost += res.cycles;
    x.filled_line = res.filled_line;
    if (res.fault == memory::MemFault::Bus) {
        const FaultKind k = device_fault_.value_or(FaultKind::Bus);
        return Fault{k, addr, x.pc, kind, now_ + x.cost};
    }
    if (res.fault == memory::MemFault::DcacheParity) {
        return Fault{FaultKind::DcacheParity, addr, x.pc, kind, now_ + x.cost};
    }
    if (kind != AccessKind::Write) value = res.value;
    return std::nullopt;
}

// --------------------------------------------------------------- execute

Simulator::Outcome Simulator::execute(Exec& x) {
    const auto& i = x.insn;
    auto& flags = state_.flags;
    auto set_nz = [&](Word v) {
        flags.n = (v >> 31) != 0;
        flags.z = v == 0;
    };
    auto operand2 = [&]() -> Word { return (i.form == Form::RegImm || i.form == Form::Imm) ? i.imm : reg(x, i.rm); };

    switch (i.op) {
    case Opcode::MOV: {
        const Word v = i.form == Form::Imm ? i.imm : reg(x, i.rm);
        if (i.set_flags) set_nz(v);
        write_reg(x, i.rd, v);
        return Outcome::Done;
    }
    case Opcode::MOVW:
    case Opcode::MOVH:
        write_reg(x, i.rd,
                  isa::exec_mov_halves(i.op == Opcode::MOVW ? isa::HalfMove::MOVW : isa::HalfMove::MOVH,
                                       state_.regs[i.rd], static_cast<std::uint16_t>(i.imm)));
        return Outcome::Done;
    case Opcode::ADD:
    case Opcode::SUB: {
        const Word a = reg(x, i.rn);
        const Word b = operand2();
        const auto r = i.op == Opcode::ADD ? isa::add_with_carry(a, b, false) : isa::add_with_carry(a, ~b, true);
        if (i.set_flags) flags = r.flags;
        write_reg(x, i.rd, r.value);
        return Outcome::Done;
    }
    case Opcode::CMP:
        flags = isa::add_with_carry(reg(x, i.rn), ~operand2(), true).flags;
        return Outcome::Done;
    case Opcode::AND:
    case Opcode::ORR:
    case Opcode::EOR: {
        const Word a = reg(x, i.rn);
        const Word b = operand2();
        const Word v = i.op == Opcode::AND ? (a & b) : i.op == Opcode::ORR ? (a | b) : (a ^ b);
        if (i.set_flags) set_nz(v);
        write_reg(x, i.rd, v);
        return Outcome::Done;
    }
    case Opcode::LSL:
    case Opcode::LSR: {
        const unsigned amount = i.form == Form::RegImm ? i.imm : (reg(x, i.rm) & 0xFFu);
        const auto r = i.op == Opcode::LSL ? isa::shift_left(reg(x, i.rn), amount, flags.c)
                                           : isa::shift_right(reg(x, i.rn), amount, flags.c);
        if (i.set_flags) {
            set_nz(r.value);
            flags.c = r.carry;
        }
        write_reg(x, i.rd, r.value);
        return Outcome::Done;
    }
    case Opcode::UDIV:
    case Opcode::SDIV: {
        const auto r = isa::exec_divide(i.op == Opcode::SDIV, reg(x, i.rn), reg(x, i.rm));
        if (r.divide_by_zero) {
            ++counters_.div_by_zero;
            emit({now_ + x.cost, x.pc, EventKind::DivByZero, 0, {{"dividend", hex(reg(x, i.rn))}}});
        }
        write_reg(x, i.rd, r.quotient);
        return Outcome::Done;
    }
    case Opcode::BFI:
    case Opcode::BFC:
    case Opcode::UBFX: {
        const auto kind = i.op == Opcode::BFI ? isa::BitfieldKind::BFI
                          : i.op == Opcode::BFC ? isa::BitfieldKind::BFC
                                                : isa::BitfieldKind::UBFX;
        const Word rn = i.op == Opcode::BFC ? 0 : reg(x, i.rn);
        write_reg(x, i.rd, isa::exec_bitfield(kind, state_.regs[i.rd], rn, i.lsb, i.width));
        return Outcome::Done;
    }
    case Opcode::RBIT:
        write_reg(x, i.rd, isa::exec_rbit(reg(x, i.rm)));
        return Outcome::Done;
    case Opcode::B:
        if (i.cond == isa::CondCode::AL || isa::eval_cond(i.cond, flags)) {
            x.branch_target = x.pc + static_cast<Address>(i.offset);
        }
        return Outcome::Done;
    case Opcode::BL:
        state_.lr() = x.pc + i.size_bytes();
        x.branch_target = x.pc + static_cast<Address>(i.offset);
        return Outcome::Done;
    case Opcode::IT: {
        std::array<isa::ItSlot, 4> slots{};
        for (unsigned k = 0; k < i.it_count; ++k) {
            slots[k] = ((i.it_else >> k) & 1u) ? isa::ItSlot::Else : isa::ItSlot::Then;
        }
        auto it = isa::it_begin(i.cond, std::span<const isa::ItSlot>(slots.data(), i.it_count));
        if (!it) {
            x.fault = Fault{FaultKind::Undefined, x.pc, x.pc, AccessKind::Execute, now_ + x.cost};
            faults_.push_back(*x.fault);
            return Outcome::Stopped;
        }
        state_.it = *it;
        return Outcome::Done;
    }
    case Opcode::TB: {
        const Word index = reg(x, i.rn);
        const Address table = x.pc + 4;
        if (index >= i.imm) {
            x.fault = Fault{FaultKind::TableBounds, table, x.pc, AccessKind::Read, now_ + x.cost};
            faults_.push_back(*x.fault);
            emit({now_ + x.cost, x.pc, EventKind::Abort, 0,
                  {{"kind", std::string("table_bounds")}, {"index", i64(index)}, {"entries", i64(i.imm)}}});
            return Outcome::Stopped;
        }
        Word entry = 0;
        if (auto f = data_access(x, table + 2 * index, 2, AccessKind::Read, entry)) {
            x.fault = f;
            return Outcome::Aborted;
        }
        x.branch_target = table + 2 * entry;
        return Outcome::Done;
    }
    case Opcode::LDR:
    case Opcode::LDRB:
    case Opcode::LDRH:
    case Opcode::STR:
    case Opcode::STRB:
    case Opcode::STRH: {
        Address addr = 0;
        if (i.form == Form::Literal) {
            addr = ((x.pc + 4) & ~Address{3}) + i.imm;
        } else if (i.form == Form::MemReg) {
            addr = reg(x, i.rn) + reg(x, i.rm);
        } else {
            addr = reg(x, i.rn) + i.imm;
        }
        const unsigned size = (i.op == Opcode::LDRB || i.op == Opcode::STRB) ? 1
                              : (i.op == Opcode::LDRH || i.op == Opcode::STRH) ? 2
                                                                               : 4;
        const bool store = i.op == Opcode::STR || i.op == Opcode::STRB || i.op == Opcode::STRH;
        Word value = 0;
        if (store) {
            value = reg(x, i.rd);
            if (size < 4) value &= (1u << (8 * size)) - 1u;
        }
        if (auto f = data_access(x, addr, size, store ? AccessKind::Write : AccessKind::Read, value)) {
            x.fault = f;
            return Outcome::Aborted;
        }
        if (!store) write_reg(x, i.rd, value);
        return Outcome::Done;
    }
    case Opcode::LDM:
    case Opcode::STM:
        return exec_multi(x);
    case Opcode::NOP:
        return Outcome::Done;
    case Opcode::HALT:
        x.halt = true;
        return Outcome::Done;
    }
    return Outcome::Done;
}

// Load/store multiple. Loaded values are buffered and committed only when
// every beat has completed, so an interrupted transfer leaves the register
// file untouched and simply runs again from its first beat.
Simulator::Outcome Simulator::exec_multi(Exec& x) {
    const auto& i = x.insn;
    const bool store = i.op == Opcode::STM;
    const Address base = reg(x, i.rn);
    if (base % 4 != 0) {
        x.fault = Fault{FaultKind::Alignment, base, x.pc, store ? AccessKind::Write : AccessKind::Read, now_ + x.cost};
        return Outcome::Aborted;
    }
    const unsigned count = static_cast<unsigned>(std::popcount(i.reglist));
    const bool interruptible = config_.cpu.ldm_interruptible && !mem_.range_touches_device(base, 4ull * count);

    std::array<Word, kRegCount> loaded{};
    unsigned beat = 0;
    for (unsigned r = 0; r < kRegCount; ++r) {
        if (!((i.reglist >> r) & 1u)) continue;
        const Address addr = base + 4 * beat;
        Word value = store ? reg(x, r) : 0;
        if (auto f = data_access(x, addr, 4, store ? AccessKind::Write : AccessKind::Read, value)) {
            x.fault = f;
            return Outcome::Aborted;
        }
        loaded[r] = value;
        ++beat;
        if (interruptible && x.filled_line && beat < count) {
            apply_due(now_ + x.cost);
            if (auto id = nvic_.arbitrate(nvic_.current_priority())) {
                // Abandon at the fill boundary: nothing is committed, the
                // instruction restarts from its first beat after the handler.
                const Address pc = x.pc;
                ++counters_.ldm_interrupted;
                now_ += x.cost;
                emit({now_, pc, EventKind::LdmInterrupted, x.cost,
                      {{"insn", isa::disassemble(i)}, {"beats_done", i64(beat)}, {"beats", i64(count)}}});
                state_.restart_pc = pc;
                state_.pc() = pc;
                state_.it = x.it_before;
                enter_line(*id);
                return Outcome::Interrupted;
            }
        }
    }
    if (!store) {
        for (unsigned r = 0; r < kRegCount; ++r) {
            if ((i.reglist >> r) & 1u) write_reg(x, r, loaded[r]);
        }
    }
    if (i.writeback && !(!store && ((i.reglist >> i.rn) & 1u))) {
        write_reg(x, i.rn, base + 4 * count);
    }
    return Outcome::Done;
}

// ------------------------------------------------------------- exceptions

bool Simulator::push_frame(Address return_address) {
    const Address sp = state_.sp() - nvic::kFrameBytes;
    const std::array<Word, nvic::kFrameWords> frame = {
        state_.regs[0], state_.regs[1], state_.regs[2],  state_.regs[3],
        state_.regs[12], state_.regs[kLR], return_address, isa::pack_status(state_.flags, state_.it),
    };
    for (unsigned k = 0; k < frame.size(); ++k) {
        if (mem_.write(sp + 4 * k, 4, frame[k]).fault != memory::MemFault::None || sp % 4 != 0) return false;
    }
    mem_.drain_events();
    state_.sp() = sp;
    return true;
}

void Simulator::pop_frame() {
    const Address sp = state_.sp();
    std::array<Word, nvic::kFrameWords> frame{};
    for (unsigned k = 0; k < frame.size(); ++k) frame[k] = mem_.read(sp + 4 * k, 4).value;
    mem_.drain_events();
    state_.regs[0] = frame[0];
    state_.regs[1] = frame[1];
    state_.regs[2] = frame[2];
    state_.regs[3] = frame[3];
    state_.regs[12] = frame[4];
    state_.regs[kLR] = frame[5];
    state_.pc() = frame[6] & ~Address{1};
    isa::unpack_status(frame[7], state_.flags, state_.it);
    state_.sp() = sp + nvic::kFrameBytes;
}

bool Simulator::enter_line(unsigned id) {
    const Address pc = state_.pc();
    const int interrupted_priority = nvic_.current_priority();
    if (!push_frame(pc)) {
        faults_.push_back({FaultKind::Lockup, state_.sp(), pc, AccessKind::Write, now_});
        stop(RunStatus::Lockup, pc);
        return false;
    }
    // Late arrivals: anything due by the end of stacking competes again.
    apply_due(now_ + nvic_.costs().stacking);
    if (auto best = nvic_.arbitrate(interrupted_priority)) id = *best;

    const Address vector = config_.cpu.vector_table_base + 4 * id;
    const auto v = mem_.read(vector, 4);
    mem_.drain_events();
    if (v.fault != memory::MemFault::None) {
        faults_.push_back({FaultKind::VectorFetch, vector, pc, AccessKind::Read, now_});
        stop(RunStatus::Fault, pc);
        return false;
    }
    const Cycles cost = nvic_.entry_cycles(v.cycles);
    nvic_.activate_line(id);
    ++counters_.stackings;
    state_.lr() = nvic::kExcReturn;
    state_.pc() = v.value & ~Word{1};
    state_.it = isa::ItState{};
    now_ += cost;
    emit({now_, pc, EventKind::IrqEntry, cost,
          {{"line", i64(id)}, {"handler", hex(state_.pc())}, {"vector_cycles", i64(v.cycles)}}});
    return true;
}

StepKind Simulator::raise_abort(AbortSide side, Fault fault, Cycles cost, Address pc) {
    ++counters_.aborts;
    faults_.push_back(fault);
    last_fault_address_ = fault.address;
    last_fault_kind_ = static_cast<Word>(fault.kind) + 1u;
    now_ += cost;
    emit({now_, pc, EventKind::Abort, cost,
          {{"kind", std::string(to_string(fault.kind))},
           {"address", hex(fault.address)},
           {"access", std::string(to_string(fault.access))},
           {"side", std::string(side == AbortSide::Data ? "data" : "prefetch")}}});

    const auto& handler =
        side == AbortSide::Data ? config_.cpu.data_abort_handler : config_.cpu.prefetch_abort_handler;
    if (nvic_.current_priority() <= nvic::kFaultPriority) {
        faults_.push_back({FaultKind::Lockup, fault.address, pc, fault.access, now_});
        return stop(RunStatus::Lockup, pc);
    }
    if (!handler) return stop(RunStatus::Fault, pc);

    state_.pc() = pc;
    if (!push_frame(pc)) {
        faults_.push_back({FaultKind::Lockup, state_.sp(), pc, AccessKind::Write, now_});
        return stop(RunStatus::Lockup, pc);
    }
    const Cycles entry = nvic_.entry_cycles(0);
    nvic_.activate_abort(side == AbortSide::Data ? nvic::ExceptionSource::DataAbort
                                                 : nvic::ExceptionSource::PrefetchAbort);
    ++counters_.stackings;
    state_.lr() = nvic::kExcReturn;
    state_.pc() = *handler & ~Address{1};
    state_.it = isa::ItState{};
    now_ += entry;
    emit({now_, pc, EventKind::IrqEntry, entry,
          {{"exception", std::string(side == AbortSide::Data ? "data_abort" : "prefetch_abort")},
           {"handler", hex(state_.pc())}}});
    return StepKind::ExceptionTaken;
}

void Simulator::exception_return() {
    const Address pc = state_.pc();
    const auto finished = nvic_.complete();
    apply_due(now_);
    if (auto id = nvic_.arbitrate(nvic_.current_priority())) {
        const Address vector = config_.cpu.vector_table_base + 4 * *id;
        const auto v = mem_.read(vector, 4);
        mem_.drain_events();
        if (v.fault != memory::MemFault::None) {
            faults_.push_back({FaultKind::VectorFetch, vector, pc, AccessKind::Read, now_});
            stop(RunStatus::Fault, pc);
            return;
        }
        const Cycles cost = nvic_.tailchain_cycles(v.cycles);
        nvic_.activate_line(*id);
        ++counters_.tail_chains;
        state_.lr() = nvic::kExcReturn;
        state_.pc() = v.value & ~Word{1};
        now_ += cost;
        emit({now_, pc, EventKind::TailChain, cost,
              {{"line", i64(*id)}, {"handler", hex(state_.pc())}, {"vector_cycles", i64(v.cycles)}}});
        return;
    }
    pop_frame();
    const Cycles cost = nvic_.return_cycles();
    ++counters_.unstackings;
    now_ += cost;
    std::vector<TraceField> detail{{"return_to", hex(state_.pc())}};
    if (finished && finished->source == nvic::ExceptionSource::Line) detail.push_back({"line", i64(finished->line)});
    emit({now_, pc, EventKind::IrqExit, cost, std::move(detail)});
}

} // namespace t2sim
